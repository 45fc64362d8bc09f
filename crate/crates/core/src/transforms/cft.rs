use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::LagSpectrum;
use crate::grid::Signal;
use crate::{Error, Result};

/// `|CFT|` over a (chirp rate, frequency) lattice; `mag[[q, k]]` pairs
/// `crs[q]` with `freqs[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrSpectrum {
    freqs: Vec<f64>,
    crs: Vec<f64>,
    mag: Array2<f64>,
}

impl CrSpectrum {
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn crs(&self) -> &[f64] {
        &self.crs
    }

    pub fn mag(&self) -> &Array2<f64> {
        &self.mag
    }

    /// Index `(q, k)` of the largest magnitude.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut top = f64::NEG_INFINITY;
        for ((q, k), &v) in self.mag.indexed_iter() {
            if v > top {
                top = v;
                best = (q, k);
            }
        }
        best
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<f64> {
    if axis.is_empty() {
        return Err(Error::invalid(name, "axis is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(name, "axis contains non-finite values"));
    }
    if axis.len() == 1 {
        return Ok(1.0);
    }
    let step = axis[1] - axis[0];
    let scale = axis.iter().fold(step.abs(), |m, v| m.max(v.abs()));
    let uniform = axis
        .windows(2)
        .all(|w| w[1] - w[0] > 0.0 && ((w[1] - w[0]) - step).abs() <= 1e-9 * scale);
    if !uniform {
        return Err(Error::invalid(name, "axis must be uniform and strictly increasing"));
    }
    Ok(step)
}

/// Chirp-Fourier transform magnitude
/// `|(1/fs)·Σ_n f(t_n)·e^{−jβ_q t_n²/2}·e^{−jω_k t_n}|` with absolute sample
/// times `t_n`.
pub fn cft(signal: &Signal, freq_axis: &[f64], cr_axis: &[f64]) -> Result<CrSpectrum> {
    let dw = check_axis("freq_axis", freq_axis)?;
    check_axis("cr_axis", cr_axis)?;
    let fs = signal.fs();
    let t0 = signal.t0();
    let x = signal.samples();
    let ls = LagSpectrum::new(freq_axis, dw, 1.0 / fs, 0, x.len());
    let phase0: Vec<Complex64> = freq_axis.iter().map(|&w| Complex64::cis(-w * t0) / fs).collect();
    let times = signal.times();
    let zero = Complex64::new(0.0, 0.0);

    let rows: Vec<Vec<f64>> = cr_axis
        .par_iter()
        .map_init(
            || (ls.scratch(), vec![zero; x.len()], vec![zero; freq_axis.len()]),
            |(scratch, lags, out), &beta| {
                for ((l, &v), &t) in lags.iter_mut().zip(x).zip(&times) {
                    *l = v * Complex64::cis(-0.5 * beta * t * t);
                }
                ls.eval(lags, out, scratch);
                out.iter().zip(&phase0).map(|(z, p)| (z * p).norm()).collect()
            },
        )
        .collect();

    let mag = Array2::from_shape_fn((cr_axis.len(), freq_axis.len()), |(q, k)| rows[q][k]);
    Ok(CrSpectrum {
        freqs: freq_axis.to_vec(),
        crs: cr_axis.to_vec(),
        mag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn axis(lo: f64, step: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn tone_peaks_at_zero_chirp_rate() {
        let fs = 256.0;
        let s = Signal::from_fn(fs, 0.0, 512, |t| Complex64::cis(2.0 * PI * 30.0 * t)).unwrap();
        let freqs = axis(0.0, 2.0 * PI * 0.5, 256);
        let crs = axis(-2.0 * PI * 20.0, 2.0 * PI * 2.0, 21);
        let spec = cft(&s, &freqs, &crs).unwrap();
        let (q, k) = spec.argmax();
        assert!(spec.crs()[q].abs() < 1e-9);
        assert!((spec.freqs()[k] - 2.0 * PI * 30.0).abs() < 1e-9);
    }

    fn brute_argmax(s: &Signal, freqs: &[f64], crs: &[f64]) -> (usize, usize) {
        let mut best = (0, 0, f64::MIN);
        for (q, &b) in crs.iter().enumerate() {
            for (k, &w) in freqs.iter().enumerate() {
                let v: Complex64 = s
                    .samples()
                    .iter()
                    .zip(s.times())
                    .map(|(x, t)| x * Complex64::cis(-0.5 * b * t * t - w * t))
                    .sum();
                if v.norm() > best.2 {
                    best = (q, k, v.norm());
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn chirp_peaks_at_its_parameters() {
        let fs = 256.0;
        let (a, b) = (2.0 * PI * 20.0, 2.0 * PI * 80.0);
        let s = Signal::from_fn(fs, 0.0, 256, |t| Complex64::cis(a * t + 0.5 * b * t * t)).unwrap();
        let freqs = axis(0.0, 2.0 * PI, 64);
        let crs = axis(0.0, 2.0 * PI * 10.0, 17);
        let spec = cft(&s, &freqs, &crs).unwrap();
        let (q, k) = spec.argmax();
        assert!((spec.crs()[q] - b).abs() < 1e-9);
        assert!((spec.freqs()[k] - a).abs() < 1e-9);
        assert_eq!((q, k), brute_argmax(&s, &freqs, &crs));
    }

    #[test]
    fn fast_path_matches_shifted_axis() {
        let fs = 64.0;
        let s = Signal::from_fn(fs, 0.25, 64, |t| Complex64::cis(9.0 * t + 3.0 * t * t)).unwrap();
        let dw = 2.0 * PI * fs / 128.0;
        let freqs = axis(0.0, dw, 40);
        let shifted = axis(1e-8, dw, 40);
        let crs = axis(-5.0, 1.0, 11);
        let a = cft(&s, &freqs, &crs).unwrap();
        let b = cft(&s, &shifted, &crs).unwrap();
        for (x, y) in a.mag().iter().zip(b.mag()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn equal_chirps_give_comparable_peaks() {
        let fs = 256.0;
        let s = Signal::from_fn(fs, 0.0, 512, |t| {
            Complex64::cis(2.0 * PI * (20.0 * t + 10.0 * t * t))
                + Complex64::cis(2.0 * PI * (90.0 * t - 10.0 * t * t))
        })
        .unwrap();
        let freqs = axis(0.0, 2.0 * PI * 0.5, 256);
        let crs = axis(-2.0 * PI * 30.0, 2.0 * PI * 2.0, 31);
        let spec = cft(&s, &freqs, &crs).unwrap();
        let peak_near = |b: f64, w: f64| {
            let q = ((b - crs[0]) / (2.0 * PI * 2.0)).round() as usize;
            let k = (w / (2.0 * PI * 0.5)).round() as usize;
            spec.mag()[[q, k]]
        };
        let p1 = peak_near(2.0 * PI * 20.0, 2.0 * PI * 20.0);
        let p2 = peak_near(-2.0 * PI * 20.0, 2.0 * PI * 90.0);
        assert!((20.0 * (p1 / p2).log10()).abs() < 3.0);
    }

    #[test]
    fn rejects_bad_axes() {
        let s = Signal::from_real(&[1.0; 16], 16.0, 0.0).unwrap();
        assert!(cft(&s, &[], &[0.0]).is_err());
        assert!(cft(&s, &[0.0, 1.0, 3.0], &[0.0]).is_err());
    }
}
