use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::frame_indices;
use super::kernel::LagSpectrum;
use crate::grid::{RealTf, Signal, TfGrid, TfMatrix};
use crate::{Error, Result};

/// Discrete Wigner-Ville distribution.
///
/// `W[k][n] = (2/fs)·Σ_m f[c_n+m]·f*[c_n−m]·e^{−jω_k·2m/fs}`, summed over all
/// lags that stay inside the record. The lag step is `2/fs`, so the
/// frequency axis has period `π·fs`.
pub fn wvd(signal: &Signal, grid: &TfGrid) -> Result<RealTf> {
    if signal.len() < 8 {
        return Err(Error::invalid(
            "signal",
            format!("WVD needs at least 8 samples, got {}", signal.len()),
        ));
    }
    let frames = frame_indices(signal, grid)?;
    let x = signal.samples();
    let n = x.len();
    let step = 2.0 / signal.fs();
    let max_lag = frames.iter().map(|&c| c.min(n - 1 - c)).max().unwrap_or(0);
    let span = 2 * max_lag + 1;
    let ls = LagSpectrum::new(grid.freqs(), grid.dw(), step, -(max_lag as isize), span);
    let nk = grid.n_freqs();
    let zero = Complex64::new(0.0, 0.0);

    let columns: Vec<Vec<f64>> = frames
        .par_iter()
        .map_init(
            || (ls.scratch(), vec![zero; span], vec![zero; nk]),
            |(scratch, lags, out), &c| {
                lags.iter_mut().for_each(|z| *z = zero);
                let reach = c.min(n - 1 - c);
                for m in 0..=reach {
                    let r = x[c + m] * x[c - m].conj();
                    lags[max_lag + m] = r;
                    lags[max_lag - m] = r.conj();
                }
                ls.eval(lags, out, scratch);
                out.iter().map(|z| z.re * step).collect()
            },
        )
        .collect();

    let values = Array2::from_shape_fn((nk, frames.len()), |(k, n)| columns[n][k]);
    TfMatrix::real(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WindowParams;
    use crate::transforms::gaussian;
    use std::f64::consts::PI;

    #[test]
    fn tone_concentrates_at_its_frequency() {
        let fs = 128.0;
        let s = Signal::from_fn(fs, 0.0, 128, |t| Complex64::cis(2.0 * PI * 20.0 * t)).unwrap();
        let dw = PI * fs / 128.0;
        let grid = TfGrid::uniform(0.0, 1.0 / fs, 128, 0.0, dw, 64).unwrap();
        let w = wvd(&s, &grid).unwrap();
        let target = grid.freq_index(2.0 * PI * 20.0).unwrap();
        for n in 16..112 {
            let col = w.values().column(n);
            let k = (0..col.len()).max_by(|&i, &j| col[i].total_cmp(&col[j])).unwrap();
            assert_eq!(k, target, "frame {n}");
        }
    }

    #[test]
    fn chirped_gaussian_matches_closed_form() {
        let fs = 64.0;
        let wp = WindowParams::new(0.5, 3.0).unwrap();
        let len = 257;
        let t0 = -((len / 2) as f64) / fs;
        let s = Signal::from_fn(fs, t0, len, |t| {
            gaussian(t, wp.sigma()) * Complex64::cis(0.5 * wp.beta() * t * t)
        })
        .unwrap();
        let times: Vec<f64> = (-32..=32).map(|i| i as f64 / fs).collect();
        let freqs: Vec<f64> = (0..161).map(|k| -20.0 + k as f64 * 0.25).collect();
        let grid = TfGrid::new(times, freqs).unwrap();
        let w = wvd(&s, &grid).unwrap();
        let (sg, b) = (wp.sigma(), wp.beta());
        let mut err: f64 = 0.0;
        for ((k, n), &v) in w.values().indexed_iter() {
            let (t, om) = (grid.times()[n], grid.freqs()[k]);
            let exact = 2f64.sqrt() * (-t * t / (sg * sg) - sg * sg * (om - b * t).powi(2)).exp();
            err = err.max((v - exact).abs());
        }
        assert!(err / 2f64.sqrt() < 1e-2, "{err}");
    }

    #[test]
    fn rejects_short_signals() {
        let s = Signal::from_real(&[1.0; 7], 8.0, 0.0).unwrap();
        let grid = TfGrid::uniform(0.0, 0.125, 7, 0.0, 1.0, 4).unwrap();
        assert!(wvd(&s, &grid).is_err());
    }
}
