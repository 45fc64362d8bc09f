//! Evaluation of finite lag sums `Σ_l p[l]·exp(−jω_k·l·Δτ)` on a frequency axis.
//!
//! When the axis coincides with DFT bins of some FFT length covering the lag
//! span, one FFT per sum is used; otherwise the sum is evaluated directly.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Largest `K × span` table of phasors kept in memory for the direct path.
const MAX_TABLE: usize = 1 << 23;
/// Largest FFT length the fast path will plan.
const MAX_NFFT: usize = 1 << 22;

enum Plan {
    Fft {
        fft: Arc<dyn Fft<f64>>,
        nfft: usize,
        bins: Vec<usize>,
    },
    Direct {
        table: Option<Vec<Complex64>>,
    },
}

/// Evaluator for lag sums over a fixed lag range `[lo, lo + span)`.
pub(crate) struct LagSpectrum {
    plan: Plan,
    freqs: Vec<f64>,
    lag_step: f64,
    lo: isize,
    span: usize,
}

/// Per-thread working memory.
pub(crate) struct Scratch {
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl LagSpectrum {
    pub fn new(freqs: &[f64], dw: f64, lag_step: f64, lo: isize, span: usize) -> Self {
        let plan = match fft_bins(freqs, dw, lag_step, span) {
            Some((nfft, bins)) => Plan::Fft {
                fft: FftPlanner::new().plan_fft_forward(nfft),
                nfft,
                bins,
            },
            None => {
                let table = (freqs.len() * span <= MAX_TABLE).then(|| {
                    freqs
                        .iter()
                        .flat_map(|&w| {
                            (0..span).map(move |i| {
                                Complex64::cis(-w * (lo + i as isize) as f64 * lag_step)
                            })
                        })
                        .collect()
                });
                Plan::Direct { table }
            }
        };
        LagSpectrum {
            plan,
            freqs: freqs.to_vec(),
            lag_step,
            lo,
            span,
        }
    }

    #[cfg(test)]
    pub fn uses_fft(&self) -> bool {
        matches!(self.plan, Plan::Fft { .. })
    }

    pub fn scratch(&self) -> Scratch {
        match &self.plan {
            Plan::Fft { fft, nfft, .. } => Scratch {
                buf: vec![Complex64::new(0.0, 0.0); *nfft],
                fft: vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            },
            Plan::Direct { .. } => Scratch {
                buf: Vec::new(),
                fft: Vec::new(),
            },
        }
    }

    /// `out[k] = Σ_i lags[i]·exp(−jω_k·(lo + i)·Δτ)`; `lags.len()` must equal
    /// the span.
    pub fn eval(&self, lags: &[Complex64], out: &mut [Complex64], scratch: &mut Scratch) {
        debug_assert_eq!(lags.len(), self.span);
        debug_assert_eq!(out.len(), self.freqs.len());
        match &self.plan {
            Plan::Fft { fft, nfft, bins } => {
                let buf = &mut scratch.buf;
                buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                let n = *nfft as isize;
                for (i, &p) in lags.iter().enumerate() {
                    let l = (self.lo + i as isize).rem_euclid(n) as usize;
                    buf[l] += p;
                }
                fft.process_with_scratch(buf, &mut scratch.fft);
                for (o, &b) in out.iter_mut().zip(bins) {
                    *o = buf[b];
                }
            }
            Plan::Direct { table: Some(table) } => {
                for (o, row) in out.iter_mut().zip(table.chunks_exact(self.span)) {
                    *o = lags.iter().zip(row).map(|(p, e)| p * e).sum();
                }
            }
            Plan::Direct { table: None } => {
                for (o, &w) in out.iter_mut().zip(&self.freqs) {
                    *o = lags
                        .iter()
                        .enumerate()
                        .map(|(i, p)| p * Complex64::cis(-w * (self.lo + i as isize) as f64 * self.lag_step))
                        .sum();
                }
            }
        }
    }
}

/// FFT length and bin indices reproducing `freqs` exactly, if they exist.
///
/// `ω_k·Δτ` must equal `2π·q_k/nfft` for integers `q_k`, which requires the
/// base period `2π/(Δτ·dω)` and the offset `ω_0/dω` to be integers.
fn fft_bins(freqs: &[f64], dw: f64, lag_step: f64, span: usize) -> Option<(usize, Vec<usize>)> {
    let period = 2.0 * PI / (lag_step * dw);
    let p = period.round();
    if !(p >= 1.0) || (period - p).abs() > 1e-9 * period || p > MAX_NFFT as f64 {
        return None;
    }
    let offset = freqs[0] / dw;
    if (offset - offset.round()).abs() > 1e-6 {
        return None;
    }
    let p = p as usize;
    let nfft = p * span.div_ceil(p).max(1);
    if nfft > MAX_NFFT {
        return None;
    }
    let scale = nfft as f64 * lag_step / (2.0 * PI);
    let bins = freqs
        .iter()
        .map(|&w| ((w * scale).round() as i64).rem_euclid(nfft as i64) as usize)
        .collect();
    Some((nfft, bins))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(lags: &[Complex64], lo: isize, freqs: &[f64], step: f64) -> Vec<Complex64> {
        freqs
            .iter()
            .map(|&w| {
                lags.iter()
                    .enumerate()
                    .map(|(i, p)| p * Complex64::cis(-w * (lo + i as isize) as f64 * step))
                    .sum()
            })
            .collect()
    }

    fn lags(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect()
    }

    #[test]
    fn fft_path_matches_brute_force() {
        let fs = 256.0;
        let dw = 2.0 * PI * 128.0 / 127.0;
        let freqs: Vec<f64> = (0..128).map(|k| k as f64 * dw).collect();
        let p = lags(41);
        let ls = LagSpectrum::new(&freqs, dw, 1.0 / fs, -20, 41);
        assert!(ls.uses_fft());
        let mut out = vec![Complex64::new(0.0, 0.0); freqs.len()];
        ls.eval(&p, &mut out, &mut ls.scratch());
        for (a, b) in out.iter().zip(brute(&p, -20, &freqs, 1.0 / fs)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn direct_path_for_off_bin_axes() {
        let freqs: Vec<f64> = (0..17).map(|k| -3.3 + k as f64 * 0.4321).collect();
        let p = lags(300);
        let ls = LagSpectrum::new(&freqs, 0.4321, 0.01, 5, 300);
        assert!(!ls.uses_fft());
        let mut out = vec![Complex64::new(0.0, 0.0); freqs.len()];
        ls.eval(&p, &mut out, &mut ls.scratch());
        for (a, b) in out.iter().zip(brute(&p, 5, &freqs, 0.01)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn negative_frequencies_on_bins() {
        let step = 1.0 / 32.0;
        let dw = 2.0 * PI / (64.0 * step);
        let freqs: Vec<f64> = (-10..10).map(|k| k as f64 * dw).collect();
        let p = lags(99);
        let ls = LagSpectrum::new(&freqs, dw, step, -49, 99);
        assert!(ls.uses_fft());
        let mut out = vec![Complex64::new(0.0, 0.0); freqs.len()];
        ls.eval(&p, &mut out, &mut ls.scratch());
        for (a, b) in out.iter().zip(brute(&p, -49, &freqs, step)) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
