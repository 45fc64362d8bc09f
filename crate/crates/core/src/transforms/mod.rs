//! Transform kernels: CT, STFT, t-weighted CT, rotation-window CT, WVD and CFT.
//!
//! All integrals are Riemann sums with weight `1/fs`; windows are truncated at
//! five standard deviations and the record is zero-padded at both ends.

mod cft;
mod kernel;
mod wvd;

pub use cft::{cft, CrSpectrum};
pub use wvd::wvd;

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::{ComplexTf, Signal, TfGrid, TfMatrix, WindowParams};
use crate::{Error, Result};
use kernel::LagSpectrum;

/// Window truncation radius in standard deviations.
pub const TRUNCATION: f64 = 5.0;

/// Gaussian window `(√(2π)σ)^(-1/2)·exp(−u²/(2σ²))`.
#[inline]
pub fn gaussian(u: f64, sigma: f64) -> f64 {
    ((2.0 * PI).sqrt() * sigma).powf(-0.5) * (-u * u / (2.0 * sigma * sigma)).exp()
}

/// A window sampled at `l/fs` for `l = −half..=half`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWindow {
    taps: Vec<Complex64>,
    half: usize,
    fs: f64,
}

impl SampledWindow {
    /// Samples `w(u)` on `|u| ≤ radius`.
    pub fn from_fn(fs: f64, radius: f64, w: impl Fn(f64) -> Complex64) -> Result<Self> {
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(Error::invalid("fs", format!("must be positive and finite, got {fs}")));
        }
        if !(2.0 * radius * fs >= 3.0) {
            return Err(Error::invalid(
                "sigma",
                format!(
                    "window support {:.3e} s spans fewer than 3 samples at fs = {fs} Hz",
                    2.0 * radius
                ),
            ));
        }
        let half = (radius * fs + 1e-9).floor() as usize;
        let taps = (-(half as isize)..=half as isize)
            .map(|l| w(l as f64 / fs))
            .collect();
        Ok(SampledWindow { taps, half, fs })
    }

    /// Tap values, index `l + half`.
    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Lag times `l/fs` matching [`taps`](Self::taps).
    pub fn times(&self) -> Vec<f64> {
        (-(self.half as isize)..=self.half as isize)
            .map(|l| l as f64 / self.fs)
            .collect()
    }

    /// `Σ |w|² / fs`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.fs
    }

    fn conj(&self) -> Self {
        SampledWindow {
            taps: self.taps.iter().map(|z| z.conj()).collect(),
            ..self.clone()
        }
    }
}

fn chirp_window(wp: &WindowParams, fs: f64, t_weighted: bool) -> Result<SampledWindow> {
    let (sigma, beta) = (wp.sigma(), wp.beta());
    SampledWindow::from_fn(fs, TRUNCATION * sigma, |u| {
        let w = gaussian(u, sigma) * Complex64::cis(-0.5 * beta * u * u);
        if t_weighted {
            w * u
        } else {
            w
        }
    })
}

/// Chirplet transform with a chirp-modulated Gaussian window.
///
/// `values[k][n] = (1/fs)·Σ_l f[n+l]·g(l/fs)·e^{−jβ(l/fs)²/2}·e^{−jω_k·l/fs}`.
pub fn ct(signal: &Signal, wp: &WindowParams, grid: &TfGrid) -> Result<ComplexTf> {
    correlate(signal, &chirp_window(wp, signal.fs(), false)?, grid)
}

/// Short-time Fourier transform with a Gaussian window (`ct` at `β = 0`).
pub fn stft(signal: &Signal, sigma: f64, grid: &TfGrid) -> Result<ComplexTf> {
    ct(signal, &WindowParams::new(sigma, 0.0)?, grid)
}

/// CT with the window multiplied by the lag `μ − t`.
pub fn ct_t_weighted(signal: &Signal, wp: &WindowParams, grid: &TfGrid) -> Result<ComplexTf> {
    correlate(signal, &chirp_window(wp, signal.fs(), true)?, grid)
}

/// Gaussian-envelope parameters `(σ̂, β̂)` of the rotation window.
fn rotation_envelope(wp: &WindowParams) -> (f64, f64) {
    let (s, b) = (wp.sigma(), wp.beta());
    let sb2 = 1.0 + s * s * b * b;
    ((sb2 / (s * (1.0 + b * b))).sqrt(), b * (1.0 - s * s) / sb2)
}

/// Samples of the rotated Gaussian window
/// `h̃(t) = (√(2π)σ̂)^(-1/2)·exp(−t²/(2σ̂²))·exp(jβ̂t²/2)` on `|t| ≤ 5σ̂`.
pub fn rotation_window(wp: &WindowParams, fs: f64) -> Result<SampledWindow> {
    let (sh, bh) = rotation_envelope(wp);
    SampledWindow::from_fn(fs, TRUNCATION * sh, |u| {
        gaussian(u, sh) * Complex64::cis(0.5 * bh * u * u)
    })
}

/// Rotation-window CT: correlation of the signal with the conjugated rotation
/// window, `Σ f(μ)·conj(h̃(t−μ))·e^{−jω(μ−t)}/fs`.
pub fn rotation_ct(signal: &Signal, wp: &WindowParams, grid: &TfGrid) -> Result<ComplexTf> {
    let h = rotation_window(wp, signal.fs())?;
    // h̃ is even in t, so conj(h̃(−u)) = conj(h̃(u)).
    correlate(signal, &h.conj(), grid)
}

/// Closed-form CT of `A·exp(j(at + bt²/2))`:
/// `f(t)·sqrt(√(2π)σ/(1+jσ²(β−b)))·exp(−σ²(ω−φ′(t))²/(2(1+jσ²(β−b))))`.
pub fn closed_form_chirp_ct(
    amp: f64,
    a: f64,
    b: f64,
    wp: &WindowParams,
    grid: &TfGrid,
) -> Result<ComplexTf> {
    let (sigma, beta) = (wp.sigma(), wp.beta());
    let s2 = sigma * sigma;
    let d = Complex64::new(1.0, s2 * (beta - b));
    let gain = (Complex64::from((2.0 * PI).sqrt() * sigma) / d).sqrt();
    let values = Array2::from_shape_fn(grid.shape(), |(k, n)| {
        let t = grid.times()[n];
        let w = grid.freqs()[k];
        let f = amp * Complex64::cis(a * t + 0.5 * b * t * t);
        let dw = w - (a + b * t);
        f * gain * (-(s2 * dw * dw) / (2.0 * d)).exp()
    });
    TfMatrix::complex(grid.clone(), values)
}

/// Sample indices of the grid frames.
fn frame_indices(signal: &Signal, grid: &TfGrid) -> Result<Vec<usize>> {
    grid.times()
        .iter()
        .map(|&t| {
            signal.sample_index(t).ok_or_else(|| {
                Error::invalid("grid", format!("time {t} s is not a sample instant of the signal"))
            })
        })
        .collect()
}

/// `values[k][n] = (1/fs)·Σ_l f[c_n + l]·w[l]·e^{−jω_k·l/fs}`.
fn correlate(signal: &Signal, window: &SampledWindow, grid: &TfGrid) -> Result<ComplexTf> {
    let frames = frame_indices(signal, grid)?;
    let fs = signal.fs();
    let half = window.half as isize;
    let span = window.taps.len();
    let ls = LagSpectrum::new(grid.freqs(), grid.dw(), 1.0 / fs, -half, span);
    let x = signal.samples();
    let nk = grid.n_freqs();
    let zero = Complex64::new(0.0, 0.0);

    let columns: Vec<Vec<Complex64>> = frames
        .par_iter()
        .map_init(
            || (ls.scratch(), vec![zero; span]),
            |(scratch, lags), &c| {
                for (i, (lag, w)) in lags.iter_mut().zip(&window.taps).enumerate() {
                    let idx = c as isize + i as isize - half;
                    *lag = if idx >= 0 && (idx as usize) < x.len() {
                        x[idx as usize] * w
                    } else {
                        zero
                    };
                }
                let mut out = vec![zero; nk];
                ls.eval(lags, &mut out, scratch);
                out.iter_mut().for_each(|z| *z /= fs);
                out
            },
        )
        .collect();

    let values = Array2::from_shape_fn((nk, frames.len()), |(k, n)| columns[n][k]);
    TfMatrix::complex(grid.clone(), values)
}
