//! Shared domain types: signals, time-frequency lattices and window parameters.

use ndarray::Array2;
use num_complex::Complex64;

use crate::{Error, Result};

/// Relative tolerance used when checking that an axis is uniform.
const UNIFORM_TOL: f64 = 1e-12;

/// A uniformly sampled complex time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Complex64>,
    fs: f64,
    t0: f64,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>, fs: f64, t0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "signal must not be empty"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid("fs", format!("sample rate must be > 0, got {fs}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "start time must be finite"));
        }
        if let Some(n) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("samples", format!("non-finite sample at index {n}")));
        }
        Ok(Signal { samples, fs, t0 })
    }

    pub fn from_real(samples: &[f64], fs: f64, t0: f64) -> Result<Self> {
        Signal::new(samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(), fs, t0)
    }

    /// Samples `f(t)` at `t = t0 + n/fs` for `n in 0..len`.
    pub fn from_fn(fs: f64, t0: f64, len: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = (0..len).map(|n| f(t0 + n as f64 / fs)).collect();
        Signal::new(samples, fs, t0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record length in seconds (`len / fs`).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Time of sample `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.fs
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }

    /// Index of the sample at time `t`, if `t` lies on the sampling lattice.
    pub fn sample_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) * self.fs;
        let n = x.round();
        if (x - n).abs() > 1e-6 || n < 0.0 || n >= self.len() as f64 {
            return None;
        }
        Some(n as usize)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// Mean squared magnitude.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Multiplies every sample by a real factor.
    pub fn scaled(&self, c: f64) -> Signal {
        Signal {
            samples: self.samples.iter().map(|z| z * c).collect(),
            fs: self.fs,
            t0: self.t0,
        }
    }

    /// Sample-wise sum of two signals on the same lattice.
    pub fn add(&self, other: &Signal) -> Result<Signal> {
        if self.len() != other.len() || self.fs != other.fs || self.t0 != other.t0 {
            return Err(Error::invalid("signal", "signals are sampled on different lattices"));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Signal {
            samples,
            fs: self.fs,
            t0: self.t0,
        })
    }
}

/// Uniform (time, frequency) lattice. Frequencies are angular (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct TfGrid {
    times: Vec<f64>,
    freqs: Vec<f64>,
    dt: f64,
    dw: f64,
}

fn check_axis(name: &'static str, start: f64, step: f64, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::invalid(name, "axis must have at least one point"));
    }
    if !(start.is_finite() && step.is_finite() && step > 0.0) {
        return Err(Error::invalid(name, format!("need finite start and step > 0, got {start}, {step}")));
    }
    Ok(())
}

fn axis_step(name: &'static str, axis: &[f64]) -> Result<f64> {
    if axis.len() < 2 {
        return Err(Error::invalid(name, "explicit axes need at least two points"));
    }
    let step = axis[1] - axis[0];
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(name, "axis must be strictly increasing"));
    }
    let scale = axis[0].abs().max(axis[axis.len() - 1].abs()).max(step);
    for (i, w) in axis.windows(2).enumerate() {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > UNIFORM_TOL * scale {
            return Err(Error::invalid(name, format!("axis is not uniform near index {i}")));
        }
    }
    Ok(step)
}

impl TfGrid {
    /// Builds a grid from explicit, uniformly spaced, ascending axes.
    pub fn new(times: Vec<f64>, freqs: Vec<f64>) -> Result<Self> {
        let dt = axis_step("times", &times)?;
        let dw = axis_step("freqs", &freqs)?;
        Ok(TfGrid { times, freqs, dt, dw })
    }

    /// Builds a grid from start/step/count for both axes. Allows single-point
    /// axes, whose step is then only used for bookkeeping.
    pub fn uniform(
        t_start: f64,
        dt: f64,
        n_times: usize,
        w_start: f64,
        dw: f64,
        n_freqs: usize,
    ) -> Result<Self> {
        check_axis("times", t_start, dt, n_times)?;
        check_axis("freqs", w_start, dw, n_freqs)?;
        Ok(TfGrid {
            times: (0..n_times).map(|i| t_start + i as f64 * dt).collect(),
            freqs: (0..n_freqs).map(|k| w_start + k as f64 * dw).collect(),
            dt,
            dw,
        })
    }

    /// Same time axis, different frequency axis.
    pub fn with_freqs(&self, w_start: f64, dw: f64, n_freqs: usize) -> Result<Self> {
        check_axis("freqs", w_start, dw, n_freqs)?;
        Ok(TfGrid {
            times: self.times.clone(),
            freqs: (0..n_freqs).map(|k| w_start + k as f64 * dw).collect(),
            dt: self.dt,
            dw,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Frequency step in rad/s.
    pub fn dw(&self) -> f64 {
        self.dw
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs.len()
    }

    /// `(n_freqs, n_times)`, the shape of matrices over this grid.
    pub fn shape(&self) -> (usize, usize) {
        (self.freqs.len(), self.times.len())
    }

    /// Nearest time bin, `None` when `t` is more than half a step outside.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        nearest(&self.times, self.dt, t)
    }

    /// Nearest frequency bin, `None` when `w` is more than half a step outside.
    pub fn freq_index(&self, w: f64) -> Option<usize> {
        nearest(&self.freqs, self.dw, w)
    }
}

fn nearest(axis: &[f64], step: f64, x: f64) -> Option<usize> {
    let i = ((x - axis[0]) / step).round();
    if !i.is_finite() || i < 0.0 || i >= axis.len() as f64 {
        return None;
    }
    Some(i as usize)
}

/// Builds the default analysis grid for a signal: one frame per sample and
/// `n_freq_bins` uniform bins over `[0, 2π·f_max]`.
pub fn make_tf_grid(signal: &Signal, n_freq_bins: usize, f_max: f64) -> Result<TfGrid> {
    if n_freq_bins < 2 {
        return Err(Error::invalid("n_freq_bins", format!("need at least 2 bins, got {n_freq_bins}")));
    }
    if !(f_max > 0.0 && f_max <= signal.fs() / 2.0) {
        return Err(Error::invalid(
            "f_max",
            format!("must lie in (0, fs/2 = {}] Hz, got {f_max}", signal.fs() / 2.0),
        ));
    }
    let w_max = crate::hz_to_rad(f_max);
    let dw = w_max / (n_freq_bins - 1) as f64;
    let mut grid = TfGrid::uniform(signal.t0(), 1.0 / signal.fs(), signal.len(), 0.0, dw, n_freq_bins)?;
    // pin the last bin exactly at f_max
    grid.freqs[n_freq_bins - 1] = w_max;
    Ok(grid)
}

/// A matrix over a [`TfGrid`], indexed `[freq_bin, time_bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfMatrix<T> {
    grid: TfGrid,
    values: Array2<T>,
    is_magnitude: bool,
}

pub type ComplexTf = TfMatrix<Complex64>;
pub type RealTf = TfMatrix<f64>;

fn check_shape<T>(grid: &TfGrid, values: &Array2<T>) -> Result<()> {
    if values.dim() != grid.shape() {
        return Err(Error::invalid(
            "values",
            format!("shape {:?} does not match grid {:?}", values.dim(), grid.shape()),
        ));
    }
    Ok(())
}

impl<T> TfMatrix<T> {
    pub fn grid(&self) -> &TfGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }

    pub fn is_magnitude(&self) -> bool {
        self.is_magnitude
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub(crate) fn from_parts(grid: TfGrid, values: Array2<T>, is_magnitude: bool) -> Self {
        debug_assert_eq!(values.dim(), grid.shape());
        TfMatrix {
            grid,
            values,
            is_magnitude,
        }
    }
}

impl TfMatrix<Complex64> {
    pub fn complex(grid: TfGrid, values: Array2<Complex64>) -> Result<Self> {
        check_shape(&grid, &values)?;
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("values", "matrix contains NaN or Inf"));
        }
        Ok(TfMatrix::from_parts(grid, values, false))
    }

    /// Pointwise modulus.
    pub fn abs(&self) -> RealTf {
        TfMatrix::from_parts(self.grid.clone(), self.values.mapv(|z| z.norm()), true)
    }
}

impl TfMatrix<f64> {
    /// Real-valued matrix of arbitrary sign.
    pub fn real(grid: TfGrid, values: Array2<f64>) -> Result<Self> {
        check_shape(&grid, &values)?;
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("values", "matrix contains NaN or Inf"));
        }
        Ok(TfMatrix::from_parts(grid, values, false))
    }

    /// Nonnegative magnitude matrix.
    pub fn magnitude(grid: TfGrid, values: Array2<f64>) -> Result<Self> {
        check_shape(&grid, &values)?;
        if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid("values", "magnitudes must be finite and >= 0"));
        }
        Ok(TfMatrix::from_parts(grid, values, true))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of nonzero entries.
    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|&&x| x != 0.0).count()
    }

    /// `(freq_bin, time_bin)` of the largest entry.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut bv = f64::NEG_INFINITY;
        for ((k, n), &v) in self.values.indexed_iter() {
            if v > bv {
                bv = v;
                best = (k, n);
            }
        }
        best
    }
}

/// One Gaussian window configuration: width `sigma` (s) and chirp rate
/// `beta` (rad/s²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams {
    sigma: f64,
    beta: f64,
}

impl WindowParams {
    pub fn new(sigma: f64, beta: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        if !beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        Ok(WindowParams { sigma, beta })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Ordered, duplicate-free list of window configurations driving the
/// multi-resolution transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    entries: Vec<WindowParams>,
}

impl ParameterSet {
    pub fn new(entries: Vec<WindowParams>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("params", "need at least one window"));
        }
        for (i, a) in entries.iter().enumerate() {
            if entries[..i].contains(a) {
                return Err(Error::invalid(
                    "params",
                    format!("duplicate entry (sigma={}, beta={})", a.sigma, a.beta),
                ));
            }
        }
        Ok(ParameterSet { entries })
    }

    /// Pairs `sigmas[i]` with `betas[i]`; the shorter list is cycled when the
    /// lengths differ.
    pub fn from_pairs(sigmas: &[f64], betas: &[f64]) -> Result<Self> {
        if sigmas.is_empty() || betas.is_empty() {
            return Err(Error::invalid("params", "need at least one sigma and one beta"));
        }
        let m = sigmas.len().max(betas.len());
        let entries = (0..m)
            .map(|i| WindowParams::new(sigmas[i % sigmas.len()], betas[i % betas.len()]))
            .collect::<Result<Vec<_>>>()?;
        ParameterSet::new(entries)
    }

    pub fn entries(&self) -> &[WindowParams] {
        &self.entries
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.entries.iter().map(|w| w.sigma).fold(0.0, f64::max)
    }
}
