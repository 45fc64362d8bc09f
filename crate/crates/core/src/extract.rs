//! Combined instantaneous-frequency map and synchroextraction.
//!
//! `MrIF(t,ω) = (∏|C^{th_i}|)^{1/m} / (∏|C^{h_i}|)^{1/m}` is zero on chirp
//! ridges (`ω = φ′(t)`) and at impulse centers. For a chirp it equals
//! `σ̄²·|ω − φ′(t)|` under matched chirp rates, with `σ̄²` the geometric mean
//! of the `σ_i²`, so it is a time-like quantity.

use ndarray::{Array2, Zip};
use rayon::prelude::*;

use crate::combine::{mrct, MrCt};
use crate::grid::{ParameterSet, RealTf, Signal, TfGrid, TfMatrix};
use crate::transforms::ct_t_weighted;
use crate::{Error, Result};

/// Threshold applied to `MrIF` when extracting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// `σ̄²·dω/2` seconds: half a frequency bin on a chirp ridge.
    HalfBinScaled,
    /// `dω/2` compared directly against `MrIF`.
    LiteralHalfBin,
    /// An explicit threshold in seconds.
    Seconds(f64),
}

/// Extraction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    /// Bins with `M ≤ gamma_rel·max M` are excluded.
    pub gamma_rel: f64,
    pub tolerance: Tolerance,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            gamma_rel: 1e-2,
            tolerance: Tolerance::HalfBinScaled,
        }
    }
}

impl ExtractionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma_rel > 0.0 && self.gamma_rel < 1.0) {
            return Err(Error::invalid("gamma_rel", format!("must lie in (0, 1), got {}", self.gamma_rel)));
        }
        if let Tolerance::Seconds(x) = self.tolerance {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::invalid("tolerance", format!("must be positive, got {x}")));
            }
        }
        Ok(())
    }

    /// The threshold for `MrIF` given the window set and frequency step.
    pub fn tolerance_value(&self, params: &ParameterSet, dw: f64) -> f64 {
        match self.tolerance {
            Tolerance::HalfBinScaled => mean_sigma_sq(params) * dw / 2.0,
            Tolerance::LiteralHalfBin => dw / 2.0,
            Tolerance::Seconds(x) => x,
        }
    }
}

/// Geometric mean of the `σ_i²`.
pub fn mean_sigma_sq(params: &ParameterSet) -> f64 {
    let m = params.m() as f64;
    (params.entries().iter().map(|wp| 2.0 * wp.sigma().ln()).sum::<f64>() / m).exp()
}

/// `MrIF` values in seconds; excluded (low-energy) bins hold `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct MrIf {
    grid: TfGrid,
    values: Array2<f64>,
    gamma: f64,
}

impl MrIf {
    pub fn grid(&self) -> &TfGrid {
        &self.grid
    }

    /// `[freq, time]` values; `+∞` marks excluded bins.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn is_excluded(&self, k: usize, n: usize) -> bool {
        self.values[[k, n]].is_infinite()
    }

    /// Absolute threshold `γ` on the MrCT magnitude.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// MrCT, MrIF and the extracted map from one pass.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub mrct: MrCt,
    pub mrif: MrIf,
    pub mrsec: RealTf,
    /// Threshold used on `MrIF` (seconds).
    pub tolerance: f64,
}

/// The combined IF map.
pub fn mrif(signal: &Signal, params: &ParameterSet, grid: &TfGrid, cfg: &ExtractionConfig) -> Result<MrIf> {
    cfg.validate()?;
    let mr = mrct(signal, params, grid)?;
    mrif_from(signal, &mr, cfg)
}

/// The combined IF map reusing the constituent CTs of `mr`.
pub fn mrif_from(signal: &Signal, mr: &MrCt, cfg: &ExtractionConfig) -> Result<MrIf> {
    cfg.validate()?;
    let grid = mr.magnitude().grid();
    let th: Vec<RealTf> = mr
        .params()
        .entries()
        .par_iter()
        .map(|wp| ct_t_weighted(signal, wp, grid).map(|c| c.abs()))
        .collect::<Result<_>>()?;
    let m = th.len() as f64;
    let magnitude = mr.magnitude().values();
    let gamma = cfg.gamma_rel * mr.magnitude().max();
    let values = Array2::from_shape_fn(grid.shape(), |idx| {
        let den = magnitude[idx];
        if den <= gamma {
            return f64::INFINITY;
        }
        let mut logs = Vec::with_capacity(th.len());
        for c in &th {
            let v = c.values()[idx];
            if v == 0.0 {
                return 0.0;
            }
            logs.push(v.ln());
        }
        logs.sort_by(f64::total_cmp);
        (logs.iter().sum::<f64>() / m).exp() / den
    });
    Ok(MrIf {
        grid: grid.clone(),
        values,
        gamma,
    })
}

/// Synchroextracted MrCT: the MrCT magnitude where `MrIF < tolerance`,
/// zero elsewhere.
pub fn mrsect(signal: &Signal, params: &ParameterSet, grid: &TfGrid, cfg: &ExtractionConfig) -> Result<RealTf> {
    Ok(extract(signal, params, grid, cfg)?.mrsec)
}

/// Runs MrCT, MrIF and extraction, returning all intermediate maps.
pub fn extract(signal: &Signal, params: &ParameterSet, grid: &TfGrid, cfg: &ExtractionConfig) -> Result<Extraction> {
    cfg.validate()?;
    let mr = mrct(signal, params, grid)?;
    let map = mrif_from(signal, &mr, cfg)?;
    let tolerance = cfg.tolerance_value(params, grid.dw());
    let mut kept = Array2::zeros(grid.shape());
    Zip::from(&mut kept)
        .and(mr.magnitude().values())
        .and(map.values())
        .for_each(|o, &m, &r| {
            if r < tolerance {
                *o = m;
            }
        });
    let mrsec = TfMatrix::magnitude(grid.clone(), kept)?;
    Ok(Extraction {
        mrct: mr,
        mrif: map,
        mrsec,
        tolerance,
    })
}

/// One extracted ridge.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeTrack {
    /// Frequency bin per frame, `None` where nothing was found.
    pub bins: Vec<Option<usize>>,
    /// Frequency (rad/s) per frame.
    pub freqs: Vec<Option<f64>>,
    /// Magnitude at the chosen bin (0 where none).
    pub amps: Vec<f64>,
}

impl RidgeTrack {
    fn empty(n: usize) -> Self {
        RidgeTrack {
            bins: vec![None; n],
            freqs: vec![None; n],
            amps: vec![0.0; n],
        }
    }
}

/// Largest bin jump between consecutive frames.
pub const RIDGE_MAX_JUMP: usize = 2;
/// Half-width of the notch removed around an extracted ridge.
pub const RIDGE_NOTCH: usize = 1;

/// Greedy ridge tracking.
///
/// Each pass starts at the global maximum of what remains and follows it in
/// both directions, allowing `±2` bins per frame (the window widens by 2 bins
/// per frame without a detection). The ridge is then notched out (3 bins)
/// before the next pass.
pub fn ridge_extract(tf: &RealTf, n_ridges: usize) -> Result<Vec<RidgeTrack>> {
    if n_ridges == 0 {
        return Err(Error::invalid("n_ridges", "must be at least 1"));
    }
    let mut work = tf.values().clone();
    let (nk, nt) = work.dim();
    let freqs = tf.grid().freqs();
    let mut out = Vec::with_capacity(n_ridges);
    for _ in 0..n_ridges {
        let mut track = RidgeTrack::empty(nt);
        let mut start = None;
        let mut top = 0.0;
        for ((k, n), &v) in work.indexed_iter() {
            if v > top {
                top = v;
                start = Some((k, n));
            }
        }
        let Some((k0, n0)) = start else {
            out.push(track);
            continue;
        };
        let accept = |track: &mut RidgeTrack, n: usize, k: usize, v: f64| {
            track.bins[n] = Some(k);
            track.freqs[n] = Some(freqs[k]);
            track.amps[n] = v;
        };
        accept(&mut track, n0, k0, top);
        for dir in [1isize, -1] {
            let mut prev = k0;
            let mut gap = 0;
            let mut n = n0 as isize + dir;
            while n >= 0 && (n as usize) < nt {
                let nu = n as usize;
                let reach = RIDGE_MAX_JUMP * (gap + 1);
                let lo = prev.saturating_sub(reach);
                let hi = (prev + reach).min(nk - 1);
                let (mut bk, mut bv) = (prev, 0.0);
                for k in lo..=hi {
                    if work[[k, nu]] > bv {
                        bv = work[[k, nu]];
                        bk = k;
                    }
                }
                if bv > 0.0 {
                    accept(&mut track, nu, bk, bv);
                    prev = bk;
                    gap = 0;
                } else {
                    gap += 1;
                }
                n += dir;
            }
        }
        for (n, b) in track.bins.iter().enumerate() {
            if let Some(k) = *b {
                for kk in k.saturating_sub(RIDGE_NOTCH)..=(k + RIDGE_NOTCH).min(nk - 1) {
                    work[[kk, n]] = 0.0;
                }
            }
        }
        out.push(track);
    }
    Ok(out)
}
