//! Multi-resolution chirplet transform.
//!
//! Parameter selection from chirp-Fourier peaks, σ schedules, the geometric
//! mean of several CT magnitudes and the generalized KL objective it
//! minimizes.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use rayon::prelude::*;

use crate::grid::{ComplexTf, ParameterSet, RealTf, Signal, TfGrid, TfMatrix, WindowParams};
use crate::transforms::{cft, ct, CrSpectrum};
use crate::{Error, Result};

/// Magnitudes below `FLOOR_REL × (global max)` are clamped before taking logs.
pub const FLOOR_REL: f64 = 1e-12;

/// Half-widths (in bins) of the rectangle suppressed around each CFT peak.
pub const PEAK_EXCLUSION: (usize, usize) = (3, 3);

/// One CFT peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Frequency ω* (rad/s).
    pub omega: f64,
    /// Chirp rate β* (rad/s²).
    pub beta: f64,
    pub mag: f64,
    /// Chirp-rate index into the spectrum.
    pub q: usize,
    /// Frequency index into the spectrum.
    pub k: usize,
}

/// Peaks in order of detection, i.e. by descending magnitude.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeakList {
    pub peaks: Vec<Peak>,
}

/// Up to `m` peaks by repeated argmax, suppressing `±exclusion` bins
/// (chirp rate, frequency) around each one.
pub fn cft_peaks(spec: &CrSpectrum, m: usize, exclusion: (usize, usize)) -> PeakList {
    let mag = spec.mag();
    let (nq, nk) = mag.dim();
    let mut live = Array2::from_elem((nq, nk), true);
    let mut peaks = Vec::with_capacity(m);
    while peaks.len() < m {
        let mut best: Option<(usize, usize, f64)> = None;
        for ((q, k), &v) in mag.indexed_iter() {
            if live[[q, k]] && v > 0.0 && best.is_none_or(|b| v > b.2) {
                best = Some((q, k, v));
            }
        }
        let Some((q, k, v)) = best else { break };
        peaks.push(Peak {
            omega: spec.freqs()[k],
            beta: spec.crs()[q],
            mag: v,
            q,
            k,
        });
        let (eq, ek) = exclusion;
        for qq in q.saturating_sub(eq)..(q + eq + 1).min(nq) {
            for kk in k.saturating_sub(ek)..(k + ek + 1).min(nk) {
                live[[qq, kk]] = false;
            }
        }
    }
    PeakList { peaks }
}

/// Result of [`select_parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub params: ParameterSet,
    pub peaks: PeakList,
    /// Fewer than `m` distinct window pairs could be derived.
    pub incomplete: bool,
}

/// Chooses `(σ_i, β_i) = (C_σ/√(2π|β*_i|), β*_i)` from the `m` strongest CFT
/// peaks. Peaks at `β* = 0`, and any σ above it, are capped at
/// `σ_max = duration/4`. Peaks that map to an already chosen pair are
/// dropped and reported through [`Selection::incomplete`].
pub fn select_parameters(
    signal: &Signal,
    m: usize,
    c_sigma: f64,
    freq_axis: &[f64],
    cr_axis: &[f64],
) -> Result<Selection> {
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    if !(c_sigma > 0.0) || !c_sigma.is_finite() {
        return Err(Error::invalid("c_sigma", format!("must be positive, got {c_sigma}")));
    }
    let spec = cft(signal, freq_axis, cr_axis)?;
    let peaks = cft_peaks(&spec, m, PEAK_EXCLUSION);
    let sigma_max = signal.duration() / 4.0;
    let mut entries: Vec<WindowParams> = Vec::new();
    for p in &peaks.peaks {
        let sigma = if p.beta == 0.0 {
            sigma_max
        } else {
            (c_sigma / (2.0 * PI * p.beta.abs()).sqrt()).min(sigma_max)
        };
        let wp = WindowParams::new(sigma, p.beta)?;
        if !entries.contains(&wp) {
            entries.push(wp);
        }
    }
    if entries.is_empty() {
        return Err(Error::invalid("signal", "chirp-Fourier spectrum has no positive peak"));
    }
    let incomplete = entries.len() < m;
    Ok(Selection {
        params: ParameterSet::new(entries)?,
        peaks,
        incomplete,
    })
}

/// How successive window widths grow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `σ_i = i·σ_1`.
    Multiplicative,
    /// `σ_i = σ_1 + i·Δσ`.
    Additive { delta: f64 },
}

/// Window widths `σ_i` for `i = 1..=m`.
pub fn sigma_schedule(sigma1: f64, m: usize, mode: Schedule) -> Result<Vec<f64>> {
    if !(sigma1 > 0.0) || !sigma1.is_finite() {
        return Err(Error::invalid("sigma1", format!("must be positive, got {sigma1}")));
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    Ok(match mode {
        Schedule::Multiplicative => (1..=m).map(|i| i as f64 * sigma1).collect(),
        Schedule::Additive { delta } => {
            if !(delta > 0.0) || !delta.is_finite() {
                return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
            }
            (1..=m).map(|i| sigma1 + i as f64 * delta).collect()
        }
    })
}

/// Multi-resolution CT: the geometric-mean magnitude and the constituent
/// complex CTs.
#[derive(Debug, Clone)]
pub struct MrCt {
    magnitude: RealTf,
    cts: Vec<ComplexTf>,
    params: ParameterSet,
}

impl MrCt {
    pub fn magnitude(&self) -> &RealTf {
        &self.magnitude
    }

    pub fn into_magnitude(self) -> RealTf {
        self.magnitude
    }

    /// The complex CTs in parameter order.
    pub fn cts(&self) -> &[ComplexTf] {
        &self.cts
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }
}

/// `M = (∏_i |C_i|)^{1/m}` for the CTs of every parameter pair.
pub fn mrct(signal: &Signal, params: &ParameterSet, grid: &TfGrid) -> Result<MrCt> {
    let cts = params
        .entries()
        .par_iter()
        .map(|wp| ct(signal, wp, grid))
        .collect::<Result<Vec<_>>>()?;
    let mags: Vec<RealTf> = cts.iter().map(|c| c.abs()).collect();
    let magnitude = geometric_mean(&mags)?;
    Ok(MrCt {
        magnitude,
        cts,
        params: params.clone(),
    })
}

/// Shared clamp value `FLOOR_REL × max_i max |C_i|`.
pub fn magnitude_floor(mags: &[RealTf]) -> f64 {
    FLOOR_REL * mags.iter().map(|m| m.max()).fold(0.0, f64::max)
}

fn check_same_grid(grid: &TfGrid, others: &[RealTf]) -> Result<()> {
    if others.iter().any(|m| m.grid() != grid) {
        return Err(Error::invalid("cts", "all matrices must share one grid"));
    }
    Ok(())
}

/// Pointwise geometric mean `exp(mean_i ln max(x_i, floor))`.
///
/// A single matrix is returned unchanged. Logs are summed in sorted order,
/// so the result does not depend on the order of `mags`.
pub fn geometric_mean(mags: &[RealTf]) -> Result<RealTf> {
    let first = mags.first().ok_or_else(|| Error::invalid("cts", "need at least one matrix"))?;
    check_same_grid(first.grid(), mags)?;
    if mags.len() == 1 {
        return TfMatrix::magnitude(first.grid().clone(), first.values().clone());
    }
    let floor = magnitude_floor(mags);
    let m = mags.len() as f64;
    let values = Array2::from_shape_fn(first.shape(), |idx| {
        if floor == 0.0 {
            return 0.0;
        }
        let mut logs: Vec<f64> = mags.iter().map(|c| c.values()[idx].max(floor).ln()).collect();
        logs.sort_by(f64::total_cmp);
        (logs.iter().sum::<f64>() / m).exp()
    });
    TfMatrix::magnitude(first.grid().clone(), values)
}

/// Value of the generalized KL objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gkl {
    /// `+∞` when `infinite` is set.
    pub value: f64,
    /// Some `C_i` is exactly zero where `P > 0`.
    pub infinite: bool,
}

/// `Σ_i ΣΣ [P·ln(P/C_i) − P + C_i]·dt·dω` with `0·ln 0 = 0` and `C_i`
/// clamped to the same floor as [`geometric_mean`].
pub fn gkl_objective(p: &RealTf, cts: &[RealTf]) -> Result<Gkl> {
    if cts.is_empty() {
        return Err(Error::invalid("cts", "need at least one matrix"));
    }
    check_same_grid(p.grid(), cts)?;
    if p.values().iter().chain(cts.iter().flat_map(|c| c.values().iter())).any(|&v| v < 0.0) {
        return Err(Error::invalid("cts", "entries must be nonnegative"));
    }
    let floor = magnitude_floor(cts);
    let cell = p.grid().dt() * p.grid().dw();
    let mut total = 0.0;
    for c in cts {
        let mut infinite = false;
        let mut sum = 0.0;
        Zip::from(p.values()).and(c.values()).for_each(|&pv, &cv| {
            if pv > 0.0 && cv == 0.0 {
                infinite = true;
            }
            let cv = cv.max(floor);
            sum += if pv > 0.0 { pv * (pv / cv).ln() - pv + cv } else { cv };
        });
        if infinite {
            return Ok(Gkl {
                value: f64::INFINITY,
                infinite: true,
            });
        }
        total += sum;
    }
    Ok(Gkl {
        value: total * cell,
        infinite: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_tf_grid;
    use crate::signals::{synth_impulse, ImpulseSpec};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn axis(lo: f64, step: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn schedules() {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(&sigma_schedule(0.1, 3, Schedule::Multiplicative).unwrap(), &[0.1, 0.2, 0.3]));
        assert!(close(
            &sigma_schedule(0.1, 3, Schedule::Additive { delta: 0.05 }).unwrap(),
            &[0.15, 0.2, 0.25]
        ));
        assert_eq!(sigma_schedule(0.1, 1, Schedule::Multiplicative).unwrap(), vec![0.1]);
        assert!(sigma_schedule(0.1, 2, Schedule::Additive { delta: 0.0 }).is_err());
        assert!(sigma_schedule(-0.1, 2, Schedule::Multiplicative).is_err());
    }

    #[test]
    fn single_chirp_selection() {
        let fs = 256.0;
        let (a, b) = (2.0 * PI * 20.0, 2.0 * PI * 80.0);
        let s = Signal::from_fn(fs, 0.0, 256, |t| Complex64::cis(a * t + 0.5 * b * t * t)).unwrap();
        let freqs = axis(0.0, 2.0 * PI, 128);
        let crs = axis(-2.0 * PI * 100.0, 2.0 * PI * 5.0, 41);
        let sel = select_parameters(&s, 1, 1.0, &freqs, &crs).unwrap();
        let wp = sel.params.entries()[0];
        assert!((wp.beta() - b).abs() <= 2.0 * PI * 5.0 + 1e-9);
        assert!((wp.sigma() - 1.0 / (2.0 * PI * wp.beta().abs()).sqrt()).abs() < 1e-12);
        assert!(!sel.incomplete);
    }

    #[test]
    fn tone_selection_uses_cap() {
        let fs = 128.0;
        let s = Signal::from_fn(fs, 0.0, 256, |t| Complex64::cis(2.0 * PI * 10.0 * t)).unwrap();
        let freqs = axis(0.0, PI, 64);
        let crs = axis(-20.0, 2.0, 21);
        let sel = select_parameters(&s, 1, 1.0, &freqs, &crs).unwrap();
        let wp = sel.params.entries()[0];
        assert_eq!(wp.beta(), 0.0);
        assert_eq!(wp.sigma(), 0.5);
    }

    #[test]
    fn duplicate_pairs_flag_incomplete() {
        // Two tones share β* = 0 and therefore the same window pair.
        let fs = 128.0;
        let s = Signal::from_fn(fs, 0.0, 256, |t| {
            Complex64::cis(2.0 * PI * 10.0 * t) + Complex64::cis(2.0 * PI * 30.0 * t)
        })
        .unwrap();
        let sel = select_parameters(&s, 2, 1.0, &axis(0.0, PI, 64), &axis(-20.0, 2.0, 21)).unwrap();
        assert_eq!(sel.params.m(), 1);
        assert_eq!(sel.peaks.peaks.len(), 2);
        assert!(sel.incomplete);
    }

    #[test]
    fn peaks_respect_exclusion() {
        let fs = 128.0;
        let s = Signal::from_fn(fs, 0.0, 256, |t| Complex64::cis(2.0 * PI * 10.0 * t)).unwrap();
        let spec = cft(&s, &axis(0.0, PI / 4.0, 128), &axis(-5.0, 0.5, 21)).unwrap();
        let peaks = cft_peaks(&spec, 5, PEAK_EXCLUSION).peaks;
        assert_eq!(peaks.len(), 5);
        for (i, p) in peaks.iter().enumerate() {
            for r in &peaks[..i] {
                assert!(p.q.abs_diff(r.q) > 3 || p.k.abs_diff(r.k) > 3);
                assert!(p.mag <= r.mag);
            }
        }
    }

    fn impulse_setup() -> (Signal, TfGrid) {
        let s = synth_impulse(&ImpulseSpec { amp: 1.0, t0: 1.0 }, 256.0, 2.0).unwrap();
        let g = make_tf_grid(&s, 64, 128.0).unwrap();
        (s, g)
    }

    #[test]
    fn single_entry_is_plain_magnitude() {
        let (s, g) = impulse_setup();
        let wp = WindowParams::new(0.1, 5.0).unwrap();
        let params = ParameterSet::new(vec![wp]).unwrap();
        let m = mrct(&s, &params, &g).unwrap();
        assert_eq!(m.magnitude().values(), ct(&s, &wp, &g).unwrap().abs().values());
    }

    #[test]
    fn impulse_time_spread_follows_theorem() {
        let (s, g) = impulse_setup();
        let (s1, s2) = (0.1f64, 0.2f64);
        let params = ParameterSet::from_pairs(&[s1, s2], &[0.0]).unwrap();
        let m = mrct(&s, &params, &g).unwrap();
        let row = m.magnitude().values().row(10);
        let peak = row[256];
        let c = (s1 * s1 + s2 * s2) / (2.0 * s1 * s1 * s2 * s2);
        for n in 200..312 {
            let t = g.times()[n];
            let expected = peak * (-c * (1.0 - t).powi(2) / 2.0).exp();
            assert!((row[n] - expected).abs() < 1e-9 * peak.max(1.0), "{n}");
        }
    }

    fn random_mags(seed: u64, m: usize) -> Vec<RealTf> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = TfGrid::uniform(0.0, 0.1, 6, 0.0, 0.5, 5).unwrap();
        (0..m)
            .map(|_| {
                let v = Array2::from_shape_fn(g.shape(), |_| rng.random_range(0.01..2.0));
                TfMatrix::magnitude(g.clone(), v).unwrap()
            })
            .collect()
    }

    #[test]
    fn gkl_zero_at_identity() {
        let mags = random_mags(1, 1);
        let three = vec![mags[0].clone(), mags[0].clone(), mags[0].clone()];
        let v = gkl_objective(&mags[0], &three).unwrap();
        assert!(!v.infinite && v.value.abs() < 1e-15);
    }

    #[test]
    fn geometric_mean_minimizes_gkl() {
        for seed in 0..10 {
            let cts = random_mags(seed, 3);
            let p = geometric_mean(&cts).unwrap();
            let base = gkl_objective(&p, &cts).unwrap().value;
            for eps in [0.01, -0.01] {
                let q = TfMatrix::magnitude(p.grid().clone(), p.values() * (1.0 + eps)).unwrap();
                assert!(gkl_objective(&q, &cts).unwrap().value > base);
            }
            for (idx, &pv) in p.values().indexed_iter() {
                let s: f64 = cts.iter().map(|c| (pv / c.values()[idx]).ln()).sum();
                assert!(s.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gkl_flags_zero_constituents() {
        let cts = random_mags(3, 2);
        let mut z = cts[1].values().clone();
        z[[0, 0]] = 0.0;
        let zeroed = TfMatrix::magnitude(cts[1].grid().clone(), z).unwrap();
        let v = gkl_objective(&cts[0], &[cts[0].clone(), zeroed]).unwrap();
        assert!(v.infinite && v.value.is_infinite());
        let other = TfGrid::uniform(0.0, 0.2, 6, 0.0, 0.5, 5).unwrap();
        let bad = TfMatrix::magnitude(other, cts[0].values().clone()).unwrap();
        assert!(gkl_objective(&cts[0], &[bad]).is_err());
    }
}
