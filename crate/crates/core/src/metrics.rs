//! Slices, main-lobe widths, peak counts and concentration of TF maps.

use std::io::Write;

use crate::grid::RealTf;
use crate::{Error, Result};

/// Magnitudes along one axis of a TF map.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceCurve {
    /// Seconds or rad/s.
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl SliceCurve {
    pub fn new(axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if axis.len() != values.len() {
            return Err(Error::invalid("values", "length differs from axis"));
        }
        if axis.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "non-finite entry"));
        }
        Ok(SliceCurve { axis, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Two-column CSV: `axis,value` per line after a header.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "axis,value")?;
        for (a, v) in self.axis.iter().zip(&self.values) {
            writeln!(out, "{a:e},{v:e}")?;
        }
        Ok(())
    }
}

/// Column of `tf` at the frame nearest `t`.
pub fn slice_at_time(tf: &RealTf, t: f64) -> Result<SliceCurve> {
    let n = tf
        .grid()
        .time_index(t)
        .ok_or_else(|| Error::invalid("t", format!("{t} s lies outside the grid")))?;
    SliceCurve::new(tf.grid().freqs().to_vec(), tf.values().column(n).to_vec())
}

/// Row of `tf` at the bin nearest `w` (rad/s).
pub fn slice_at_freq(tf: &RealTf, w: f64) -> Result<SliceCurve> {
    let k = tf
        .grid()
        .freq_index(w)
        .ok_or_else(|| Error::invalid("f", format!("{w} rad/s lies outside the grid")))?;
    SliceCurve::new(tf.grid().times().to_vec(), tf.values().row(k).to_vec())
}

/// Width of the contiguous region around the maximum that stays at or above
/// `level·max`, with linear interpolation at both crossings.
pub fn mainlobe_width(curve: &SliceCurve, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", format!("must lie in (0, 1), got {level}")));
    }
    let v = &curve.values;
    let (i0, &top) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("curve", "empty"))?;
    if !(top > 0.0) {
        return Err(Error::invalid("curve", "no positive maximum"));
    }
    let thr = level * top;
    let x = &curve.axis;
    let cross = |a: usize, b: usize| x[a] + (thr - v[a]) / (v[b] - v[a]) * (x[b] - x[a]);
    let left = (0..i0)
        .rev()
        .find(|&i| v[i] < thr)
        .map(|i| cross(i, i + 1))
        .ok_or_else(|| Error::invalid("curve", "main lobe reaches the start of the axis"))?;
    let right = (i0 + 1..v.len())
        .find(|&i| v[i] < thr)
        .map(|i| cross(i - 1, i))
        .ok_or_else(|| Error::invalid("curve", "main lobe reaches the end of the axis"))?;
    Ok(right - left)
}

/// Fraction of the band maximum a peak must reach.
pub const PEAK_REL: f64 = 0.5;
/// Minimum index distance between counted peaks.
pub const PEAK_MIN_SEP: usize = 3;

/// Interior local maxima inside `band` (inclusive axis range) that reach
/// half the band maximum and lie at least 3 bins apart; stronger peaks win.
/// Returns indices in ascending order.
pub fn find_peaks(curve: &SliceCurve, band: Option<(f64, f64)>) -> Vec<usize> {
    let v = &curve.values;
    let in_band = |i: usize| band.is_none_or(|(lo, hi)| curve.axis[i] >= lo && curve.axis[i] <= hi);
    let band_max = (0..v.len()).filter(|&i| in_band(i)).map(|i| v[i]).fold(0.0, f64::max);
    if !(band_max > 0.0) {
        return Vec::new();
    }
    let mut cands: Vec<usize> = (1..v.len().saturating_sub(1))
        .filter(|&i| in_band(i) && v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= PEAK_REL * band_max)
        .collect();
    cands.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in cands {
        if kept.iter().all(|&k| k.abs_diff(c) >= PEAK_MIN_SEP) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// Number of peaks found by [`find_peaks`].
pub fn count_peaks(curve: &SliceCurve, band: Option<(f64, f64)>) -> usize {
    find_peaks(curve, band).len()
}

/// Rényi entropy `(1/(1−α))·log₂ Σ p^α` of `p = |tf|²/Σ|tf|²`, in bits.
pub fn renyi_entropy(tf: &RealTf, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be positive and ≠ 1, got {alpha}")));
    }
    let total: f64 = tf.values().iter().map(|v| v * v).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("tf", "matrix is identically zero"));
    }
    let s: f64 = tf.values().iter().map(|v| (v * v / total).powf(alpha)).sum();
    Ok(s.log2() / (1.0 - alpha))
}
