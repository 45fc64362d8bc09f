//! Level-curve ellipses of the window Wigner-Ville distributions.
//!
//! The WVD of `h_{σ,β}` is `√2·exp(−t²/σ² − σ²(ω−βt)²)`; its level curves are
//! the ellipses `t²/σ² + σ²(ω−βt)² = C`. Lengths are reported as
//! `L_l = 2·r²` where `r` is the semi-major axis, i.e. on the same scale as `C`.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::Array2;

use crate::grid::{RealTf, TfGrid, TfMatrix, WindowParams};
use crate::{Error, Result};

/// Long-axis length and orientation of a level-curve ellipse.
///
/// `tan_theta` is `±∞` when the long axis is parallel to the frequency axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseGeometry {
    pub long_axis_len: f64,
    pub tan_theta: f64,
    /// `A = 1 + β² − 1/σ⁴` of the generating window; `None` for numerical fits.
    pub a_aux: Option<f64>,
}

impl EllipseGeometry {
    /// Angle of the long axis to the time axis in `(−π/2, π/2]`.
    pub fn theta(&self) -> f64 {
        if self.tan_theta.is_infinite() {
            std::f64::consts::FRAC_PI_2
        } else {
            self.tan_theta.atan()
        }
    }
}

fn check(wp: &WindowParams, c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid("C", format!("must be positive and finite, got {c}")));
    }
    debug_assert!(wp.sigma() > 0.0);
    Ok(())
}

/// Closed-form geometry for the chirp-modulated Gaussian window.
///
/// `L_l = C·(Aσ² + 2/σ² + √(A²σ⁴ + 4β²))` and
/// `tanθ = 2β/(σ²(√(A²σ⁴ + 4β²) + Aσ²)) + β`. For `β = 0` the ellipse is
/// axis-aligned: horizontal when `σ > 1`, vertical (`tanθ = +∞`) when
/// `σ < 1`, and a circle (`tanθ = 0` by convention) when `σ = 1`.
pub fn ellipse_geometry_ct(wp: &WindowParams, c: f64) -> Result<EllipseGeometry> {
    check(wp, c)?;
    let (s, b) = (wp.sigma(), wp.beta());
    let s2 = s * s;
    let a = 1.0 + b * b - 1.0 / (s2 * s2);
    let root = (a * a * s2 * s2 + 4.0 * b * b).sqrt();
    let long_axis_len = c * (a * s2 + 2.0 / s2 + root);
    let tan_theta = if b == 0.0 {
        if s < 1.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        2.0 * b / (s2 * (root + a * s2)) + b
    };
    Ok(EllipseGeometry {
        long_axis_len,
        tan_theta,
        a_aux: Some(a),
    })
}

/// Envelope parameters `(σ̂, β̂)` of the rotation window:
/// `σ̂² = (1+σ²β²)/(σ(1+β²))`, `β̂ = β(1−σ²)/(1+σ²β²)`.
pub fn rotated_params(wp: &WindowParams) -> WindowParams {
    let (s, b) = (wp.sigma(), wp.beta());
    let sb2 = 1.0 + s * s * b * b;
    WindowParams::new((sb2 / (s * (1.0 + b * b))).sqrt(), b * (1.0 - s * s) / sb2)
        .expect("rotated parameters of a valid window are valid")
}

/// Closed-form geometry for the rotation window.
///
/// `L_l = 2C/σ` for `σ < 1` and `2σC` otherwise; `tanθ = β` for `σ < 1`, `0`
/// at `σ = 1` and `−1/β` for `σ > 1`. With `σ > 1` and `β = 0` the long axis
/// is the frequency axis and `tanθ = +∞`.
pub fn ellipse_geometry_rotation(wp: &WindowParams, c: f64) -> Result<EllipseGeometry> {
    check(wp, c)?;
    let (s, b) = (wp.sigma(), wp.beta());
    let (long_axis_len, tan_theta) = if s < 1.0 {
        (2.0 * c / s, b)
    } else if s == 1.0 {
        (2.0 * c, 0.0)
    } else if b == 0.0 {
        (2.0 * s * c, f64::INFINITY)
    } else {
        (2.0 * s * c, -1.0 / b)
    };
    let r = rotated_params(wp);
    let s4 = r.sigma().powi(4);
    Ok(EllipseGeometry {
        long_axis_len,
        tan_theta,
        a_aux: Some(1.0 + r.beta() * r.beta() - 1.0 / s4),
    })
}

/// Closed-form window WVD `√2·exp(−t²/σ² − σ²(ω−βt)²)` sampled on `grid`.
pub fn window_wvd(wp: &WindowParams, grid: &TfGrid) -> Result<RealTf> {
    let (s, b) = (wp.sigma(), wp.beta());
    let values = Array2::from_shape_fn(grid.shape(), |(k, n)| {
        let (t, w) = (grid.times()[n], grid.freqs()[k]);
        2f64.sqrt() * (-t * t / (s * s) - s * s * (w - b * t).powi(2)).exp()
    });
    TfMatrix::magnitude(grid.clone(), values)
}

/// A centered `n × n` grid covering `1.2×` the extent of the level curve
/// `level·max` of the window WVD.
pub fn level_curve_grid(wp: &WindowParams, level: f64, n: usize) -> Result<TfGrid> {
    check_level(level)?;
    if n < 3 {
        return Err(Error::invalid("n", "need at least 3 points per axis"));
    }
    let c = (1.0 / level).ln();
    let (s, b) = (wp.sigma(), wp.beta());
    let t_ext = 1.2 * s * c.sqrt();
    let w_ext = 1.2 * (c * (1.0 / (s * s) + b * b * s * s)).sqrt();
    let steps = (n - 1) as f64;
    TfGrid::uniform(-t_ext, 2.0 * t_ext / steps, n, -w_ext, 2.0 * w_ext / steps, n)
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level_fraction", format!("must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// Relative eigenvalue gap below which a superlevel set counts as a disc.
const ISOTROPY_TOL: f64 = 0.02;

/// Boundary points within this fraction of the largest squared distance enter
/// the vertex refinement.
const VERTEX_FIT_BAND: f64 = 0.02;

/// Threshold crossings between horizontally or vertically adjacent samples,
/// linearly interpolated.
fn boundary_points(m: &RealTf, thr: f64) -> Vec<(f64, f64)> {
    let v = m.values();
    let (times, freqs) = (m.grid().times(), m.grid().freqs());
    let (nk, nt) = v.dim();
    let mut pts = Vec::new();
    let frac = |a: f64, b: f64| (thr - a) / (b - a);
    for k in 0..nk {
        for n in 0..nt {
            let a = v[[k, n]];
            if n + 1 < nt {
                let b = v[[k, n + 1]];
                if (a >= thr) != (b >= thr) {
                    pts.push((times[n] + frac(a, b) * (times[n + 1] - times[n]), freqs[k]));
                }
            }
            if k + 1 < nk {
                let b = v[[k + 1, n]];
                if (a >= thr) != (b >= thr) {
                    pts.push((times[n], freqs[k] + frac(a, b) * (freqs[k + 1] - freqs[k])));
                }
            }
        }
    }
    pts
}

/// Least-squares parabola through `(x, y)`; returns the vertex `(x*, y*)`
/// when it opens downward.
fn parabola_peak(samples: &[(f64, f64)]) -> Option<(f64, f64)> {
    if samples.len() < 3 {
        return None;
    }
    let mut s = [0.0f64; 5];
    let mut r = [0.0f64; 3];
    for &(x, y) in samples {
        let mut p = 1.0;
        for (i, si) in s.iter_mut().enumerate() {
            *si += p;
            if i < 3 {
                r[i] += p * y;
            }
            p *= x;
        }
    }
    let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(a);
    if d.abs() < f64::MIN_POSITIVE {
        return None;
    }
    let mut c = [0.0; 3];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][j] = r[i];
        }
        *cj = det3(m) / d;
    }
    if !(c[2] < 0.0) {
        return None;
    }
    let x = -c[1] / (2.0 * c[2]);
    Some((x, c[0] + c[1] * x + c[2] * x * x))
}

/// Numerical geometry of the superlevel set `{v ≥ level·max}`.
///
/// The vertex is the boundary point farthest from the set's centroid. Boundary
/// points are interpolated threshold crossings, and the vertex is refined by a
/// parabola through the squared distance near its angle. The returned length
/// is `2·r²` with `r` that distance (matching the closed forms with
/// `C = ln(1/level)`) and the slope is that of the vertex as seen from the
/// centroid. Near-circular sets report `tanθ = 0`.
pub fn extract_level_curve(wvd_matrix: &RealTf, level_fraction: f64) -> Result<EllipseGeometry> {
    check_level(level_fraction)?;
    let max = wvd_matrix.max();
    if !(max > 0.0) {
        return Err(Error::invalid("wvd_matrix", "no positive maximum"));
    }
    let thr = level_fraction * max;
    let grid = wvd_matrix.grid();
    let inside: Vec<(f64, f64)> = wvd_matrix
        .values()
        .indexed_iter()
        .filter(|(_, &v)| v >= thr)
        .map(|((k, n), _)| (grid.times()[n], grid.freqs()[k]))
        .collect();
    if inside.is_empty() {
        return Err(Error::invalid("wvd_matrix", "empty superlevel set"));
    }
    let np = inside.len() as f64;
    let (ct, cw) = inside.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / np, b + p.1 / np));

    let (mut stt, mut sww, mut stw) = (0.0, 0.0, 0.0);
    for &(t, w) in &inside {
        stt += (t - ct).powi(2);
        sww += (w - cw).powi(2);
        stw += (t - ct) * (w - cw);
    }
    let tr = stt + sww;
    let disc = ((stt - sww).powi(2) + 4.0 * stw * stw).sqrt();
    let isotropic = tr > 0.0 && disc / tr < ISOTROPY_TOL;

    let mut boundary = boundary_points(wvd_matrix, thr);
    if boundary.is_empty() {
        // The set fills the matrix; its outermost samples stand in.
        boundary = inside;
    }
    let dist2 = |p: &(f64, f64)| (p.0 - ct).powi(2) + (p.1 - cw).powi(2);
    let far = *boundary
        .iter()
        .max_by(|a, b| dist2(a).total_cmp(&dist2(b)))
        .expect("non-empty");
    let r2_far = dist2(&far);
    let phi_far = (far.1 - cw).atan2(far.0 - ct);
    let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
    let near: Vec<(f64, f64)> = boundary
        .iter()
        .filter(|p| dist2(p) >= (1.0 - VERTEX_FIT_BAND) * r2_far)
        .map(|p| (wrap((p.1 - cw).atan2(p.0 - ct) - phi_far), dist2(p)))
        .filter(|&(x, _)| x.abs() < FRAC_PI_2)
        .collect();
    let (phi, r2) = match parabola_peak(&near) {
        Some((x, r2)) if x.abs() < FRAC_PI_2 && r2 >= r2_far => (phi_far + x, r2),
        _ => (phi_far, r2_far),
    };
    let (dt, dw) = (phi.cos(), phi.sin());
    let tan_theta = if isotropic {
        0.0
    } else if dt == 0.0 {
        f64::INFINITY
    } else {
        dw / dt
    };
    Ok(EllipseGeometry {
        long_axis_len: 2.0 * r2,
        tan_theta,
        a_aux: None,
    })
}
