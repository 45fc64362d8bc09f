//! `run` and `render`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chirplet::combine::{mrct, select_parameters};
use chirplet::extract::{extract, ExtractionConfig, Tolerance};
use chirplet::metrics::{slice_at_freq, slice_at_time};
use chirplet::signals::{
    add_awgn, analytic, read_csv, synth_chirps_and_pulses, synth_example1_with, synth_example2_with,
    SnrReference,
};
use chirplet::transforms::{cft, ct, rotation_ct, stft, wvd};
use chirplet::{make_tf_grid, ComplexTf, ParameterSet, RealTf, Signal, TfGrid, TfMatrix, WindowParams};
use ndarray::Array2;
use num_complex::Complex32;

use crate::args::{Generator, Method, RenderArgs, RunArgs};
use crate::matrix::{read_tfm, write_tfm, Axes, MatrixData, TfmFile};
use crate::render::{db_levels, save_image, write_pgm, Colormap, DEFAULT_DB_FLOOR};
use crate::{hz_inputs, CliError};

pub const DEFAULT_N_FREQS: usize = 128;
pub const DEFAULT_CR_RANGE_HZ_S: (f64, f64, f64) = (-100.0, 100.0, 1.0);
const MAX_CR_BINS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Generator { which: Generator, seed: u64, snr_db: Option<f64> },
    Csv(PathBuf),
}

/// How the windows of mrct/mrsect are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Windows {
    /// Explicit (σ, β) lists, paired with cycling.
    Explicit { sigma: Vec<f64>, beta: Vec<f64> },
    /// β from the `m` strongest CFT peaks; σ from the list if given, else
    /// from `C_σ/√(2π|β|)`.
    FromPeaks { m: usize, sigma: Vec<f64>, c_sigma: f64 },
}

/// A validated `run` request. Frequencies are in rad/s, chirp rates in rad/s².
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub source: Source,
    pub method: Method,
    pub n_freqs: usize,
    /// Hz; `None` means fs/2.
    pub f_max_hz: Option<f64>,
    pub sigma: Option<f64>,
    pub beta: f64,
    pub windows: Option<Windows>,
    pub cr_axis: Vec<f64>,
    pub extraction: ExtractionConfig,
    pub magnitude: bool,
    pub out: PathBuf,
    /// Extension-typed heatmap (`--png`).
    pub image: Option<PathBuf>,
    /// Grayscale PGM heatmap (`--pgm`), whatever its extension.
    pub pgm: Option<PathBuf>,
    pub colormap: Colormap,
    pub db_floor: f64,
    pub slice_time: Option<(f64, PathBuf)>,
    /// rad/s
    pub slice_freq: Option<(f64, PathBuf)>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn parse_tolerance(s: &str) -> Result<Tolerance, CliError> {
    match s {
        "scaled" => Ok(Tolerance::HalfBinScaled),
        "literal" => Ok(Tolerance::LiteralHalfBin),
        x => x
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0 && v.is_finite())
            .map(Tolerance::Seconds)
            .ok_or_else(|| invalid(format!("tolerance must be `scaled`, `literal` or positive seconds, got {x:?}"))),
    }
}

impl Plan {
    pub fn from_args(a: RunArgs) -> Result<Plan, CliError> {
        let source = match (a.generator, &a.input) {
            (Some(_), Some(_)) => return Err(invalid("give either --generator or --input, not both")),
            (None, None) => return Err(invalid("an input is required: --generator or --input")),
            (Some(which), None) => {
                let seed = a.seed.ok_or_else(|| invalid("seed is required with --generator"))?;
                if let Some(s) = a.snr_db {
                    if s.is_nan() {
                        return Err(invalid("snr-db must be a number"));
                    }
                }
                Source::Generator { which, seed, snr_db: a.snr_db }
            }
            (None, Some(path)) => {
                if a.seed.is_some() || a.snr_db.is_some() {
                    return Err(invalid("seed and snr-db only apply to --generator"));
                }
                Source::Csv(path.clone())
            }
        };
        let method = a.method.ok_or_else(|| invalid("method is required"))?;
        let out = a.out.clone().ok_or_else(|| invalid("out (matrix file path) is required"))?;
        for &s in &a.sigma {
            positive("sigma", s)?;
        }
        if let Some(b) = a.beta_hz_s.iter().find(|b| !b.is_finite()) {
            return Err(invalid(format!("beta-hz-s must be finite, got {b}")));
        }
        let beta = hz_inputs(&a.beta_hz_s);
        let n_freqs = a.n_freqs.unwrap_or(DEFAULT_N_FREQS);
        if n_freqs < 2 {
            return Err(invalid(format!("n-freqs must be at least 2, got {n_freqs}")));
        }
        if let Some(f) = a.f_max_hz {
            positive("f-max-hz", f)?;
        }
        let (lo, hi, step) = (
            a.cr_min_hz_s.unwrap_or(DEFAULT_CR_RANGE_HZ_S.0),
            a.cr_max_hz_s.unwrap_or(DEFAULT_CR_RANGE_HZ_S.1),
            positive("cr-step-hz-s", a.cr_step_hz_s.unwrap_or(DEFAULT_CR_RANGE_HZ_S.2))?,
        );
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid(format!("cr-min-hz-s ({lo}) must not exceed cr-max-hz-s ({hi})")));
        }
        let n_cr = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if n_cr > MAX_CR_BINS {
            return Err(invalid(format!("chirp-rate axis has {n_cr} points; the limit is {MAX_CR_BINS}")));
        }
        let cr_axis = hz_inputs(&(0..n_cr).map(|i| lo + i as f64 * step).collect::<Vec<_>>());
        let c_sigma = positive("c-sigma", a.c_sigma.unwrap_or(1.0))?;

        let one_sigma = |what: &str| -> Result<f64, CliError> {
            match a.sigma.as_slice() {
                [s] => Ok(*s),
                [] => Err(invalid(format!("{what} needs --sigma"))),
                _ => Err(invalid(format!("{what} takes a single sigma, got {}", a.sigma.len()))),
            }
        };
        let no_windows = |what: &str| -> Result<(), CliError> {
            if a.sigma.is_empty() && a.beta_hz_s.is_empty() && a.m.is_none() {
                Ok(())
            } else {
                Err(invalid(format!("{what} takes no sigma, beta-hz-s or m")))
            }
        };
        let (mut sigma, mut beta1, mut windows) = (None, 0.0, None);
        match method {
            Method::Stft => {
                sigma = Some(one_sigma("stft")?);
                if !beta.is_empty() || a.m.is_some() {
                    return Err(invalid("stft takes no beta-hz-s or m"));
                }
            }
            Method::Ct | Method::RotationCt => {
                sigma = Some(one_sigma(method.name())?);
                beta1 = match beta.as_slice() {
                    [] => 0.0,
                    [b] => *b,
                    _ => return Err(invalid(format!("{} takes a single beta-hz-s", method.name()))),
                };
                if a.m.is_some() {
                    return Err(invalid(format!("{} takes no m", method.name())));
                }
            }
            Method::Wvd | Method::Cft => no_windows(method.name())?,
            Method::Mrct | Method::Mrsect => {
                windows = Some(if !beta.is_empty() {
                    if a.sigma.is_empty() {
                        return Err(invalid("explicit beta-hz-s needs --sigma as well"));
                    }
                    let m = a.sigma.len().max(beta.len());
                    if a.m.is_some_and(|k| k != m) {
                        return Err(invalid(format!("m = {} disagrees with the {m} sigma/beta pairs", a.m.unwrap())));
                    }
                    Windows::Explicit { sigma: a.sigma.clone(), beta }
                } else {
                    let m = a.m.unwrap_or(a.sigma.len());
                    if m == 0 {
                        return Err(invalid(format!("{} needs --m or --sigma", method.name())));
                    }
                    Windows::FromPeaks { m, sigma: a.sigma.clone(), c_sigma }
                });
            }
        }
        let mut extraction = ExtractionConfig::default();
        if let Some(g) = a.gamma_rel {
            if !(g > 0.0 && g < 1.0) {
                return Err(invalid(format!("gamma-rel must lie in (0, 1), got {g}")));
            }
            extraction.gamma_rel = g;
        }
        if let Some(t) = &a.tolerance {
            extraction.tolerance = parse_tolerance(t)?;
        }
        let db_floor = positive("db-floor", a.db_floor.unwrap_or(DEFAULT_DB_FLOOR))?;
        let colormap = a.colormap.unwrap_or_default();
        if a.pgm.is_some() && colormap != Colormap::Gray {
            return Err(invalid("pgm output is grayscale; drop --colormap or use --png"));
        }
        let slice_time = match (a.slice_time, a.slice_time_csv) {
            (Some(t), Some(p)) => Some((t, p)),
            (None, None) => None,
            _ => return Err(invalid("slice-time and slice-time-csv go together")),
        };
        let slice_freq = match (a.slice_freq_hz, a.slice_freq_csv) {
            (Some(f), Some(p)) => Some((chirplet::hz_to_rad(f), p)),
            (None, None) => None,
            _ => return Err(invalid("slice-freq-hz and slice-freq-csv go together")),
        };
        Ok(Plan {
            source,
            method,
            n_freqs,
            f_max_hz: a.f_max_hz,
            sigma,
            beta: beta1,
            windows,
            cr_axis,
            extraction,
            magnitude: a.magnitude,
            out,
            image: a.png.clone(),
            pgm: a.pgm.clone(),
            colormap,
            db_floor,
            slice_time,
            slice_freq,
        })
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Produces the analysis signal. Real CSV input is made analytic first.
pub fn load_signal(source: &Source) -> Result<Signal, CliError> {
    match source {
        Source::Generator { which, seed, snr_db } => {
            let s = match which {
                Generator::Example1 => {
                    synth_example1_with(*seed, snr_db.unwrap_or(10.0), SnrReference::Mixture)?.noisy
                }
                Generator::Example2 => {
                    synth_example2_with(*seed, snr_db.unwrap_or(8.0), SnrReference::Mixture)?.noisy
                }
                Generator::ChirpsAndPulses => {
                    let clean = synth_chirps_and_pulses()?;
                    add_awgn(&clean, snr_db.unwrap_or(f64::INFINITY), *seed)?
                }
            };
            Ok(s)
        }
        Source::Csv(path) => {
            let file = File::open(path).map_err(|e| io_err(path, e))?;
            let s = read_csv(BufReader::new(file)).map_err(|e| io_err(path, e))?;
            Ok(if s.is_real() { analytic(&s)? } else { s })
        }
    }
}

/// A computed map ready for export.
#[derive(Debug, Clone)]
pub struct Computed {
    pub file: TfmFile,
    /// Magnitude view used for slices and images.
    pub magnitude: RealTf,
    /// Windows used by mrct/mrsect.
    pub params: Option<ParameterSet>,
    pub warning: Option<String>,
}

fn axes_of(grid: &TfGrid) -> Axes {
    Axes {
        dt: grid.dt(),
        dw: grid.dw(),
        t0: grid.times()[0],
        f0: grid.freqs()[0],
    }
}

fn real_data(tf: &RealTf) -> MatrixData {
    MatrixData::Real(tf.values().mapv(|v| v as f32))
}

fn complex_out(tf: ComplexTf, magnitude: bool) -> (MatrixData, RealTf) {
    let mag = tf.abs();
    let data = if magnitude {
        real_data(&mag)
    } else {
        MatrixData::Complex(tf.values().mapv(|z| Complex32::new(z.re as f32, z.im as f32)))
    };
    (data, mag)
}

fn windows_for(plan: &Plan, w: &Windows, signal: &Signal, grid: &TfGrid) -> Result<(ParameterSet, Option<String>), CliError> {
    match w {
        Windows::Explicit { sigma, beta } => Ok((ParameterSet::from_pairs(sigma, beta)?, None)),
        Windows::FromPeaks { m, sigma, c_sigma } => {
            let sel = select_parameters(signal, *m, *c_sigma, grid.freqs(), &plan.cr_axis)?;
            if sigma.is_empty() {
                let warn = sel
                    .incomplete
                    .then(|| format!("only {} of {m} windows could be derived from CFT peaks", sel.params.m()));
                return Ok((sel.params, warn));
            }
            let betas: Vec<f64> = sel.peaks.peaks.iter().map(|p| p.beta).collect();
            let warn = (betas.len() < *m).then(|| format!("only {} of {m} CFT peaks found", betas.len()));
            let entries = (0..betas.len())
                .map(|i| WindowParams::new(sigma[i % sigma.len()], betas[i]))
                .collect::<chirplet::Result<Vec<_>>>()?;
            Ok((ParameterSet::new(entries)?, warn))
        }
    }
}

/// Runs the transform of a plan on `signal`.
pub fn compute(plan: &Plan, signal: &Signal) -> Result<Computed, CliError> {
    let f_max = plan.f_max_hz.unwrap_or(signal.fs() / 2.0);
    let grid = make_tf_grid(signal, plan.n_freqs, f_max)?;
    let axes = axes_of(&grid);
    let (mut params, mut warning) = (None, None);
    let (data, magnitude, axes) = match plan.method {
        Method::Stft => {
            let (d, m) = complex_out(stft(signal, plan.sigma.expect("validated"), &grid)?, plan.magnitude);
            (d, m, axes)
        }
        Method::Ct | Method::RotationCt => {
            let wp = WindowParams::new(plan.sigma.expect("validated"), plan.beta)?;
            let tf = if plan.method == Method::Ct {
                ct(signal, &wp, &grid)?
            } else {
                rotation_ct(signal, &wp, &grid)?
            };
            let (d, m) = complex_out(tf, plan.magnitude);
            (d, m, axes)
        }
        Method::Wvd => {
            let w = wvd(signal, &grid)?;
            let mag = TfMatrix::magnitude(grid.clone(), w.values().mapv(f64::abs))?;
            (real_data(&w), mag, axes)
        }
        Method::Cft => {
            // Rows stay frequency bins; columns run over chirp rate.
            let spec = cft(signal, grid.freqs(), &plan.cr_axis)?;
            let values: Array2<f64> = spec.mag().t().to_owned();
            let cr_grid = TfGrid::new(plan.cr_axis.clone(), grid.freqs().to_vec())?;
            let mag = TfMatrix::magnitude(cr_grid.clone(), values)?;
            let axes = Axes {
                dt: cr_grid.dt(),
                t0: plan.cr_axis[0],
                ..axes
            };
            (real_data(&mag), mag, axes)
        }
        Method::Mrct | Method::Mrsect => {
            let (p, warn) = windows_for(plan, plan.windows.as_ref().expect("validated"), signal, &grid)?;
            warning = warn;
            let mag = if plan.method == Method::Mrct {
                mrct(signal, &p, &grid)?.into_magnitude()
            } else {
                extract(signal, &p, &grid, &plan.extraction)?.mrsec
            };
            params = Some(p);
            (real_data(&mag), mag, axes)
        }
    };
    Ok(Computed {
        file: TfmFile { axes, data },
        magnitude,
        params,
        warning,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

pub fn run(args: RunArgs) -> Result<String, CliError> {
    let plan = Plan::from_args(args.resolve()?)?;
    let start = Instant::now();
    let signal = load_signal(&plan.source)?;
    let out = compute(&plan, &signal)?;
    if let Some(w) = &out.warning {
        eprintln!("chirplet: warning: {w}");
    }
    write_tfm(&out.file, create(&plan.out)?).map_err(|e| match e {
        crate::matrix::MatrixError::Io(io) => io_err(&plan.out, io),
        other => other.into(),
    })?;
    let mut written = vec![plan.out.display().to_string()];
    if plan.image.is_some() || plan.pgm.is_some() {
        let levels = db_levels(&out.file.data.magnitude(), plan.db_floor)?;
        if let Some(path) = &plan.image {
            save_image(&levels, plan.colormap, path).map_err(|e| match e {
                crate::render::RenderError::Invalid(..) => CliError::from(e),
                other => io_err(path, other),
            })?;
            written.push(path.display().to_string());
        }
        if let Some(path) = &plan.pgm {
            write_pgm(&levels, create(path)?).map_err(|e| io_err(path, e))?;
            written.push(path.display().to_string());
        }
    }
    if let Some((t, path)) = &plan.slice_time {
        slice_at_time(&out.magnitude, *t)?.write_csv(create(path)?)?;
        written.push(path.display().to_string());
    }
    if let Some((w, path)) = &plan.slice_freq {
        slice_at_freq(&out.magnitude, *w)?.write_csv(create(path)?)?;
        written.push(path.display().to_string());
    }
    let (rows, cols) = out.file.data.dim();
    Ok(format!(
        "{} {rows}x{cols} in {:.3} s -> {}",
        plan.method.name(),
        start.elapsed().as_secs_f64(),
        written.join(", ")
    ))
}

pub fn render(args: RenderArgs) -> Result<String, CliError> {
    let file = File::open(&args.matrix).map_err(|e| io_err(&args.matrix, e))?;
    let tfm = read_tfm(BufReader::new(file)).map_err(|e| io_err(&args.matrix, e))?;
    let levels = db_levels(&tfm.data.magnitude(), args.db_floor)?;
    save_image(&levels, args.colormap, &args.out).map_err(|e| match e {
        crate::render::RenderError::Invalid(..) => CliError::from(e),
        other => io_err(&args.out, other),
    })?;
    let (rows, cols) = tfm.data.dim();
    Ok(format!("rendered {rows}x{cols} -> {}", args.out.display()))
}
