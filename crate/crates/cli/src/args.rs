//! Command-line flags and their TOML mirror.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::render::Colormap;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "chirplet", version, about = "Chirplet-transform time-frequency analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a TF map and write it as a TFM1 matrix (plus optional images and slices).
    Run(Box<RunArgs>),
    /// Render a TFM1 matrix file as an image.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Two close parallel chirps plus two DFT-domain chirps (256 Hz, 2 s, 10 dB).
    Example1,
    /// Two cosine-FM modes plus two Gaussian pulses (512 Hz, 1 s, 8 dB).
    Example2,
    /// Two parallel chirps and two impulses (128 Hz, 4 s, noiseless).
    ChirpsAndPulses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Stft,
    Ct,
    RotationCt,
    Wvd,
    Cft,
    Mrct,
    Mrsect,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Stft => "stft",
            Method::Ct => "ct",
            Method::RotationCt => "rotation-ct",
            Method::Wvd => "wvd",
            Method::Cft => "cft",
            Method::Mrct => "mrct",
            Method::Mrsect => "mrsect",
        }
    }
}

/// Flags of `run`. A `--config` file may set any of them using the flag names
/// as keys; flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Built-in test signal.
    #[arg(long, value_enum)]
    pub generator: Option<Generator>,
    /// Noise seed; required with --generator.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the generator's SNR (dB); `inf` disables noise.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Signal CSV (`# fs=<Hz> t0=<s>` header, then `re[,im]` per line).
    #[arg(long)]
    pub input: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Window widths σ (s), comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    /// Window chirp rates β (Hz/s), comma separated or repeated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta_hz_s: Vec<f64>,
    /// Number of windows for mrct/mrsect when chirp rates come from CFT peaks.
    #[arg(long)]
    pub m: Option<usize>,
    /// Width constant C_σ of σ = C_σ/√(2π|β|) [default: 1].
    #[arg(long)]
    pub c_sigma: Option<f64>,
    /// Relative magnitude threshold of mrsect [default: 0.01].
    #[arg(long)]
    pub gamma_rel: Option<f64>,
    /// mrsect tolerance: `scaled` (σ̄²·dω/2), `literal` (dω/2) or seconds [default: scaled].
    #[arg(long)]
    pub tolerance: Option<String>,

    /// Frequency bins over [0, f_max] [default: 128].
    #[arg(long)]
    pub n_freqs: Option<usize>,
    /// Highest frequency (Hz) [default: fs/2].
    #[arg(long)]
    pub f_max_hz: Option<f64>,
    /// Chirp-rate axis start (Hz/s) for cft and parameter selection [default: -100].
    #[arg(long, allow_negative_numbers = true)]
    pub cr_min_hz_s: Option<f64>,
    /// Chirp-rate axis end (Hz/s) [default: 100].
    #[arg(long, allow_negative_numbers = true)]
    pub cr_max_hz_s: Option<f64>,
    /// Chirp-rate axis step (Hz/s) [default: 1].
    #[arg(long)]
    pub cr_step_hz_s: Option<f64>,

    /// Write |·| (f32) instead of complex values for stft/ct/rotation-ct.
    #[arg(long)]
    pub magnitude: bool,
    /// Output matrix file (TFM1).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Heatmap image (.png, .pgm or .ppm).
    #[arg(long)]
    pub png: Option<PathBuf>,
    /// Grayscale PGM heatmap.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub colormap: Option<Colormap>,
    /// Dynamic range of the heatmap (dB) [default: 60].
    #[arg(long)]
    pub db_floor: Option<f64>,

    /// Time (s) of a frequency slice to export.
    #[arg(long, requires = "slice_time_csv")]
    pub slice_time: Option<f64>,
    #[arg(long, requires = "slice_time")]
    pub slice_time_csv: Option<PathBuf>,
    /// Frequency (Hz) of a time slice to export.
    #[arg(long, requires = "slice_freq_csv")]
    pub slice_freq_hz: Option<f64>,
    #[arg(long, requires = "slice_freq_hz")]
    pub slice_freq_csv: Option<PathBuf>,
}

impl RunArgs {
    /// Loads `--config` (if any) underneath the command-line values.
    pub fn resolve(self) -> Result<RunArgs, CliError> {
        match self.config.clone() {
            Some(path) => Ok(self.over(load_config(&path)?)),
            None => Ok(self),
        }
    }

    fn over(self, base: RunArgs) -> RunArgs {
        fn pick<T>(a: Option<T>, b: Option<T>) -> Option<T> {
            a.or(b)
        }
        fn list(a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
            if a.is_empty() {
                b
            } else {
                a
            }
        }
        RunArgs {
            config: self.config,
            generator: pick(self.generator, base.generator),
            seed: pick(self.seed, base.seed),
            snr_db: pick(self.snr_db, base.snr_db),
            input: pick(self.input, base.input),
            method: pick(self.method, base.method),
            sigma: list(self.sigma, base.sigma),
            beta_hz_s: list(self.beta_hz_s, base.beta_hz_s),
            m: pick(self.m, base.m),
            c_sigma: pick(self.c_sigma, base.c_sigma),
            gamma_rel: pick(self.gamma_rel, base.gamma_rel),
            tolerance: pick(self.tolerance, base.tolerance),
            n_freqs: pick(self.n_freqs, base.n_freqs),
            f_max_hz: pick(self.f_max_hz, base.f_max_hz),
            cr_min_hz_s: pick(self.cr_min_hz_s, base.cr_min_hz_s),
            cr_max_hz_s: pick(self.cr_max_hz_s, base.cr_max_hz_s),
            cr_step_hz_s: pick(self.cr_step_hz_s, base.cr_step_hz_s),
            magnitude: self.magnitude || base.magnitude,
            out: pick(self.out, base.out),
            png: pick(self.png, base.png),
            pgm: pick(self.pgm, base.pgm),
            colormap: pick(self.colormap, base.colormap),
            db_floor: pick(self.db_floor, base.db_floor),
            slice_time: pick(self.slice_time, base.slice_time),
            slice_time_csv: pick(self.slice_time_csv, base.slice_time_csv),
            slice_freq_hz: pick(self.slice_freq_hz, base.slice_freq_hz),
            slice_freq_csv: pick(self.slice_freq_csv, base.slice_freq_csv),
        }
    }
}

fn load_config(path: &Path) -> Result<RunArgs, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// TFM1 matrix file.
    pub matrix: PathBuf,
    /// Output image (.png, .pgm or .ppm).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Colormap::Gray)]
    pub colormap: Colormap,
    #[arg(long, default_value_t = crate::render::DEFAULT_DB_FLOOR)]
    pub db_floor: f64,
}
