//! Test-signal synthesis, calibrated noise, analytic conversion and the CSV
//! signal format.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::{Error, Result, Signal};

/// Amplitude law of a chirp component.
#[derive(Clone)]
pub enum Amplitude {
    Constant(f64),
    Envelope(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Amplitude {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Amplitude::Constant(a) => *a,
            Amplitude::Envelope(f) => f(t),
        }
    }
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amplitude::Constant(a) => write!(f, "Constant({a})"),
            Amplitude::Envelope(_) => f.write_str("Envelope(..)"),
        }
    }
}

/// Linear chirp `amp(t)·exp(j(a·t + b/2·t²))` restricted to `support`.
#[derive(Debug, Clone)]
pub struct ChirpSpec {
    pub amp: Amplitude,
    /// Initial angular frequency, rad/s.
    pub a: f64,
    /// Chirp rate, rad/s².
    pub b: f64,
    /// `[t_start, t_end]` in seconds, inclusive.
    pub support: (f64, f64),
}

impl ChirpSpec {
    pub fn new(amp: f64, a: f64, b: f64, support: (f64, f64)) -> Self {
        ChirpSpec {
            amp: Amplitude::Constant(amp),
            a,
            b,
            support,
        }
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.a * t + 0.5 * self.b * t * t
    }

    /// Instantaneous angular frequency `a + b·t`.
    pub fn inst_freq(&self, t: f64) -> f64 {
        self.a + self.b * t
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.support.0 && t <= self.support.1
    }

    /// Value at time `t` (zero outside the support).
    pub fn value(&self, t: f64) -> Complex64 {
        if self.contains(t) {
            Complex64::from_polar(self.amp.at(t), self.phase(t))
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn validate(&self, fs: f64, t_lo: f64, t_hi: f64) -> Result<()> {
        let (s, e) = self.support;
        if !(s < e) {
            return Err(Error::invalid("support", format!("need t_start < t_end, got [{s}, {e}]")));
        }
        // IF is linear, so its extremes sit at the ends of the covered interval
        let lo = s.max(t_lo);
        let hi = e.min(t_hi);
        if lo <= hi {
            let peak = self.inst_freq(lo).abs().max(self.inst_freq(hi).abs());
            if peak >= PI * fs {
                return Err(Error::invalid(
                    "fs",
                    format!(
                        "instantaneous frequency reaches {:.3} Hz, above Nyquist {:.3} Hz",
                        crate::rad_to_hz(peak),
                        fs / 2.0
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Samples a chirp on `[0, duration)` at `fs`.
pub fn synth_chirp(spec: &ChirpSpec, fs: f64, duration: f64) -> Result<Signal> {
    let n = record_len(fs, duration)?;
    synth_chirp_on(spec, fs, 0.0, n)
}

/// Samples a chirp on `n` samples starting at `t0`.
pub fn synth_chirp_on(spec: &ChirpSpec, fs: f64, t0: f64, n: usize) -> Result<Signal> {
    if !(fs > 0.0) {
        return Err(Error::invalid("fs", "sample rate must be > 0"));
    }
    spec.validate(fs, t0, t0 + (n.max(1) - 1) as f64 / fs)?;
    Signal::from_fn(fs, t0, n, |t| spec.value(t))
}

fn record_len(fs: f64, duration: f64) -> Result<usize> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("fs", format!("sample rate must be > 0, got {fs}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid("duration", format!("must be > 0, got {duration}")));
    }
    let n = (duration * fs).round() as usize;
    if n == 0 {
        return Err(Error::invalid("duration", "record shorter than one sample"));
    }
    Ok(n)
}

/// Scaled Dirac impulse `amp·δ(t − t0)`.
#[derive(Debug, Clone, Copy)]
pub struct ImpulseSpec {
    pub amp: f64,
    pub t0: f64,
}

/// Discrete delta: one sample of value `amp·fs` at the bin nearest `t0`, so
/// that `Σ samples / fs = amp`.
pub fn synth_impulse(spec: &ImpulseSpec, fs: f64, duration: f64) -> Result<Signal> {
    let n = record_len(fs, duration)?;
    if !(spec.t0 >= 0.0 && spec.t0 < duration) {
        return Err(Error::invalid("t0", format!("impulse at {} s outside [0, {duration})", spec.t0)));
    }
    let idx = ((spec.t0 * fs).round() as usize).min(n - 1);
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    samples[idx] = Complex64::new(spec.amp * fs, 0.0);
    Signal::new(samples, fs, 0.0)
}

/// Which power the SNR of a generated test signal refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrReference {
    /// Mean power of the whole clean mixture.
    #[default]
    Mixture,
    /// Mean power of the component with this index.
    Component(usize),
}

/// A generated test signal with its exact clean/noise decomposition.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub noisy: Signal,
    pub clean: Signal,
    /// Individual clean components, in the order they are defined.
    pub components: Vec<Signal>,
}

impl Synthetic {
    pub fn noise(&self) -> Signal {
        self.noisy
            .add(&self.clean.scaled(-1.0))
            .expect("noisy and clean share a lattice")
    }

    /// Empirical SNR in dB of `noisy` against `clean`.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.clean.power() / self.noise().power()).log10()
    }
}

/// Instantaneous frequencies (rad/s) of the two chirps of the close-chirp
/// example: `2π(20 + 80t)` and `2π(34 + 80t)`.
pub fn example1_if(component: usize, t: f64) -> f64 {
    match component {
        0 => 2.0 * PI * (20.0 + 80.0 * t),
        1 => 2.0 * PI * (34.0 + 80.0 * t),
        _ => panic!("example 1 has two chirp components with a known IF law"),
    }
}

/// Instantaneous frequencies (rad/s) of the two cosine-FM modes of the
/// second example: `2π(80 + 18π cos 2πt)` and `2π(115 + 18π cos 2πt)`.
pub fn example2_if(component: usize, t: f64) -> f64 {
    let base = match component {
        0 => 80.0,
        1 => 115.0,
        _ => panic!("example 2 has two FM modes with a known IF law"),
    };
    2.0 * PI * (base + 18.0 * PI * (2.0 * PI * t).cos())
}

/// Pulse centers (s) of the second example.
pub const EXAMPLE2_PULSES: [f64; 2] = [0.46, 0.52];

/// Two close parallel chirps plus two far-DFT-domain chirps, 256 Hz, 2 s,
/// 10 dB SNR.
///
/// The real sine chirps are converted to their analytic form before the
/// DFT-domain components are added, so the returned signal is complex.
pub fn synth_example1(seed: u64) -> Result<Synthetic> {
    synth_example1_with(seed, 10.0, SnrReference::Mixture)
}

pub fn synth_example1_with(seed: u64, snr_db: f64, reference: SnrReference) -> Result<Synthetic> {
    let fs = 256.0;
    let n = 512;
    let t = |k: usize| k as f64 / fs;
    let sine_chirp = |f0: f64, half_rate: f64, lo: f64, hi: f64| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let tk = t(k);
                if tk >= lo && tk <= hi {
                    (2.0 * PI * (f0 * tk + half_rate * tk * tk)).sin()
                } else {
                    0.0
                }
            })
            .collect()
    };
    let f1 = analytic(&Signal::from_real(&sine_chirp(20.0, 40.0, 0.0, 1.0), fs, 0.0)?)?;
    let f2 = analytic(&Signal::from_real(&sine_chirp(34.0, 40.0, 0.1, 0.78), fs, 0.0)?)?;
    let dft_chirp = |f0: f64| -> Result<Signal> {
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| {
                let tk = t(k);
                Complex64::from_polar(0.02, 2.0 * PI * (f0 * tk - 5.0 * tk * tk))
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let norm = 1.0 / (n as f64).sqrt();
        Signal::new(buf.into_iter().map(|z| z * norm).collect(), fs, 0.0)
    };
    let f3 = dft_chirp(430.0)?;
    let f4 = dft_chirp(445.0)?;
    assemble(vec![f1, f2, f3, f4], snr_db, reference, seed)
}

/// Two cosine-FM modes plus two Gaussian pulses, 512 Hz, 1 s, 8 dB SNR,
/// returned in analytic form.
pub fn synth_example2(seed: u64) -> Result<Synthetic> {
    synth_example2_with(seed, 8.0, SnrReference::Mixture)
}

pub fn synth_example2_with(seed: u64, snr_db: f64, reference: SnrReference) -> Result<Synthetic> {
    let fs = 512.0;
    let n = 512;
    let real = |f: &dyn Fn(f64) -> f64| -> Result<Signal> {
        let x: Vec<f64> = (0..n).map(|k| f(k as f64 / fs)).collect();
        analytic(&Signal::from_real(&x, fs, 0.0)?)
    };
    let fm = |depth: f64, carrier: f64| {
        move |t: f64| {
            (1.0 + depth * (20.0 * PI * t).cos())
                * (2.0 * PI * (9.0 * (2.0 * PI * t).sin() + carrier * t)).cos()
        }
    };
    let pulse = |center: f64| {
        move |t: f64| 5.0 * (-10000.0 * PI * (t - center).powi(2)).exp() * (340.0 * PI * t).cos()
    };
    let comps = vec![
        real(&fm(0.05, 80.0))?,
        real(&fm(0.1, 115.0))?,
        real(&pulse(EXAMPLE2_PULSES[0]))?,
        real(&pulse(EXAMPLE2_PULSES[1]))?,
    ];
    assemble(comps, snr_db, reference, seed)
}

/// Two parallel chirps (chirp rate 7 rad/s², 2 Hz apart) and two impulses
/// 0.5 s apart; 128 Hz, 4 s, noiseless.
///
/// A short window separates the impulses but mixes the chirps; a long one does
/// the opposite.
pub fn synth_chirps_and_pulses() -> Result<Signal> {
    let fs = 128.0;
    let n = 512;
    let c1 = ChirpSpec::new(1.0, 2.0 * PI * 20.0, 7.0, (0.0, 4.0));
    let c2 = ChirpSpec::new(1.0, 2.0 * PI * 22.0, 7.0, (0.0, 4.0));
    let mut s = Signal::from_fn(fs, 0.0, n, |t| c1.value(t) + c2.value(t))?.into_samples();
    for &tc in &CHIRPS_AND_PULSES_IMPULSES {
        s[(tc * fs).round() as usize] += Complex64::new(0.25 * fs, 0.0);
    }
    Signal::new(s, fs, 0.0)
}

/// Impulse times (s) of [`synth_chirps_and_pulses`].
pub const CHIRPS_AND_PULSES_IMPULSES: [f64; 2] = [1.5, 2.0];

fn assemble(components: Vec<Signal>, snr_db: f64, reference: SnrReference, seed: u64) -> Result<Synthetic> {
    let mut clean = components[0].clone();
    for c in &components[1..] {
        clean = clean.add(c)?;
    }
    let ref_power = match reference {
        SnrReference::Mixture => clean.power(),
        SnrReference::Component(k) => components
            .get(k)
            .ok_or_else(|| Error::invalid("reference", format!("no component {k}")))?
            .power(),
    };
    let noise = awgn_noise(&clean, ref_power, snr_db, seed)?;
    let noisy = clean.add(&noise)?;
    Ok(Synthetic {
        noisy,
        clean,
        components,
    })
}

/// Adds white Gaussian noise scaled so that the empirical SNR
/// `10·log10(P_signal / P_noise)` equals `snr_db` exactly, with `P` the mean
/// squared magnitude. Real input receives real noise, complex input circular
/// complex noise. `snr_db = +∞` returns the input unchanged.
pub fn add_awgn(signal: &Signal, snr_db: f64, seed: u64) -> Result<Signal> {
    let noise = awgn_noise(signal, signal.power(), snr_db, seed)?;
    signal.add(&noise)
}

fn awgn_noise(signal: &Signal, ref_power: f64, snr_db: f64, seed: u64) -> Result<Signal> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid("snr_db", format!("unsupported value {snr_db}")));
    }
    if !(ref_power > 0.0) {
        return Err(Error::invalid("signal", "all-zero signal, SNR undefined"));
    }
    let zero = vec![Complex64::new(0.0, 0.0); signal.len()];
    if snr_db == f64::INFINITY {
        return Signal::new(zero, signal.fs(), signal.t0());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = signal.is_real();
    let mut noise: Vec<Complex64> = (0..signal.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = if real { 0.0 } else { StandardNormal.sample(&mut rng) };
            Complex64::new(re, im)
        })
        .collect();
    let p = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / noise.len() as f64;
    let target = ref_power / 10f64.powf(snr_db / 10.0);
    let g = (target / p).sqrt();
    noise.iter_mut().for_each(|z| *z *= g);
    Signal::new(noise, signal.fs(), signal.t0())
}

/// Discrete analytic signal: negative-frequency DFT bins zeroed, interior
/// positive bins doubled, DC (and Nyquist for even lengths) kept.
pub fn analytic(signal: &Signal) -> Result<Signal> {
    if !signal.is_real() {
        return Err(Error::invalid("signal", "analytic() expects a real-valued signal"));
    }
    let n = signal.len();
    let mut buf = signal.samples().to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= gain / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Signal::new(buf, signal.fs(), signal.t0())
}

/// Reads the CSV signal format: a `# fs=<Hz> t0=<s>` header, then one `re,im`
/// pair per line (`im` optional).
pub fn read_csv(reader: impl BufRead) -> Result<Signal> {
    let mut fs = None;
    let mut t0 = 0.0;
    let mut samples = Vec::new();
    let bad = |line: usize, why: String| Error::format("signal CSV", format!("line {line}: {why}"));
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if fs.is_some() || !samples.is_empty() {
                continue;
            }
            for tok in header.split_whitespace() {
                let (key, val) = tok
                    .split_once('=')
                    .ok_or_else(|| bad(i + 1, format!("expected key=value, got {tok:?}")))?;
                let val: f64 = val
                    .parse()
                    .map_err(|_| bad(i + 1, format!("bad number {val:?}")))?;
                match key {
                    "fs" => fs = Some(val),
                    "t0" => t0 = val,
                    _ => {}
                }
            }
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let re = cols.next().unwrap_or_default();
        let re: f64 = re.parse().map_err(|_| bad(i + 1, format!("bad real part {re:?}")))?;
        let im = match cols.next() {
            Some(s) if !s.is_empty() => s
                .parse()
                .map_err(|_| bad(i + 1, format!("bad imaginary part {s:?}")))?,
            _ => 0.0,
        };
        samples.push(Complex64::new(re, im));
    }
    let fs = fs.ok_or_else(|| Error::format("signal CSV", "missing `# fs=<Hz>` header"))?;
    Signal::new(samples, fs, t0)
}

pub fn write_csv(signal: &Signal, mut w: impl Write) -> Result<()> {
    writeln!(w, "# fs={} t0={}", signal.fs(), signal.t0())?;
    for z in signal.samples() {
        writeln!(w, "{},{}", z.re, z.im)?;
    }
    Ok(())
}
