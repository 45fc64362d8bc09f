use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chirplet::extract::{extract, ExtractionConfig};
use chirplet::metrics::{find_peaks, slice_at_freq, slice_at_time};
use chirplet::signals::{synth_chirps_and_pulses, synth_example1};
use chirplet::{make_tf_grid, hz_to_rad, ParameterSet, RealTf, TfGrid, TfMatrix};
use chirplet_cli::matrix::{read_tfm, write_tfm, Axes, MatrixData, TfmFile};
use ndarray::Array2;
use tempfile::TempDir;

fn chirplet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chirplet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = chirplet(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    chirplet(dir, args).status.code().expect("exit code")
}

fn load(path: PathBuf) -> TfmFile {
    read_tfm(fs::File::open(path).unwrap()).unwrap()
}

fn pgm(path: PathBuf) -> Array2<u8> {
    let bytes = fs::read(path).unwrap();
    let text = String::from_utf8_lossy(&bytes[..20]).to_string();
    let mut it = text.split_ascii_whitespace();
    assert_eq!(it.next(), Some("P5"));
    let cols: usize = it.next().unwrap().parse().unwrap();
    let rows: usize = it.next().unwrap().parse().unwrap();
    let body = &bytes[bytes.len() - rows * cols..];
    Array2::from_shape_vec((rows, cols), body.to_vec()).unwrap()
}

#[test]
fn default_grid_run_writes_matrix_and_image() {
    let dir = TempDir::new().unwrap();
    let line = ok(
        dir.path(),
        &["run", "--generator", "example1", "--seed", "7", "--method", "mrct", "--m", "3", "--out", "tf.bin", "--png", "tf.png"],
    );
    assert_eq!(line.lines().count(), 1);
    assert!(line.contains("128x512"), "{line}");
    let tf = load(dir.path().join("tf.bin"));
    assert_eq!(tf.data.dim(), (128, 512));
    assert_eq!(tf.data.dtype(), "f32");
    assert_eq!(tf.axes.dt as f32, (1.0 / 256.0) as f32);
    assert!(fs::metadata(dir.path().join("tf.png")).unwrap().len() > 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for name in ["a.bin", "b.bin"] {
        ok(
            dir.path(),
            &["run", "--generator", "example2", "--seed", "3", "--method", "mrsect", "--m", "2", "--out", name],
        );
    }
    assert_eq!(fs::read(dir.path().join("a.bin")).unwrap(), fs::read(dir.path().join("b.bin")).unwrap());
}

#[test]
fn matrix_matches_direct_library_call() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "run", "--generator", "example1", "--seed", "2", "--method", "mrsect", "--sigma", "0.1,0.2",
            "--beta-hz-s", "80,0", "--out", "cli.bin",
        ],
    );
    let s = synth_example1(2).unwrap().noisy;
    let g = make_tf_grid(&s, 128, 128.0).unwrap();
    let p = ParameterSet::from_pairs(&[0.1, 0.2], &[hz_to_rad(80.0), 0.0]).unwrap();
    let sec = extract(&s, &p, &g, &ExtractionConfig::default()).unwrap().mrsec;
    let lib = TfmFile {
        axes: Axes {
            dt: g.dt(),
            dw: g.dw(),
            t0: g.times()[0],
            f0: g.freqs()[0],
        },
        data: MatrixData::Real(sec.values().mapv(|v| v as f32)),
    };
    let mut bytes = Vec::new();
    write_tfm(&lib, &mut bytes).unwrap();
    assert_eq!(fs::read(dir.path().join("cli.bin")).unwrap(), bytes);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let base = ["run", "--generator", "example1", "--seed", "1"];
    let with = |extra: &[&'static str]| -> Vec<&str> { base.iter().chain(extra).copied().collect() };
    assert_eq!(code(d, &["run", "--generator", "example1", "--method", "wvd", "--out", "x.bin"]), 2);
    assert_eq!(code(d, &with(&["--method", "stft", "--sigma", "-0.1", "--out", "x.bin"])), 2);
    assert_eq!(code(d, &with(&["--method", "ct", "--out", "x.bin"])), 2);
    assert_eq!(code(d, &with(&["--method", "mrct", "--out", "x.bin"])), 2);
    assert_eq!(code(d, &with(&["--method", "wvd", "--f-max-hz", "500", "--out", "x.bin"])), 2);
    assert_eq!(code(d, &with(&["--method", "mrsect", "--m", "2", "--gamma-rel", "2", "--out", "x.bin"])), 2);
    assert_eq!(code(d, &with(&["--method", "wvd", "--out", "x.bin", "--pgm", "x.pgm", "--colormap", "viridis"])), 2);
    assert_eq!(code(d, &with(&["--method", "wvd"])), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
    assert_eq!(code(d, &with(&["--method", "wvd", "--out", "missing/x.bin"])), 3);
    assert_eq!(code(d, &["run", "--input", "nope.csv", "--method", "wvd", "--out", "x.bin"]), 3);
    fs::write(d.join("bad.bin"), b"TFM1 2 2 f32 1 1 0 0").unwrap();
    assert_eq!(code(d, &["render", "bad.bin", "--out", "x.pgm"]), 3);
    assert_eq!(code(d, &with(&["--method", "wvd", "--out", "x.bin"])), 0);
    let stderr = String::from_utf8(chirplet(d, &with(&["--method", "ct", "--out", "x.bin"])).stderr).unwrap();
    assert!(stderr.contains("sigma"), "{stderr}");
}

#[test]
fn config_file_mirrors_flags() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.toml"),
        "generator = \"example1\"\nseed = 4\nmethod = \"stft\"\nsigma = [0.1]\nn-freqs = 64\nmagnitude = true\nout = \"cfg.bin\"\n",
    )
    .unwrap();
    ok(d, &["run", "--config", "run.toml"]);
    let cfg = load(d.join("cfg.bin"));
    assert_eq!(cfg.data.dim(), (64, 512));
    assert_eq!(cfg.data.dtype(), "f32");
    // Command-line values override the file.
    ok(d, &["run", "--config", "run.toml", "--method", "ct", "--beta-hz-s", "80", "--n-freqs", "32", "--out", "flag.bin"]);
    assert_eq!(load(d.join("flag.bin")).data.dim(), (32, 512));
    fs::write(d.join("typo.toml"), "sigmaa = [0.1]\n").unwrap();
    assert_eq!(code(d, &["run", "--config", "typo.toml"]), 2);
    assert_eq!(code(d, &["run", "--config", "absent.toml"]), 3);
}

fn write_matrix(path: &Path, values: Array2<f32>) {
    let file = TfmFile {
        axes: Axes { dt: 0.01, dw: 1.0, t0: 0.0, f0: 0.0 },
        data: MatrixData::Real(values),
    };
    write_tfm(&file, fs::File::create(path).unwrap()).unwrap();
}

#[test]
fn render_orientation() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let mut m = Array2::<f32>::zeros((6, 9));
    m[[1, 7]] = 3.0;
    write_matrix(&d.join("one.bin"), m);
    ok(d, &["render", "one.bin", "--out", "one.pgm"]);
    let img = pgm(d.join("one.pgm"));
    assert_eq!(img.dim(), (6, 9));
    for ((r, c), &v) in img.indexed_iter() {
        // Frequency row 1 of 6 is the second row from the bottom.
        assert_eq!(v, if (r, c) == (4, 7) { 255 } else { 0 });
    }
    write_matrix(&d.join("zero.bin"), Array2::zeros((4, 5)));
    ok(d, &["render", "zero.bin", "--out", "zero.pgm"]);
    let img = pgm(d.join("zero.pgm"));
    assert!(img.iter().all(|&v| v == img[[0, 0]]));
    ok(d, &["render", "one.bin", "--out", "one.ppm", "--colormap", "viridis"]);
    ok(d, &["render", "one.bin", "--out", "one.png", "--colormap", "viridis"]);
}

#[test]
fn example1_render_shows_twin_ridges() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for seed in ["1", "2", "3"] {
        ok(
            d,
            &[
                "run", "--generator", "example1", "--seed", seed, "--method", "mrsect", "--sigma", "0.1,0.16,0.25",
                "--m", "3", "--out", "sec.bin", "--pgm", "sec.pgm",
            ],
        );
        let img = pgm(d.join("sec.pgm"));
        let rows = img.nrows();
        let col = 128; // t = 0.5 s at 256 Hz
        let dw_hz = 128.0 / 127.0;
        let bright: Vec<bool> = (0..rows)
            .map(|k| {
                let hz = k as f64 * dw_hz;
                (40.0..=90.0).contains(&hz) && img[[rows - 1 - k, col]] >= 200
            })
            .collect();
        let bands = (0..rows).filter(|&k| bright[k] && (k == 0 || !bright[k - 1])).count();
        assert!(bands >= 2, "seed {seed}: {bands} bright bands");
    }
}

fn grid_of(tf: &TfmFile) -> TfGrid {
    let (rows, cols) = tf.data.dim();
    TfGrid::uniform(tf.axes.t0, tf.axes.dt, cols, tf.axes.f0, tf.axes.dw, rows).unwrap()
}

fn magnitude_of(tf: &TfmFile) -> RealTf {
    TfMatrix::magnitude(grid_of(tf), tf.data.magnitude().mapv(f64::from)).unwrap()
}

#[test]
fn chirps_and_pulses_peak_structure() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    // The chirp rate of the test signal is 7 rad/s², i.e. 7/(2π) Hz/s.
    let beta = format!("{}", 7.0 / (2.0 * PI));
    let common = ["run", "--generator", "chirps-and-pulses", "--seed", "0", "--sigma", "0.1", "--n-freqs", "257", "--magnitude"];
    let mut args: Vec<&str> = common.to_vec();
    args.extend(["--method", "ct", "--beta-hz-s", &beta, "--out", "ct.bin"]);
    ok(d, &args);
    let mut args: Vec<&str> = common.to_vec();
    args.extend(["--method", "rotation-ct", "--beta-hz-s", &beta, "--out", "rot.bin"]);
    ok(d, &args);
    let chirp_band = |t: f64| {
        let f = 20.0 + 7.0 * t / (2.0 * PI);
        Some((hz_to_rad(f - 4.0), hz_to_rad(f + 6.0)))
    };
    let ct = magnitude_of(&load(d.join("ct.bin")));
    let rot = magnitude_of(&load(d.join("rot.bin")));
    for t in [0.5, 3.0] {
        assert_eq!(find_peaks(&slice_at_time(&ct, t).unwrap(), chirp_band(t)).len(), 1);
        assert_eq!(find_peaks(&slice_at_time(&rot, t).unwrap(), chirp_band(t)).len(), 2);
    }
    let pulses = find_peaks(&slice_at_freq(&ct, hz_to_rad(45.0)).unwrap(), Some((1.0, 2.5)));
    assert_eq!(pulses.len(), 2);
    // Same answer as the library on the same signal.
    let s = synth_chirps_and_pulses().unwrap();
    assert_eq!(grid_of(&load(d.join("ct.bin"))).n_times(), s.len());
}

#[test]
fn csv_input_and_slice_export() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let mut csv = String::from("# fs=128 t0=0\n");
    for n in 0..256 {
        let t = n as f64 / 128.0;
        csv.push_str(&format!("{}\n", (2.0 * PI * 20.0 * t).cos()));
    }
    fs::write(d.join("tone.csv"), csv).unwrap();
    ok(
        d,
        &[
            "run", "--input", "tone.csv", "--method", "stft", "--sigma", "0.2", "--n-freqs", "65", "--out", "tone.bin",
            "--slice-time", "1.0", "--slice-time-csv", "col.csv", "--slice-freq-hz", "20", "--slice-freq-csv", "row.csv",
        ],
    );
    let tf = load(d.join("tone.bin"));
    assert_eq!(tf.data.dim(), (65, 256));
    let col = fs::read_to_string(d.join("col.csv")).unwrap();
    let rows: Vec<(f64, f64)> = col
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 65);
    let best = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!((best.0 - hz_to_rad(20.0)).abs() < 1e-9);
    assert_eq!(fs::read_to_string(d.join("row.csv")).unwrap().lines().count(), 257);
}

#[test]
fn cft_matrix_layout() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "run", "--generator", "chirps-and-pulses", "--seed", "0", "--method", "cft", "--n-freqs", "65",
            "--cr-min-hz-s", "-5", "--cr-max-hz-s", "5", "--cr-step-hz-s", "0.5", "--out", "cft.bin",
        ],
    );
    let tf = load(d.join("cft.bin"));
    assert_eq!(tf.data.dim(), (65, 21));
    assert_eq!(tf.axes.t0 as f32, hz_to_rad(-5.0) as f32);
    let m = tf.data.magnitude();
    let (mut best, mut at) = (0.0, (0, 0));
    for ((k, q), &v) in m.indexed_iter() {
        if v > best {
            best = v;
            at = (k, q);
        }
    }
    // Both chirps run at 7 rad/s² ≈ 1.1 Hz/s.
    let rate = -5.0 + 0.5 * at.1 as f64;
    assert!((rate - 7.0 / (2.0 * PI)).abs() <= 0.5, "peak at {rate} Hz/s");
}
