//! Heatmaps of TF matrices.
//!
//! Magnitudes are converted to dB relative to the maximum, clipped at
//! `-db_floor` and mapped to `[0, 1]`. The image has one pixel per matrix
//! entry, with the highest frequency in the top row.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

/// Default dynamic range (dB).
pub const DEFAULT_DB_FLOOR: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Colormap {
    #[default]
    Gray,
    Viridis,
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid {0}: {1}")]
    Invalid(&'static str, String),
    #[cfg(feature = "png")]
    #[error("PNG encoding failed: {0}")]
    Png(#[from] image::ImageError),
}

const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 45, 123],
    [59, 82, 139],
    [44, 114, 142],
    [33, 145, 140],
    [40, 174, 128],
    [94, 201, 98],
    [173, 220, 48],
    [253, 231, 37],
];

impl Colormap {
    pub fn rgb(self, x: f64) -> [u8; 3] {
        let x = x.clamp(0.0, 1.0);
        match self {
            Colormap::Gray => {
                let g = (x * 255.0).round() as u8;
                [g, g, g]
            }
            Colormap::Viridis => {
                let pos = x * (VIRIDIS.len() - 1) as f64;
                let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
                let f = pos - i as f64;
                let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
                std::array::from_fn(|c| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8)
            }
        }
    }
}

/// Levels in `[0, 1]`: 0 at or below the floor, 1 at the maximum. An all-zero
/// matrix maps to 0 everywhere.
pub fn db_levels(mag: &Array2<f32>, db_floor: f64) -> Result<Array2<f64>, RenderError> {
    if !(db_floor > 0.0) || !db_floor.is_finite() {
        return Err(RenderError::Invalid("db_floor", format!("must be positive, got {db_floor}")));
    }
    let top = mag.iter().fold(0.0f64, |m, &v| m.max(v.abs() as f64));
    if top == 0.0 {
        return Ok(Array2::zeros(mag.dim()));
    }
    Ok(mag.mapv(|v| {
        let v = v.abs() as f64;
        if v == 0.0 {
            return 0.0;
        }
        let db = 20.0 * (v / top).log10();
        ((db + db_floor) / db_floor).clamp(0.0, 1.0)
    }))
}

/// Pixel rows top to bottom, i.e. matrix rows in reverse.
fn image_rows(levels: &Array2<f64>) -> impl Iterator<Item = ndarray::ArrayView1<'_, f64>> {
    levels.outer_iter().rev()
}

pub fn write_pgm(levels: &Array2<f64>, mut out: impl Write) -> Result<(), RenderError> {
    let (rows, cols) = levels.dim();
    write!(out, "P5\n{cols} {rows}\n255\n")?;
    let mut buf = Vec::with_capacity(rows * cols);
    for row in image_rows(levels) {
        buf.extend(row.iter().map(|&x| Colormap::Gray.rgb(x)[0]));
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn write_ppm(levels: &Array2<f64>, cmap: Colormap, mut out: impl Write) -> Result<(), RenderError> {
    let (rows, cols) = levels.dim();
    write!(out, "P6\n{cols} {rows}\n255\n")?;
    out.write_all(&rgb_pixels(levels, cmap))?;
    out.flush()?;
    Ok(())
}

fn rgb_pixels(levels: &Array2<f64>, cmap: Colormap) -> Vec<u8> {
    let mut buf = Vec::with_capacity(levels.len() * 3);
    for row in image_rows(levels) {
        for &x in row {
            buf.extend_from_slice(&cmap.rgb(x));
        }
    }
    buf
}

#[cfg(feature = "png")]
fn write_png(levels: &Array2<f64>, cmap: Colormap, path: &Path) -> Result<(), RenderError> {
    let (rows, cols) = levels.dim();
    image::save_buffer(path, &rgb_pixels(levels, cmap), cols as u32, rows as u32, image::ExtendedColorType::Rgb8)?;
    Ok(())
}

/// Writes an image whose format follows the extension of `path`: `.pgm`
/// (gray only), `.ppm`, or `.png` when built with the `png` feature.
pub fn save_image(levels: &Array2<f64>, cmap: Colormap, path: &Path) -> Result<(), RenderError> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let create = || -> Result<_, RenderError> { Ok(std::io::BufWriter::new(std::fs::File::create(path)?)) };
    match ext.as_deref() {
        Some("pgm") if cmap == Colormap::Gray => write_pgm(levels, create()?),
        Some("pgm") => Err(RenderError::Invalid(
            "colormap",
            "PGM images are grayscale; use .ppm or .png for color".into(),
        )),
        Some("ppm") => write_ppm(levels, cmap, create()?),
        #[cfg(feature = "png")]
        Some("png") => write_png(levels, cmap, path),
        #[cfg(not(feature = "png"))]
        Some("png") => Err(RenderError::Invalid("image", "built without PNG support".into())),
        _ => Err(RenderError::Invalid(
            "image",
            format!("unsupported image extension in {}", path.display()),
        )),
    }
}
