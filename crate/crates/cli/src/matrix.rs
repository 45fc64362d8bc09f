//! `TFM1` matrix files.
//!
//! A 64-byte ASCII header `TFM1 rows cols dtype dt dω t0 f0`, space padded
//! and closed by a newline, followed by row-major little-endian data: `f32`
//! values or interleaved `re, im` pairs for `c32`. Rows are frequency bins,
//! columns time frames. `dt`/`t0` are in seconds and `dω`/`f0` in rad/s.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex32;

pub const HEADER_LEN: usize = 64;
pub const MAGIC: &str = "TFM1";

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt matrix file: {0}")]
    Corrupt(String),
    #[error("header does not fit in {HEADER_LEN} bytes: {0:?}")]
    HeaderTooLong(String),
}

/// Axis description stored in the header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub dt: f64,
    pub dw: f64,
    pub t0: f64,
    pub f0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixData {
    Real(Array2<f32>),
    Complex(Array2<Complex32>),
}

impl MatrixData {
    pub fn dim(&self) -> (usize, usize) {
        match self {
            MatrixData::Real(a) => a.dim(),
            MatrixData::Complex(a) => a.dim(),
        }
    }

    pub fn dtype(&self) -> &'static str {
        match self {
            MatrixData::Real(_) => "f32",
            MatrixData::Complex(_) => "c32",
        }
    }

    /// Absolute values; complex entries give their modulus.
    pub fn magnitude(&self) -> Array2<f32> {
        match self {
            MatrixData::Real(a) => a.mapv(f32::abs),
            MatrixData::Complex(a) => a.mapv(|z| z.norm()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfmFile {
    pub axes: Axes,
    pub data: MatrixData,
}

fn header_text(rows: usize, cols: usize, dtype: &str, axes: &Axes) -> Result<String, MatrixError> {
    let nums = [axes.dt, axes.dw, axes.t0, axes.f0];
    let shortest = nums.map(|x| format!("{:e}", x as f32));
    let mut last = String::new();
    for digits in [None, Some(6), Some(4), Some(2)] {
        let fields: Vec<String> = match digits {
            None => shortest.to_vec(),
            Some(d) => nums.iter().map(|x| format!("{x:.d$e}")).collect(),
        };
        last = format!("{MAGIC} {rows} {cols} {dtype} {}", fields.join(" "));
        if last.len() < HEADER_LEN {
            return Ok(last);
        }
    }
    Err(MatrixError::HeaderTooLong(last))
}

pub fn write_tfm(file: &TfmFile, mut out: impl Write) -> Result<(), MatrixError> {
    let (rows, cols) = file.data.dim();
    let text = header_text(rows, cols, file.data.dtype(), &file.axes)?;
    let mut header = [b' '; HEADER_LEN];
    header[..text.len()].copy_from_slice(text.as_bytes());
    header[HEADER_LEN - 1] = b'\n';
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(rows * cols * 8);
    match &file.data {
        MatrixData::Real(a) => a.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
        MatrixData::Complex(a) => a.iter().for_each(|z| {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }),
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_tfm(mut input: impl Read) -> Result<TfmFile, MatrixError> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| MatrixError::Corrupt("file shorter than the header".into()))?;
    let text = std::str::from_utf8(&header).map_err(|_| MatrixError::Corrupt("header is not ASCII".into()))?;
    let tok: Vec<&str> = text.split_whitespace().collect();
    if tok.first() != Some(&MAGIC) || tok.len() != 8 {
        return Err(MatrixError::Corrupt(format!("bad header {:?}", text.trim_end())));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| MatrixError::Corrupt(format!("bad size {s:?}")));
    let num = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| MatrixError::Corrupt(format!("bad axis value {s:?}")))
    };
    let (rows, cols) = (int(tok[1])?, int(tok[2])?);
    let axes = Axes {
        dt: num(tok[4])?,
        dw: num(tok[5])?,
        t0: num(tok[6])?,
        f0: num(tok[7])?,
    };
    let width = match tok[3] {
        "f32" => 4,
        "c32" => 8,
        other => return Err(MatrixError::Corrupt(format!("unknown dtype {other:?}"))),
    };
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| MatrixError::Corrupt("size overflow".into()))?;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != expected {
        return Err(MatrixError::Corrupt(format!(
            "expected {expected} data bytes for {rows}x{cols} {}, found {}",
            tok[3],
            body.len()
        )));
    }
    let f = |c: &[u8]| f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
    let shape_err = |e: ndarray::ShapeError| MatrixError::Corrupt(e.to_string());
    let data = if width == 4 {
        let v: Vec<f32> = body.chunks_exact(4).map(f).collect();
        MatrixData::Real(Array2::from_shape_vec((rows, cols), v).map_err(shape_err)?)
    } else {
        let v: Vec<Complex32> = body.chunks_exact(8).map(|c| Complex32::new(f(&c[..4]), f(&c[4..]))).collect();
        MatrixData::Complex(Array2::from_shape_vec((rows, cols), v).map_err(shape_err)?)
    };
    Ok(TfmFile { axes, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> Axes {
        Axes {
            dt: 1.0 / 256.0,
            dw: 2.0 * std::f64::consts::PI * 128.0 / 127.0,
            t0: -0.5,
            f0: 0.0,
        }
    }

    #[test]
    fn real_round_trip() {
        let a = Array2::from_shape_fn((3, 5), |(k, n)| (k * 5 + n) as f32 - 4.5);
        let file = TfmFile { axes: axes(), data: MatrixData::Real(a) };
        let mut buf = Vec::new();
        write_tfm(&file, &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 3 * 5 * 4);
        assert!(buf[..HEADER_LEN].starts_with(b"TFM1 3 5 f32 "));
        assert_eq!(buf[HEADER_LEN - 1], b'\n');
        let back = read_tfm(&buf[..]).unwrap();
        assert_eq!(back.data, file.data);
        assert_eq!(back.axes.dt as f32, file.axes.dt as f32);
        assert_eq!(back.axes.dw as f32, file.axes.dw as f32);
    }

    #[test]
    fn complex_layout_is_interleaved() {
        let a = Array2::from_shape_vec((1, 2), vec![Complex32::new(1.0, -2.0), Complex32::new(3.0, 4.0)]).unwrap();
        let file = TfmFile { axes: axes(), data: MatrixData::Complex(a) };
        let mut buf = Vec::new();
        write_tfm(&file, &mut buf).unwrap();
        let body: Vec<f32> = buf[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        assert_eq!(body, vec![1.0, -2.0, 3.0, 4.0]);
        assert_eq!(read_tfm(&buf[..]).unwrap().data, file.data);
    }

    #[test]
    fn rejects_corruption() {
        let file = TfmFile {
            axes: axes(),
            data: MatrixData::Real(Array2::zeros((2, 2))),
        };
        let mut buf = Vec::new();
        write_tfm(&file, &mut buf).unwrap();
        assert!(read_tfm(&buf[..buf.len() - 1]).is_err());
        assert!(read_tfm(&buf[..10]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_tfm(&bad[..]).is_err());
        let mut bad = buf;
        bad[9..12].copy_from_slice(b"i64");
        assert!(read_tfm(&bad[..]).is_err());
    }
}
