//! 8-bit grayscale rasters, PGM/PNG file I/O, cropping and padding.
//!
//! PGM (binary `P5` and ASCII `P2`) is the bit-exact reference format. PNG is
//! accepted for ingestion; colour PNGs are reduced to luma with the integer
//! BT.601 weights `Y = (299 R + 587 G + 114 B + 500) / 1000`, and any alpha
//! channel is ignored.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed image file: {0}")]
    MalformedFile(String),
    #[error("unsupported bit depth: {0}")]
    UnsupportedDepth(String),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("{w}x{h} image does not fit in a {target_w}x{target_h} target")]
    TargetTooSmall {
        w: usize,
        h: usize,
        target_w: usize,
        target_h: usize,
    },
    #[error("rectangle {0:?} lies outside the image")]
    OutOfBounds(Rect),
    #[error("invalid dimensions {0}x{1}")]
    InvalidDimensions(usize, usize),
}

/// Axis-aligned pixel rectangle; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// Intersection area with another rectangle.
    pub fn overlap(&self, other: &Rect) -> usize {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 > x0 && y1 > y0 {
            (x1 - x0) * (y1 - y0)
        } else {
            0
        }
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.overlap(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Single-channel 8-bit raster stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    /// Image filled with a single intensity.
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(RasterError::InvalidDimensions(width, height));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut img = Self::new(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    pub fn flip_vertical(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| self.get(x, self.height - 1 - y))
    }

    /// Quarter turn clockwise: pixel `(x, y)` moves to `(h - 1 - y, x)`.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.get(y, h - 1 - x))
    }
}

/// On-disk encodings understood by [`save_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary PGM (`P5`).
    Pgm,
    /// ASCII PGM (`P2`).
    PgmAscii,
    Png,
}

impl ImageFormat {
    /// Guess from a file extension; defaults to binary PGM.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("png") => ImageFormat::Png,
            _ => ImageFormat::Pgm,
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, RasterError> {
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    decode_image(&bytes)
}

/// Decode PGM or PNG bytes, sniffing the format from the magic number.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(bytes)
    } else {
        Err(RasterError::MalformedFile("unrecognised magic number".into()))
    }
}

pub fn save_image(
    img: &GrayImage,
    path: impl AsRef<Path>,
    format: ImageFormat,
) -> Result<(), RasterError> {
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::new(file);
    match format {
        ImageFormat::Pgm | ImageFormat::PgmAscii => out.write_all(&encode_pgm(img, format))?,
        ImageFormat::Png => {
            let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc
                .write_header()
                .map_err(|e| io::Error::other(e.to_string()))?;
            writer
                .write_image_data(&img.data)
                .map_err(|e| io::Error::other(e.to_string()))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn encode_pgm(img: &GrayImage, format: ImageFormat) -> Vec<u8> {
    match format {
        ImageFormat::PgmAscii => {
            let mut s = format!("P2\n{} {}\n255\n", img.width, img.height);
            for row in img.data.chunks(img.width) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
            s.into_bytes()
        }
        _ => {
            let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
            out.extend_from_slice(&img.data);
            out
        }
    }
}

struct PgmTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmTokens<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<usize, RasterError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(RasterError::MalformedFile(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RasterError::MalformedFile(format!("bad {what}")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let ascii = &bytes[..2] == b"P2";
    let mut tok = PgmTokens { bytes, pos: 2 };
    let width = tok.next_uint("width")?;
    let height = tok.next_uint("height")?;
    let maxval = tok.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(RasterError::MalformedFile(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(RasterError::UnsupportedDepth(format!("maxval {maxval}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| RasterError::MalformedFile("dimensions overflow".into()))?;
    let data = if ascii {
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let v = tok.next_uint("sample")?;
            if v > maxval {
                return Err(RasterError::MalformedFile(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            data.push(v as u8);
        }
        data
    } else {
        // exactly one whitespace byte separates the header from the raster
        let start = tok.pos + 1;
        if tok.pos >= bytes.len() || !bytes[tok.pos].is_ascii_whitespace() {
            return Err(RasterError::MalformedFile("missing raster separator".into()));
        }
        let raster = bytes
            .get(start..start + n)
            .ok_or_else(|| RasterError::MalformedFile("truncated raster".into()))?;
        raster.to_vec()
    };
    GrayImage::from_vec(width, height, data)
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let decoder = png::Decoder::new(BufReader::new(io::Cursor::new(bytes)));
    let mut reader = decoder
        .read_info()
        .map_err(|e| RasterError::MalformedFile(e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(RasterError::UnsupportedDepth(format!("{depth:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| RasterError::MalformedFile("raster too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| RasterError::MalformedFile(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let stride = info.line_size;
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(RasterError::UnsupportedDepth("indexed colour".into()))
        }
    };
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(stride).take(h) {
        for px in row[..w * channels].chunks(channels) {
            let v = match channels {
                1 | 2 => px[0],
                _ => luma_bt601(px[0], px[1], px[2]),
            };
            data.push(v);
        }
    }
    GrayImage::from_vec(w, h, data)
}

/// Integer BT.601 luma with round-half-up.
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

/// Left/top margins used by [`pad_to`].
pub fn pad_margins(w: usize, h: usize, target_w: usize, target_h: usize) -> (usize, usize) {
    ((target_w - w) / 2, (target_h - h) / 2)
}

/// Center `img` on a `target_w` x `target_h` canvas of `fill`.
pub fn pad_to(
    img: &GrayImage,
    target_w: usize,
    target_h: usize,
    fill: u8,
) -> Result<GrayImage, RasterError> {
    if img.width > target_w || img.height > target_h {
        return Err(RasterError::TargetTooSmall {
            w: img.width,
            h: img.height,
            target_w,
            target_h,
        });
    }
    let (left, top) = pad_margins(img.width, img.height, target_w, target_h);
    let mut out = GrayImage::new(target_w, target_h, fill);
    for y in 0..img.height {
        let dst = (top + y) * target_w + left;
        out.data[dst..dst + img.width].copy_from_slice(&img.data[y * img.width..(y + 1) * img.width]);
    }
    Ok(out)
}

pub fn crop(img: &GrayImage, rect: Rect) -> Result<GrayImage, RasterError> {
    if rect.w == 0 || rect.h == 0 || rect.right() > img.width || rect.bottom() > img.height {
        return Err(RasterError::OutOfBounds(rect));
    }
    let mut data = Vec::with_capacity(rect.area());
    for y in rect.y..rect.bottom() {
        data.extend_from_slice(&img.data[y * img.width + rect.x..y * img.width + rect.right()]);
    }
    GrayImage::from_vec(rect.w, rect.h, data)
}
