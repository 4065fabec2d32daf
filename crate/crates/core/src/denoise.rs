//! Frequency-domain low-pass denoising.
//!
//! Transforms are exact 2-D DFTs of the full image grid (no zero padding).
//! The brick-wall mask keeps every coefficient whose normalized radial
//! frequency is at most `cutoff_fraction`, where radius 1 is the farthest
//! bin of the grid (the (Nyquist, Nyquist) corner). `cutoff_fraction = 1`
//! is therefore an all-pass filter.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::raster::GrayImage;

#[derive(Debug, Error, PartialEq)]
pub enum DenoiseError {
    #[error("cutoff fraction {0} outside (0, 1]")]
    InvalidCutoff(f64),
    #[error("field of {got} samples does not match {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        got: usize,
    },
}

/// Complex DFT coefficients, row-major, DC at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    #[inline]
    pub fn at(&self, u: usize, v: usize) -> Complex64 {
        self.coeffs[v * self.width + u]
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Real-valued raster produced by the inverse transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.data().iter().map(|&v| v as f64).collect(),
        }
    }

    /// Round to nearest and clip into `[0, 255]`.
    pub fn quantize(&self) -> GrayImage {
        let data = self
            .data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayImage::from_vec(self.width, self.height, data).expect("field dimensions are valid")
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn transform_2d(width: usize, height: usize, data: &mut [Complex64], dir: Direction) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = match dir {
        Direction::Forward => (planner.plan_fft_forward(width), planner.plan_fft_forward(height)),
        Direction::Inverse => (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height)),
    };
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = data[y * width + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            data[y * width + x] = *c;
        }
    }
}

pub fn forward_fft(img: &GrayImage) -> Spectrum {
    forward_fft_field(&Field::from_image(img))
}

pub fn forward_fft_field(field: &Field) -> Spectrum {
    let mut coeffs: Vec<Complex64> = field.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(field.width, field.height, &mut coeffs, Direction::Forward);
    Spectrum {
        width: field.width,
        height: field.height,
        coeffs,
    }
}

/// Full complex inverse DFT, normalized by `1 / (w h)`.
pub fn inverse_fft_complex(spec: &Spectrum) -> Vec<Complex64> {
    let mut data = spec.coeffs.clone();
    transform_2d(spec.width, spec.height, &mut data, Direction::Inverse);
    let scale = 1.0 / (spec.width * spec.height) as f64;
    for c in &mut data {
        *c *= scale;
    }
    data
}

/// Real part of the inverse DFT.
pub fn inverse_fft(spec: &Spectrum) -> Field {
    Field {
        width: spec.width,
        height: spec.height,
        data: inverse_fft_complex(spec).into_iter().map(|c| c.re).collect(),
    }
}

/// Normalized radial frequency of bin `(u, v)`: 0 at DC, 1 at the grid corner.
pub fn radial_frequency(u: usize, v: usize, width: usize, height: usize) -> f64 {
    let fu = u.min(width - u) as f64 / width as f64;
    let fv = v.min(height - v) as f64 / height as f64;
    (fu * fu + fv * fv).sqrt() / 0.5f64.hypot(0.5)
}

/// Zero every coefficient above the cutoff radius, in place.
pub fn apply_brick_wall(spec: &mut Spectrum, cutoff_fraction: f64) -> Result<(), DenoiseError> {
    if !(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0) {
        return Err(DenoiseError::InvalidCutoff(cutoff_fraction));
    }
    let (w, h) = (spec.width, spec.height);
    for v in 0..h {
        for u in 0..w {
            // small epsilon keeps cutoff = 1 exact at the corner bin
            if radial_frequency(u, v, w, h) > cutoff_fraction + 1e-12 {
                spec.coeffs[v * w + u] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(())
}

/// Low-passed field before quantization.
pub fn lowpass_field(img: &GrayImage, cutoff_fraction: f64) -> Result<Field, DenoiseError> {
    let mut spec = forward_fft(img);
    apply_brick_wall(&mut spec, cutoff_fraction)?;
    Ok(inverse_fft(&spec))
}

pub fn lowpass_denoise(img: &GrayImage, cutoff_fraction: f64) -> Result<GrayImage, DenoiseError> {
    Ok(lowpass_field(img, cutoff_fraction)?.quantize())
}
