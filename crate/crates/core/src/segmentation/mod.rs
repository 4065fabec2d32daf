//! Otsu binarization and border following.

mod contour;
mod otsu;

pub use contour::{find_contours, trace_borders, Contour, ContourKind, Point, Tracing};
pub use otsu::{otsu_threshold, otsu_threshold_from_histogram};

use serde::{Deserialize, Serialize};

use crate::raster::GrayImage;

/// Boolean foreground map with the dimensions of its source image.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryMask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-range coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Foreground rendered black on white, for debugging dumps.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| if self.get(x, y) { 0 } else { 255 })
    }

    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.get(y, h - 1 - x))
    }
}

/// Which side of the threshold counts as foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Foreground is `intensity <= level` (dark objects on a light field).
    #[default]
    DarkObjects,
    /// Foreground is `intensity > level`.
    LightObjects,
}

pub fn binarize(img: &GrayImage, level: u8) -> BinaryMask {
    binarize_with(img, level, Polarity::DarkObjects)
}

pub fn binarize_with(img: &GrayImage, level: u8, polarity: Polarity) -> BinaryMask {
    BinaryMask {
        width: img.width(),
        height: img.height(),
        data: img
            .data()
            .iter()
            .map(|&v| match polarity {
                Polarity::DarkObjects => v <= level,
                Polarity::LightObjects => v > level,
            })
            .collect(),
    }
}
