//! Per-contour width and size measurements and the population-relative
//! debris filters.
//!
//! Widths are full object widths: twice the Euclidean distance-transform
//! value at each skeleton pixel. Each filter compares one statistic of a
//! contour with the median of that statistic over every contour of the same
//! image, so the bands are scale-free.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpr::{self, BprError, BprParams, Component, Skeleton};
use crate::segmentation::{BinaryMask, Contour, Point};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("component has {0} pixels, at least 3 are required")]
    DegenerateContour(usize),
    #[error("invalid band [{lo}, {hi}] for filter {filter}")]
    InvalidBand { filter: usize, lo: f64, hi: f64 },
    #[error(transparent)]
    Bpr(#[from] BprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourStats {
    pub area: f64,
    pub mean_width: f64,
    pub median_width: f64,
    pub max_width: f64,
    pub min_width: f64,
    pub bbox_min_side: f64,
    pub bbox_max_side: f64,
    /// Skeleton path length.
    pub length: f64,
}

/// Measurements plus the skeleton they were sampled on, when one was grown.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub stats: ContourStats,
    pub skeleton: Option<Skeleton>,
}

/// Grow the skeleton of the component bounded by `contour` and measure it.
///
/// Components without interior pixels, or larger than
/// `params.max_component_pixels`, are sampled at their deepest pixels
/// instead and measured along their geodesic diameter.
pub fn compute_stats(contour: &Contour, mask: &BinaryMask, params: &BprParams) -> Result<Measurement, GeometryError> {
    params.validate()?;
    let component = Component::extract(contour, mask)?;
    measure_component(&component, params)
}

pub fn measure_component(component: &Component, params: &BprParams) -> Result<Measurement, GeometryError> {
    if component.pixel_count < 3 {
        return Err(GeometryError::DegenerateContour(component.pixel_count));
    }
    let skeleton = if component.pixel_count <= params.max_component_pixels {
        match bpr::grow_in_component(component, params) {
            Ok(s) => Some(s),
            Err(BprError::EmptyInterior) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let (samples, length) = match &skeleton {
        Some(s) => (s.points.iter().map(|sp| sp.p).collect::<Vec<_>>(), s.path_length()),
        None => {
            let pixels: Vec<Point> = component.pixels().collect();
            let deepest = pixels.iter().map(|&p| component.depth(p)).fold(0.0, f64::max);
            let ridge = pixels.iter().copied().filter(|&p| component.depth(p) == deepest).collect();
            (ridge, bpr::geodesic_diameter(&pixels))
        }
    };
    let mut widths: Vec<f64> = samples.iter().map(|&p| 2.0 * component.depth(p)).collect();
    widths.sort_by(f64::total_cmp);
    let sides = (component.width as f64, component.height as f64);
    let stats = ContourStats {
        area: component.pixel_count as f64,
        mean_width: widths.iter().sum::<f64>() / widths.len() as f64,
        median_width: median_sorted(&widths),
        max_width: *widths.last().expect("at least one sample"),
        min_width: widths[0],
        bbox_min_side: sides.0.min(sides.1),
        bbox_max_side: sides.0.max(sides.1),
        length,
    };
    Ok(Measurement { stats, skeleton })
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median of an unsorted slice; 0 for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

/// Inclusive acceptance band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterThresholds {
    /// area / median area
    pub area: Band,
    /// mean width / median of mean widths
    pub mean_width: Band,
    /// median width / median of median widths
    pub median_width: Band,
    /// max width / median of max widths
    pub max_width: Band,
    /// bbox short side / bbox long side (not population-relative)
    pub aspect: Band,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            area: Band::new(0.2, 6.0),
            mean_width: Band::new(0.4, 3.0),
            median_width: Band::new(0.4, 3.0),
            max_width: Band::new(0.4, 3.0),
            aspect: Band::new(0.02, 0.9),
        }
    }
}

impl FilterThresholds {
    pub fn bands(&self) -> [Band; 5] {
        [self.area, self.mean_width, self.median_width, self.max_width, self.aspect]
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for (i, b) in self.bands().iter().enumerate() {
            if !(b.lo <= b.hi) || b.lo.is_nan() {
                return Err(GeometryError::InvalidBand { filter: i + 1, lo: b.lo, hi: b.hi });
            }
        }
        Ok(())
    }
}

/// Result of the five filters for one contour; filters are numbered 1 to 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub ratios: [f64; 5],
    pub violations: Vec<u8>,
}

impl FilterOutcome {
    pub fn kept(&self) -> bool {
        self.violations.is_empty()
    }
}

fn ratio(v: f64, m: f64) -> f64 {
    if m == 0.0 {
        if v == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        v / m
    }
}

pub fn evaluate_filters(stats: &[ContourStats], th: &FilterThresholds) -> Vec<FilterOutcome> {
    let med = |f: fn(&ContourStats) -> f64| median(&stats.iter().map(f).collect::<Vec<_>>());
    let m_area = med(|s| s.area);
    let m_mean = med(|s| s.mean_width);
    let m_median = med(|s| s.median_width);
    let m_max = med(|s| s.max_width);
    let bands = th.bands();
    stats
        .iter()
        .map(|s| {
            let ratios = [
                ratio(s.area, m_area),
                ratio(s.mean_width, m_mean),
                ratio(s.median_width, m_median),
                ratio(s.max_width, m_max),
                ratio(s.bbox_min_side, s.bbox_max_side),
            ];
            let violations = (0..5)
                .filter(|&i| !bands[i].contains(ratios[i]))
                .map(|i| i as u8 + 1)
                .collect();
            FilterOutcome { ratios, violations }
        })
        .collect()
}

/// Indices of the contours passing every filter, ascending.
pub fn filter_debris(stats: &[ContourStats], th: &FilterThresholds) -> Vec<usize> {
    evaluate_filters(stats, th)
        .iter()
        .enumerate()
        .filter(|(_, o)| o.kept())
        .map(|(i, _)| i)
        .collect()
}
