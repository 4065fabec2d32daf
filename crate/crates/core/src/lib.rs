//! Dicentric chromosome scoring for metaphase images.
//!
//! The pipeline runs a Fourier low-pass denoise, Otsu binarization and
//! border following, then population-relative debris filters. Surviving
//! chromosomes are called monocentric (MC) or dicentric (DC) either from
//! skeletons grown with the bending potential ratio and a width-based
//! centromere search, or by per-class PCA reconstruction error.
//! [`synth`] builds labeled synthetic scenes and [`metrics`] scores calls
//! against them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bpr;
pub mod centromere;
pub mod denoise;
pub mod distance;
pub mod geometry;
pub mod metrics;
pub mod pca;
pub mod pipeline;
pub mod raster;
pub mod segmentation;
pub mod synth;

pub use bpr::{bpr_value, grow_skeleton, BprParams, Skeleton, SkeletonPoint};
pub use centromere::{CallClass, CentromereParams, ChromosomeCall};
pub use geometry::{compute_stats, filter_debris, ContourStats, FilterThresholds};
pub use metrics::ConfusionMatrix;
pub use pca::{PcaClassifier, PcaModel};
pub use pipeline::{score_batch, BatchReport, ImageReport, PipelineConfig, Scorer};
pub use raster::{load_image, save_image, GrayImage, ImageFormat, Rect};
pub use segmentation::{binarize, find_contours, otsu_threshold, BinaryMask, Contour, Point};
