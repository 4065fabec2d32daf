use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::centromere::CallClass;
use crate::metrics::ConfusionMatrix;
use crate::synth::{SceneLabel, SpriteKind};

use super::{ImageReport, PipelineError};

/// Calls paired with ground-truth chromosomes by bbox overlap.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthMatch {
    pub confusion: ConfusionMatrix,
    pub unmatched_truth: usize,
    pub unmatched_calls: usize,
}

/// Minimum IoU for a call to count as the same object.
pub const MATCH_IOU: f64 = 0.5;

/// Greedy one-to-one matching by descending IoU; ties resolve to the lower
/// call index, then the lower truth index.
pub fn match_calls(report: &ImageReport, label: &SceneLabel) -> TruthMatch {
    let truths: Vec<(usize, CallClass)> = label
        .objects
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match o.kind {
            SpriteKind::Mc => Some((i, CallClass::Mc)),
            SpriteKind::Dc => Some((i, CallClass::Dc)),
            _ => None,
        })
        .collect();
    let mut pairs = Vec::new();
    for (ci, call) in report.calls.iter().enumerate() {
        for (ti, &(oi, _)) in truths.iter().enumerate() {
            let iou = call.bbox.iou(&label.objects[oi].bbox);
            if iou >= MATCH_IOU {
                pairs.push((iou, ci, ti));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut call_used = vec![false; report.calls.len()];
    let mut truth_used = vec![false; truths.len()];
    let mut confusion = ConfusionMatrix::default();
    for (_, ci, ti) in pairs {
        if call_used[ci] || truth_used[ti] {
            continue;
        }
        call_used[ci] = true;
        truth_used[ti] = true;
        confusion.record(report.calls[ci].call.class, truths[ti].1);
    }
    TruthMatch {
        confusion,
        unmatched_truth: truth_used.iter().filter(|u| !**u).count(),
        unmatched_calls: call_used.iter().filter(|u| !**u).count(),
    }
}

/// Ground truth for image `id` (a file name) from `<dir>/<stem>.json`.
pub fn load_truth(dir: &Path, id: &str) -> Result<Option<SceneLabel>, PipelineError> {
    let stem = Path::new(id).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let path = dir.join(format!("{stem}.json"));
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    Ok(Some(serde_json::from_str(&text)?))
}
