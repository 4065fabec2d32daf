use std::path::Path;

use dicentric::pipeline::{chromosome_crops, load_truth, match_calls, score_batch, BatchOptions, Mode, PcaModels, PipelineConfig, PipelineError, ReasonCode, Scorer, Verdict};
use dicentric::pca::{image_to_vector, PcaClassifier, CROP_SIDE};
use dicentric::synth::{generate_scene, write_scene, SceneSpec};

fn scene(mc: usize, dc: usize) -> SceneSpec {
    SceneSpec { mc, dc, ..SceneSpec::default() }
}

fn write(dir: &Path, spec: &SceneSpec, seeds: std::ops::Range<u64>) {
    for (i, s) in seeds.enumerate() {
        let (img, label) = generate_scene(spec, s).unwrap();
        write_scene(dir, i, &img, &label).unwrap();
    }
}

// Flat digitized waists longer than tl occasionally yield a second
// equal-width centromere, so scene tests bound rates instead of exact counts.
#[test]
fn normal_cells_are_accepted_with_few_false_dicentrics() {
    let scorer = Scorer::new(PipelineConfig::default()).unwrap();
    let mut false_dc = 0;
    for seed in 0..4 {
        let (img, _) = generate_scene(&scene(46, 0), seed).unwrap();
        let r = scorer.score_image("x", &img);
        assert_eq!(r.verdict, Verdict::Accepted, "seed {seed}");
        assert_eq!(r.chromosome_count, 46);
        assert_eq!(r.removed.len(), 5);
        false_dc += r.dc_count;
    }
    assert!(false_dc as f64 / (4.0 * 46.0) <= 0.05, "{false_dc} false dicentrics");
}

#[test]
fn dicentrics_are_found_and_match_truth() {
    let scorer = Scorer::new(PipelineConfig::default()).unwrap();
    let mut cm = dicentric::ConfusionMatrix::default();
    for seed in 0..8 {
        let (img, label) = generate_scene(&scene(44, 2), 300 + seed).unwrap();
        let r = scorer.score_image("x", &img);
        assert_eq!(r.verdict, Verdict::Accepted);
        for c in r.calls.iter().filter(|c| c.call.class == dicentric::CallClass::Dc) {
            assert_eq!(c.call.centromeres.len(), 2);
        }
        let m = match_calls(&r, &label);
        assert_eq!((m.unmatched_truth, m.unmatched_calls), (0, 0));
        cm += m.confusion;
    }
    assert_eq!(cm.total(), 8 * 46);
    assert!(cm.recall().unwrap() >= 0.9, "{cm:?}");
    assert!(cm.fp as f64 / (8.0 * 44.0) <= 0.02, "{cm:?}");
}

#[test]
fn sparse_cells_are_rejected() {
    let scorer = Scorer::new(PipelineConfig::default()).unwrap();
    let spec = SceneSpec { mc: 12, dc: 0, ..SceneSpec::default() };
    let (img, _) = generate_scene(&spec, 5).unwrap();
    let r = scorer.score_image("x", &img);
    assert!(matches!(r.verdict, Verdict::Rejected { reason: ReasonCode::CountOutOfRange, .. }));
    assert_eq!(r.chromosome_count, 12);
    assert_eq!(r.dc_count, 0);
}

#[test]
fn blank_image_has_no_contours() {
    let scorer = Scorer::new(PipelineConfig::default()).unwrap();
    let r = scorer.score_image("blank", &dicentric::GrayImage::new(64, 64, 230));
    assert!(matches!(r.verdict, Verdict::Rejected { reason: ReasonCode::NoContours, .. }));
}

#[test]
fn batch_is_ordered_isolated_and_summarized() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), &SceneSpec::default(), 20..23);
    std::fs::write(dir.path().join("0003.pgm"), b"not an image").unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
    let scorer = Scorer::new(PipelineConfig::default()).unwrap();
    let report = score_batch(dir.path(), &scorer, &BatchOptions { threads: Some(2) }).unwrap();
    let ids: Vec<&str> = report.images.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["0000.pgm", "0001.pgm", "0002.pgm", "0003.pgm"]);
    assert!(matches!(report.images[3].verdict, Verdict::Rejected { reason: ReasonCode::IoError, .. }));
    let s = report.summary();
    assert_eq!((s.images, s.accepted, s.rejected), (4, 3, 1));
    let lines: Vec<serde_json::Value> =
        report.to_json_lines().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[4]["summary"]["accepted"], 3);
    assert_eq!(lines[3]["verdict"]["reason"], "io_error");
    for (i, r) in report.images.iter().take(3).enumerate() {
        let label = load_truth(dir.path(), &r.id).unwrap().unwrap();
        assert_eq!(label.counts.dc, 2, "image {i}");
    }
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let scorer = Scorer::new(PipelineConfig::default()).unwrap();
    assert!(matches!(score_batch(dir.path(), &scorer, &BatchOptions::default()), Err(PipelineError::EmptyBatch(_))));
}

#[test]
fn pca_mode_needs_a_model() {
    let cfg = PipelineConfig { mode: Mode::Pca, ..PipelineConfig::default() };
    assert!(matches!(Scorer::new(cfg), Err(PipelineError::MissingModel)));
}

#[test]
fn pca_mode_scores_with_a_trained_classifier() {
    let cfg = PipelineConfig::default();
    let mut mc = Vec::new();
    let mut dc = Vec::new();
    for seed in 40..44 {
        let (img, label) = generate_scene(&SceneSpec { mc: 40, dc: 6, ..SceneSpec::default() }, seed).unwrap();
        for (bbox, crop) in chromosome_crops(&img, &cfg).unwrap() {
            let kind = label.objects.iter().max_by(|a, b| a.bbox.iou(&bbox).total_cmp(&b.bbox.iou(&bbox))).unwrap().kind;
            let v = image_to_vector(&crop, CROP_SIDE).unwrap();
            match kind {
                dicentric::synth::SpriteKind::Dc => dc.push(v),
                _ => mc.push(v),
            }
        }
    }
    let clf = PcaClassifier::fit(&[("mc".into(), mc), ("dc".into(), dc)], Some(8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    clf.save(&path).unwrap();
    let mut cfg = PipelineConfig { mode: Mode::Pca, ..PipelineConfig::default() };
    cfg.pca.model = Some(path);
    let scorer = Scorer::new(cfg.clone()).unwrap();
    let (img, label) = generate_scene(&SceneSpec::default(), 99).unwrap();
    let r = scorer.score_image("x", &img);
    assert_eq!(r.verdict, Verdict::Accepted);
    assert!(r.calls.iter().all(|c| c.call.centromeres.is_empty()));
    let m = match_calls(&r, &label);
    assert!(m.confusion.accuracy().unwrap() > 0.8);
    let again = Scorer::with_models(cfg, PcaModels { mc_dc: Some(clf), analysable: None }).unwrap();
    assert_eq!(again.score_image("x", &img), r);
}
