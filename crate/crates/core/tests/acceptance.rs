//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use dicentric::bpr::{bpr_value, grow_skeleton, BprParams};
use dicentric::centromere::{call_chromosome, CallClass, CentromereParams};
use dicentric::denoise::{forward_fft, lowpass_denoise, lowpass_field};
use dicentric::geometry::compute_stats;
use dicentric::metrics::ConfusionMatrix;
use dicentric::pca::{self, PcaClassifier};
use dicentric::pipeline::{score_batch, BatchOptions, PipelineConfig, ReasonCode, Scorer, Verdict};
use dicentric::raster::GrayImage;
use dicentric::segmentation::{binarize, find_contours, otsu_threshold, otsu_threshold_from_histogram, trace_borders, Point};
use dicentric::synth::{self, generate_scene, generate_sprite, ChromosomeShapeParams, SceneSpec, SpriteKind, SpriteProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// metrics fixture
const PAPER_ACCURACY: f64 = 0.9433;
const PAPER_PRECISION: f64 = 0.9854;
const PAPER_RECALL: f64 = 0.9000;
const PAPER_SPECIFICITY: f64 = 0.9866;
const PAPER_MCC: f64 = 0.89;
/// 0.005 percentage points, as a fraction.
const RATE_TOL: f64 = 0.00005;
const MCC_TOL: f64 = 0.005;

const OTSU_TRIALS: usize = 1000;
const CONTOUR_TRIALS: usize = 500;
const CONTOUR_MAX_SIDE: usize = 64;

const CAPSULES: usize = 50;
const AXIS_TOL: f64 = 1.0;
const HAND_EPS_TOL: f64 = 1e-9;

const SPRITES_PER_CLASS: usize = 250;
const MIN_CALL_ACCURACY: f64 = 0.95;

const ORTHO_TOL: f64 = 1e-8;
const IDEMPOTENCE_TOL: f64 = 1e-8;
const MAX_K: usize = 16;

const SCENES: usize = 100;
const SCENE_BUDGET: Duration = Duration::from_secs(120);

const DENOISE_TRIALS: usize = 100;
const IDEMPOTENCE_INTENSITY_TOL: i32 = 1;
const DC_TOL: f64 = 0.5;
const PARSEVAL_REL_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn metrics_fixture() -> Outcome {
    let cm = ConfusionMatrix::new(1350, 1480, 20, 150);
    let rows = [
        ("accuracy", cm.accuracy(), PAPER_ACCURACY, RATE_TOL),
        ("precision", cm.precision(), PAPER_PRECISION, RATE_TOL),
        ("recall", cm.recall(), PAPER_RECALL, RATE_TOL),
        ("specificity", cm.specificity(), PAPER_SPECIFICITY, RATE_TOL),
        ("mcc", cm.mcc(), PAPER_MCC, MCC_TOL),
    ];
    let mut misses = Vec::new();
    let mut report = Vec::new();
    for (name, got, want, tol) in rows {
        let got = got.ok_or(format!("{name} undefined"))?;
        report.push(format!("{name} {got:.6}"));
        if (got - want).abs() > tol {
            misses.push(format!("{name} {got:.6} vs {want} (|diff| {:.6} > {tol})", (got - want).abs()));
        }
    }
    if misses.is_empty() {
        Ok(report.join(", "))
    } else {
        Err(misses.join("; "))
    }
}

fn otsu_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0750);
    for trial in 0..OTSU_TRIALS {
        let mut h = common::random_histogram(&mut rng);
        if h.iter().sum::<u64>() == 0 {
            h[rng.random_range(0..256)] = 1;
        }
        let (got, want) = (otsu_threshold_from_histogram(&h), common::brute_otsu(&h));
        check(got == want, format!("trial {trial}: level {got}, oracle {want}"))?;
    }
    let img = GrayImage::from_fn(10, 10, |x, y| if (y * 10 + x) < 60 { 50 } else { 200 });
    check(otsu_threshold(&img) == common::brute_otsu(&img.histogram()), "bimodal image".into())?;
    Ok(format!("{OTSU_TRIALS} histograms match the exhaustive oracle"))
}

fn contour_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    for trial in 0..CONTOUR_TRIALS {
        let mask = common::random_mask(&mut rng, CONTOUR_MAX_SIDE);
        let tracing = trace_borders(&mask);
        let oracle = common::flood_components(&mask);
        let outers: Vec<usize> = tracing.outer_indices().collect();
        check(
            outers.len() == oracle.len(),
            format!("trial {trial}: {} outer contours, {} components", outers.len(), oracle.len()),
        )?;
        for (k, &ci) in outers.iter().enumerate() {
            let pixels = tracing.component_pixels(ci);
            check(pixels == oracle[k], format!("trial {trial}: component {k} pixel set differs"))?;
            let fill = common::filled(&pixels, mask.width(), mask.height());
            check(
                tracing.contours[ci].area == fill.len(),
                format!("trial {trial}: component {k} filled area {} vs {}", tracing.contours[ci].area, fill.len()),
            )?;
        }
    }
    Ok(format!("{CONTOUR_TRIALS} masks match the flood-fill oracle"))
}

fn bpr_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB9);
    let eps = bpr_value(Point::new(2, 1), Point::new(0, 0), Point::new(4, 0), 5.0);
    check((eps - 1.5).abs() <= HAND_EPS_TOL, format!("hand case eps = {eps}"))?;
    let (mut worst, mut cap_reach): (f64, f64) = (0.0, 0.0);
    let mut body_bad = 0;
    let (mut bad_capsules, mut bad_points, mut points) = (0, 0, 0);
    for i in 0..CAPSULES {
        let len = rng.random_range(12.0..60.0);
        let r = rng.random_range(2.5..7.0);
        // whole- or half-pixel axis keeps the digitized mask mirror-symmetric about it
        let y_offset = if rng.random_bool(0.5) { 0.0 } else { 0.5 };
        let (mask, (x0, x1, y)) = common::capsule_mask(len, r, y_offset);
        let c = find_contours(&mask).into_iter().find(|c| c.is_outer()).ok_or("no contour")?;
        let sk = grow_skeleton(&c, &mask, &BprParams::default()).map_err(|e| format!("capsule {i}: {e}"))?;
        check(sk.is_connected(), format!("capsule {i} skeleton is not 8-connected"))?;
        let mut bad = 0;
        for sp in &sk.points {
            let (px, py) = (sp.p.x as f64, sp.p.y as f64);
            let d = (px - px.clamp(x0, x1)).hypot(py - y);
            worst = worst.max(d);
            points += 1;
            if d > AXIS_TOL {
                bad += 1;
                let to_cap = (px - x0).hypot(py - y).min((px - x1).hypot(py - y));
                cap_reach = cap_reach.max(to_cap);
                body_bad += (px > x0 + r && px < x1 - r) as usize;
            }
        }
        bad_points += bad;
        bad_capsules += (bad > 0) as usize;
    }
    let summary = format!(
        "hand eps {eps}; {CAPSULES} capsules connected; worst axis offset {worst:.3} px; \
         {bad_points}/{points} points in {bad_capsules} capsules beyond {AXIS_TOL} px, \
         all within {cap_reach:.2} px of a cap centre ({body_bad} along the straight body)"
    );
    check(bad_points == 0, summary.clone())?;
    Ok(summary)
}

fn rotate_sprite(img: &GrayImage, turns: u8, flip: bool) -> GrayImage {
    let mut out = if flip { img.flip_horizontal() } else { img.clone() };
    for _ in 0..turns {
        out = out.rotate90();
    }
    out
}

fn call_sprite(raster: &GrayImage, tl: Option<f64>) -> Result<(CallClass, bool), String> {
    let mask = binarize(raster, otsu_threshold(raster));
    let c = find_contours(&mask).into_iter().find(|c| c.is_outer()).ok_or("no contour")?;
    let m = compute_stats(&c, &mask, &BprParams::default()).map_err(|e| e.to_string())?;
    let sk = m.skeleton.ok_or("no skeleton")?;
    let params = CentromereParams::default();
    let tl = tl.unwrap_or(params.tl(m.stats.length));
    let call = call_chromosome(0, &sk, &params, tl).map_err(|e| e.to_string())?;
    Ok((call.class, call.diagnostics.fallback))
}

fn centromere_calling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5C);
    let profile = SpriteProfile::default();
    let (mut correct, mut fallbacks, mut total) = (0, 0, 0);
    for kind in [SpriteKind::Mc, SpriteKind::Dc] {
        for _ in 0..SPRITES_PER_CLASS {
            let p = profile.random_chromosome(kind, &mut rng);
            let sprite = generate_sprite(&p).map_err(|e| e.to_string())?;
            let raster = rotate_sprite(&sprite.raster, rng.random_range(0..4), rng.random());
            let (class, fallback) = call_sprite(&raster, None)?;
            let truth = if kind == SpriteKind::Dc { CallClass::Dc } else { CallClass::Mc };
            total += 1;
            correct += (class == truth) as usize;
            fallbacks += fallback as usize;
        }
    }
    let accuracy = correct as f64 / total as f64;
    check(accuracy >= MIN_CALL_ACCURACY, format!("accuracy {accuracy:.4} < {MIN_CALL_ACCURACY}"))?;
    check(fallbacks == 0, format!("{fallbacks} fallback calls"))?;

    let close = ChromosomeShapeParams::straight(60.0, 5.5, vec![0.45, 0.45 + 3.0 / 60.0], 0.5);
    let sprite = generate_sprite(&close).map_err(|e| e.to_string())?;
    let (class, _) = call_sprite(&sprite.raster, Some(5.0))?;
    check(class == CallClass::Mc, format!("waists 3 px apart with tl 5 called {class:?}"))?;
    Ok(format!("{correct}/{total} correct ({:.2}%), 0 fallbacks, close waists -> MC", 100.0 * accuracy))
}

fn crop_vector(kind: SpriteKind, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, String> {
    let sprite = SpriteProfile::default().random_sprite(kind, rng).map_err(|e| e.to_string())?;
    pca::image_to_vector(&sprite.raster, pca::CROP_SIDE).map_err(|e| e.to_string())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pca_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9CA);
    let train = (0..40).map(|_| crop_vector(SpriteKind::Mc, &mut rng)).collect::<Result<Vec<_>, _>>()?;
    let held_out = (0..10).map(|_| crop_vector(SpriteKind::Mc, &mut rng)).collect::<Result<Vec<_>, _>>()?;
    let model = pca::fit(&train, MAX_K).map_err(|e| e.to_string())?;
    let mut ortho: f64 = 0.0;
    for (i, a) in model.basis().iter().enumerate() {
        for (j, b) in model.basis().iter().enumerate() {
            ortho = ortho.max((dot(a, b) - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    check(ortho <= ORTHO_TOL, format!("orthonormality error {ortho:e}"))?;
    let mut idem: f64 = 0.0;
    for x in &held_out {
        let once = model.reconstruct(&model.reduce(x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let twice = model.reconstruct(&model.reduce(&once).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        idem = idem.max(once.iter().zip(&twice).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    check(idem <= IDEMPOTENCE_TOL, format!("idempotence error {idem:e}"))?;
    for (xi, x) in held_out.iter().enumerate() {
        let mut prev = f64::INFINITY;
        for k in 1..=MAX_K {
            let e = model.truncated(k).reconstruction_error(x).map_err(|e| e.to_string())?;
            check(e <= prev * (1.0 + 1e-12), format!("held-out {xi}: error rose at k = {k}"))?;
            prev = e;
        }
    }

    let d = 400;
    let block = |rng: &mut ChaCha8Rng, lo: usize| -> Vec<f64> {
        (0..d).map(|i| if (lo..lo + d / 2).contains(&i) { rng.random_range(0.0..1.0) } else { 0.0 }).collect()
    };
    let classes = vec![
        ("a".to_string(), (0..20).map(|_| block(&mut rng, 0)).collect::<Vec<_>>()),
        ("b".to_string(), (0..20).map(|_| block(&mut rng, d / 2)).collect::<Vec<_>>()),
    ];
    let clf = PcaClassifier::fit(&classes, Some(5)).map_err(|e| e.to_string())?;
    let mut right = 0;
    for i in 0..200 {
        let (want, lo) = if i % 2 == 0 { ("a", 0) } else { ("b", d / 2) };
        right += (clf.classify(&block(&mut rng, lo)).map_err(|e| e.to_string())?.label == want) as usize;
    }
    check(right == 200, format!("disjoint-support accuracy {right}/200"))?;
    Ok(format!(
        "orthonormality {ortho:.1e}, idempotence {idem:.1e}, error monotone for k = 1..{MAX_K}, disjoint classes 200/200"
    ))
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = SceneSpec::default();
    for i in 0..SCENES {
        let (img, label) = generate_scene(&spec, 7000 + i as u64).map_err(|e| e.to_string())?;
        synth::write_scene(dir.path(), i, &img, &label).map_err(|e| e.to_string())?;
    }
    let scorer = Scorer::new(PipelineConfig::default()).map_err(|e| e.to_string())?;
    let single = BatchOptions { threads: Some(1) };
    let t = Instant::now();
    let first = score_batch(dir.path(), &scorer, &single).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let second = score_batch(dir.path(), &scorer, &single).map_err(|e| e.to_string())?;
    let (a, b) = (first.to_json_lines(), second.to_json_lines());
    check(a == b, "repeated scoring produced different reports".into())?;
    check(elapsed <= SCENE_BUDGET, format!("{SCENES} scenes took {elapsed:?}"))?;

    let victim = 37;
    std::fs::write(dir.path().join(format!("{victim:04}.pgm")), b"P5\n12 nonsense").map_err(|e| e.to_string())?;
    let third = score_batch(dir.path(), &scorer, &BatchOptions::default()).map_err(|e| e.to_string())?;
    check(third.images.len() == SCENES, "image count changed".into())?;
    for (i, (before, after)) in first.images.iter().zip(&third.images).enumerate() {
        if i == victim {
            check(
                matches!(after.verdict, Verdict::Rejected { reason: ReasonCode::IoError, .. }),
                format!("corrupt file verdict {:?}", after.verdict),
            )?;
        } else {
            check(before.to_json_line() == after.to_json_line(), format!("report {i} changed"))?;
        }
    }
    let s = first.summary();
    Ok(format!(
        "{SCENES} scenes in {:.1} s single-threaded, identical reports, corrupt file isolated ({} accepted, {} DCs)",
        elapsed.as_secs_f64(),
        s.accepted,
        s.dc_total
    ))
}

fn denoise_projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDE);
    let (mut worst_idem, mut worst_dc, mut worst_parseval) = (0i32, 0f64, 0f64);
    for trial in 0..DENOISE_TRIALS {
        let (w, h) = (rng.random_range(1..48), rng.random_range(1..48));
        let lo: u8 = rng.random_range(48..=128);
        let span: u8 = rng.random_range(1..=80);
        let img = GrayImage::from_fn(w, h, |_, _| lo + rng.random_range(0..=span));
        let cutoff = rng.random_range(0.05..=1.0);
        // the u8 output clips; two passes agree to rounding only while nothing is clipped
        let field = lowpass_field(&img, cutoff).map_err(|e| e.to_string())?;
        check(
            field.data.iter().all(|v| (-0.5..255.5).contains(v)),
            format!("trial {trial}: filtered field leaves the intensity range"),
        )?;
        let once = lowpass_denoise(&img, cutoff).map_err(|e| e.to_string())?;
        let twice = lowpass_denoise(&once, cutoff).map_err(|e| e.to_string())?;
        let idem = once.data().iter().zip(twice.data()).map(|(&a, &b)| (a as i32 - b as i32).abs()).max().unwrap_or(0);
        worst_idem = worst_idem.max(idem);
        check(idem <= IDEMPOTENCE_INTENSITY_TOL, format!("trial {trial}: twice vs once differs by {idem}"))?;
        let dc = (once.mean() - img.mean()).abs();
        worst_dc = worst_dc.max(dc);
        check(dc <= DC_TOL, format!("trial {trial}: mean moved by {dc}"))?;
        let spatial: f64 = img.data().iter().map(|&v| (v as f64).powi(2)).sum();
        let spectral = forward_fft(&img).energy() / (w * h) as f64;
        let rel = if spatial == 0.0 { spectral } else { (spatial - spectral).abs() / spatial };
        worst_parseval = worst_parseval.max(rel);
        check(rel <= PARSEVAL_REL_TOL, format!("trial {trial}: Parseval relative error {rel:e}"))?;
    }
    Ok(format!(
        "{DENOISE_TRIALS} images: idempotence {worst_idem}, DC shift {worst_dc:.3}, Parseval {worst_parseval:.1e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 metrics fixture", metrics_fixture),
        ("2 otsu oracle equivalence", otsu_oracle),
        ("3 contour oracle equivalence", contour_oracle),
        ("4 bpr geometry", bpr_geometry),
        ("5 centromere calling", centromere_calling),
        ("6 pca invariants", pca_invariants),
        ("7 end-to-end determinism and isolation", end_to_end),
        ("8 denoise projection", denoise_projection),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name} [{secs:.1} s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name} [{secs:.1} s]: {detail}");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
