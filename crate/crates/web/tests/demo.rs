use dicentric_web::Demo;

fn demo() -> Demo {
    Demo::new(480, 480, 9, 2, 2, 7).unwrap()
}

#[test]
fn views_have_canvas_size() {
    let mut d = demo();
    let n = 4 * d.width() * d.height();
    assert_eq!(d.scene_rgba().len(), n);
    assert_eq!(d.threshold_rgba(0.5).unwrap().len(), n);
    assert_eq!(d.threshold_rgba(0.0).unwrap().len(), n);
    assert_eq!(d.overlay_rgba(), d.scene_rgba());
    d.score(1.0, 1.05, 0.5).unwrap();
    assert_eq!(d.overlay_rgba().len(), n);
    assert_ne!(d.overlay_rgba(), d.scene_rgba());
}

#[test]
fn threshold_preview_tints_only_the_foreground() {
    let d = demo();
    let plain = d.threshold_rgba(0.0).unwrap();
    let scene = d.scene_rgba();
    let tinted = plain.chunks(4).zip(scene.chunks(4)).filter(|(a, b)| a != b).count();
    assert!(tinted > 0 && tinted < d.width() * d.height() / 2, "{tinted}");
}

#[test]
fn score_reports_against_truth() {
    let mut d = demo();
    let s: serde_json::Value = serde_json::from_str(&d.score(1.0, 1.05, 0.5).unwrap()).unwrap();
    assert_eq!(s["verdict"]["status"], "accepted", "{s}");
    assert_eq!(s["chromosomes"], 11);
    assert_eq!((s["truth_mc"].as_u64(), s["truth_dc"].as_u64()), (Some(9), Some(2)));
    let m = &s["confusion"];
    let total: u64 = ["tp", "tn", "fp", "fn"].iter().map(|k| m[k].as_u64().unwrap()).sum();
    assert_eq!(total, 11);
    // the same inputs give the same summary
    let again = d.score(1.0, 1.05, 0.5).unwrap();
    assert_eq!(serde_json::from_str::<serde_json::Value>(&again).unwrap(), s);
}

#[test]
fn invalid_parameters_are_errors() {
    let mut d = demo();
    assert!(d.score(-1.0, 1.05, 0.5).is_err());
    assert!(d.threshold_rgba(1.5).is_err());
    assert!(Demo::new(40, 40, 30, 0, 0, 1).is_err());
}
