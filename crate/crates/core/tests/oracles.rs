mod common;

use dicentric::bpr::ruling_point;
use dicentric::distance::edt_squared;
use dicentric::pca;
use dicentric::raster::{crop, decode_image, encode_pgm, load_image, pad_margins, pad_to, save_image, GrayImage, ImageFormat, Rect};
use dicentric::segmentation::{find_contours, BinaryMask, Point};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ruling_point_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases = 0;
    while cases < 1000 {
        let mask = common::random_mask(&mut rng, 40);
        let outers: Vec<_> = find_contours(&mask).into_iter().filter(|c| c.is_outer()).collect();
        if outers.is_empty() {
            continue;
        }
        let c = &outers[rng.random_range(0..outers.len())];
        let p = Point::new(rng.random_range(-5..45), rng.random_range(-5..45));
        assert_eq!(ruling_point(p, c), common::nearest_index(p, &c.points), "{p:?}");
        cases += 1;
    }
}

fn brute_edt(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut bg = Vec::new();
    for y in -1..=h {
        for x in -1..=w {
            if x < 0 || y < 0 || x >= w || y >= h || !mask.get(x as usize, y as usize) {
                bg.push((x, y));
            }
        }
    }
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let d = bg.iter().map(|&(bx, by)| (bx - x).pow(2) + (by - y).pow(2)).min().unwrap();
            out.push(d as f64);
        }
    }
    out
}

#[test]
fn edt_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let mask = common::random_mask(&mut rng, 24);
        assert_eq!(edt_squared(&mask), brute_edt(&mask));
    }
}

/// Samples with variance concentrated along `k` random directions at
/// well-separated scales, plus small isotropic noise.
fn spiked_samples(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> Vec<Vec<f64>> {
    let dirs: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|_| {
            let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-0.01..0.01)).collect();
            for (j, dir) in dirs.iter().enumerate() {
                let a = rng.random_range(-1.0..1.0) * 10.0 / (j + 1) as f64;
                for (xi, di) in x.iter_mut().zip(dir) {
                    *xi += a * di;
                }
            }
            x
        })
        .collect()
}

/// Projector onto the top-`k` right singular vectors of the centred data.
fn svd_projector(samples: &[Vec<f64>], k: usize) -> DMatrix<f64> {
    let (n, d) = (samples.len(), samples[0].len());
    let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n as f64).collect();
    let x = DMatrix::from_fn(n, d, |i, j| samples[i][j] - mean[j]);
    let svd = x.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut p = DMatrix::zeros(d, d);
    for &r in &order[..k] {
        let v = vt.row(r).transpose();
        p += &v * v.transpose();
    }
    p
}

fn model_projector(model: &pca::PcaModel) -> DMatrix<f64> {
    let d = model.d();
    let mut p = DMatrix::zeros(d, d);
    for b in model.basis() {
        let v = DMatrix::from_column_slice(d, 1, b);
        p += &v * v.transpose();
    }
    p
}

#[test]
fn pca_subspace_matches_svd_on_both_routes() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    // d > n exercises the Gram route, n > d the covariance route
    for (n, d, k) in [(30, 80, 4), (120, 25, 5), (12, 12, 3)] {
        let samples = spiked_samples(&mut rng, n, d, k);
        let model = pca::fit(&samples, k).unwrap();
        let diff = (model_projector(&model) - svd_projector(&samples, k)).norm();
        assert!(diff < 1e-6, "n {n} d {d}: projector difference {diff}");
        for b in model.basis() {
            let lead = b.iter().find(|v| v.abs() > 1e-12).unwrap();
            assert!(*lead > 0.0);
        }
    }
}

#[test]
fn pca_mean_matches_sample_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let samples = spiked_samples(&mut rng, 20, 10, 2);
    let model = pca::fit(&samples, 2).unwrap();
    for j in 0..10 {
        let m = samples.iter().map(|s| s[j]).sum::<f64>() / 20.0;
        assert!((model.mean()[j] - m).abs() < 1e-12);
    }
}

#[test]
fn raster_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let dir = tempfile::tempdir().unwrap();
    for i in 0..100 {
        let (w, h) = (rng.random_range(1..70), rng.random_range(1..70));
        let img = GrayImage::from_fn(w, h, |_, _| rng.random());
        for format in [ImageFormat::Pgm, ImageFormat::PgmAscii] {
            assert_eq!(decode_image(&encode_pgm(&img, format)).unwrap(), img);
        }
        let path = dir.path().join(format!("{i}.png"));
        save_image(&img, &path, ImageFormat::Png).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }
}

#[test]
fn crop_inverts_pad() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let (tw, th) = (w + rng.random_range(0..20), h + rng.random_range(0..20));
        let img = GrayImage::from_fn(w, h, |_, _| rng.random());
        let padded = pad_to(&img, tw, th, 255).unwrap();
        let (left, top) = pad_margins(w, h, tw, th);
        assert_eq!(crop(&padded, Rect::new(left, top, w, h)).unwrap(), img);
        let fill = padded.data().iter().filter(|&&v| v == 255).count();
        assert!(fill >= tw * th - w * h);
    }
}
