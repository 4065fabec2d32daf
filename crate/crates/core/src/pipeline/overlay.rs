use crate::centromere::CallClass;
use crate::raster::{GrayImage, Rect};
use crate::segmentation::Point;

use super::ImageReport;

const OUTLINE: u8 = 0;
const SKELETON: u8 = 255;
const DOT: u8 = 160;

// 3x5 glyphs, one row per u8 (low three bits, MSB left)
const GLYPH_M: [u8; 5] = [0b101, 0b111, 0b111, 0b101, 0b101];
const GLYPH_D: [u8; 5] = [0b110, 0b101, 0b101, 0b101, 0b110];
const GLYPH_C: [u8; 5] = [0b011, 0b100, 0b100, 0b100, 0b011];

fn put(img: &mut GrayImage, bbox: Rect, p: Point, v: u8) {
    if p.x >= 0 && p.y >= 0 && bbox.contains(p.x as usize, p.y as usize) && (p.x as usize) < img.width() && (p.y as usize) < img.height() {
        img.set(p.x as usize, p.y as usize, v);
    }
}

fn draw_tag(img: &mut GrayImage, bbox: Rect, class: CallClass) {
    let first = match class {
        CallClass::Mc => GLYPH_M,
        CallClass::Dc => GLYPH_D,
    };
    for (g, glyph) in [first, GLYPH_C].iter().enumerate() {
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..3 {
                if bits >> (2 - col) & 1 == 1 {
                    let p = Point::new((bbox.x + g * 4 + col) as i32, (bbox.y + row) as i32);
                    put(img, bbox, p, OUTLINE);
                }
            }
        }
    }
}

/// Draw outlines (black), skeletons (white), centromere dots (grey plus
/// shapes) and an MC/DC tag in the top-left corner of each call's bbox.
/// Nothing is drawn outside the bboxes.
pub fn render_overlay(img: &GrayImage, report: &ImageReport) -> GrayImage {
    let mut out = img.clone();
    for (i, rec) in report.calls.iter().enumerate() {
        let bbox = rec.bbox;
        if let Some(g) = report.geometry.get(i) {
            for &p in &g.outline {
                put(&mut out, bbox, p, OUTLINE);
            }
            for &p in &g.skeleton {
                put(&mut out, bbox, p, SKELETON);
            }
        }
        if bbox.w >= 7 && bbox.h >= 5 {
            draw_tag(&mut out, bbox, rec.call.class);
        }
        for &c in &rec.call.centromeres {
            for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                put(&mut out, bbox, Point::new(c.x + dx, c.y + dy), DOT);
            }
        }
    }
    out
}
