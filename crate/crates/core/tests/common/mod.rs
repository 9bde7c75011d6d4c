//! Synthetic phantom shared by the integration suites.

#![allow(dead_code)]

use densityseg::imageio::{BinaryMask, GrayImage};

pub const FAT: u16 = 100;
pub const DENSE: u16 = 200;
pub const VESSEL: u16 = 220;

pub struct Phantom {
    pub image: GrayImage,
    pub breast: BinaryMask,
    pub disk: BinaryMask,
    pub lines: BinaryMask,
}

/// Lines as (direction in degrees, signed offset from the center) at the 256 scale.
const LINES: [(f64, f64); 5] = [
    (0.0, -30.0),
    (35.0, 10.0),
    (80.0, 40.0),
    (120.0, -45.0),
    (160.0, 20.0),
];

/// `n × n` phantom: a breast disk of fat, a dense disk (radius 60 at n = 256)
/// at its center, and five 2-px bright lines crossing both.
pub fn phantom(n: usize) -> Phantom {
    let s = n as f64 / 256.0;
    let center = (n as f64 - 1.0) / 2.0;
    let breast_r = 120.0 * s;
    let disk_r = 60.0 * s;
    let dist =
        |r: usize, c: usize| ((r as f64 - center).powi(2) + (c as f64 - center).powi(2)).sqrt();
    let breast = BinaryMask::from_fn(n, n, |r, c| dist(r, c) <= breast_r);
    let disk = BinaryMask::from_fn(n, n, |r, c| dist(r, c) <= disk_r);
    let lines = BinaryMask::from_fn(n, n, |r, c| {
        breast.get(r, c)
            && LINES.iter().any(|&(deg, off)| {
                let (sin, cos) = deg.to_radians().sin_cos();
                // signed distance from the line through the offset point
                let d = (c as f64 - center) * sin - (r as f64 - center) * cos - off * s;
                d.abs() < 1.0
            })
    });
    let image = GrayImage::from_fn(n, n, 8, |r, c| {
        if lines.get(r, c) {
            VESSEL
        } else if disk.get(r, c) {
            DENSE
        } else if breast.get(r, c) {
            FAT
        } else {
            0
        }
    })
    .unwrap();
    Phantom {
        image,
        breast,
        disk,
        lines,
    }
}

pub fn dice(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let both = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(&x, &y)| x && y)
        .count();
    2.0 * both as f64 / (a.count() + b.count()) as f64
}
