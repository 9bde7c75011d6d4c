//! Phantom fixtures and binary helpers.

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use densityseg::{write_mask_pgm, write_pgm, BinaryMask, GrayImage};

pub struct Phantom {
    pub image: GrayImage,
    pub breast: BinaryMask,
    pub disk: BinaryMask,
}

/// `n × n` fat disk (radius 0.47·n) with a dense core of radius `core`·n and
/// three bright 2-px strands.
pub fn phantom(n: usize, core: f64) -> Phantom {
    let center = (n as f64 - 1.0) / 2.0;
    let dist =
        |r: usize, c: usize| ((r as f64 - center).powi(2) + (c as f64 - center).powi(2)).sqrt();
    let breast = BinaryMask::from_fn(n, n, |r, c| dist(r, c) <= 0.47 * n as f64);
    let disk = BinaryMask::from_fn(n, n, |r, c| dist(r, c) <= core * n as f64);
    let strand = |r: usize, c: usize| {
        [(20.0f64, -0.1), (75.0, 0.05), (130.0, 0.15)]
            .iter()
            .any(|&(deg, off)| {
                let (sin, cos) = deg.to_radians().sin_cos();
                let d = (c as f64 - center) * sin - (r as f64 - center) * cos - off * n as f64;
                d.abs() < 1.0
            })
    };
    let image = GrayImage::from_fn(n, n, 8, |r, c| {
        if !breast.get(r, c) {
            0
        } else if strand(r, c) {
            220
        } else if disk.get(r, c) {
            200
        } else {
            100
        }
    })
    .unwrap();
    Phantom {
        image,
        breast,
        disk,
    }
}

pub fn write_pair(images: &Path, masks: &Path, id: &str, p: &Phantom) {
    std::fs::write(images.join(format!("{id}.pgm")), write_pgm(&p.image, false)).unwrap();
    std::fs::write(
        masks.join(format!("{id}.pgm")),
        write_mask_pgm(&p.breast).unwrap(),
    )
    .unwrap();
}

pub fn densityseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densityseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
