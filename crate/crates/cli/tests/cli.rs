mod common;

use std::fs;
use std::path::Path;

use common::{densityseg, p, phantom, stderr, write_pair, Phantom};
use densityseg::metrics::read_csv;
use densityseg::{read_mask, write_mask_pgm, write_pgm, BinaryMask, DensityReport};
use tempfile::TempDir;

fn report(out: &Path) -> Vec<DensityReport> {
    read_csv(fs::File::open(out.join("report.csv")).unwrap()).unwrap()
}

/// Dense pixels the pipeline can see: the phantom core inside the analysed
/// band, located from row/column counts of the breast mask.
fn visible_core_fraction(ph: &Phantom) -> f64 {
    let (w, h) = ph.breast.dims();
    let row_count = |r: usize| (0..w).filter(|&c| ph.breast.get(r, c)).count();
    let col_count = |c: usize| (0..h).filter(|&r| ph.breast.get(r, c)).count();
    let max_w = (0..h).map(row_count).max().unwrap();
    let widest = (0..h).find(|&r| row_count(r) == max_w).unwrap();
    let max_h = (0..w).map(col_count).max().unwrap();
    let left = (0..w).find(|&c| col_count(c) > 0).unwrap();
    let rows = widest.saturating_sub(max_h / 4)..(widest + max_h / 4).min(h);
    let cols = (left + max_w / 3)..(left + max_w).min(w);
    let mut seen = 0;
    for r in rows {
        for c in cols.clone() {
            seen += ph.disk.get(r, c) as usize;
        }
    }
    seen as f64 / ph.breast.count() as f64
}

fn single(tmp: &Path, ph: &Phantom, extra: &[&str]) -> (std::process::Output, std::path::PathBuf) {
    let images = tmp.join("img");
    let masks = tmp.join("mask");
    fs::create_dir_all(&images).unwrap();
    fs::create_dir_all(&masks).unwrap();
    write_pair(&images, &masks, "ph", ph);
    let out = tmp.join("out");
    let mut args = vec![
        "segment",
        p(&images.join("ph.pgm")),
        p(&masks.join("ph.pgm")),
        "--out",
        p(&out),
    ]
    .into_iter()
    .map(str::to_owned)
    .collect::<Vec<_>>();
    args.extend(extra.iter().map(|s| s.to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    (densityseg(&args), out)
}

#[test]
fn phantom_pair_report_matches_ground_truth() {
    let tmp = TempDir::new().unwrap();
    let ph = phantom(256, 0.25);
    let (o, out) = single(tmp.path(), &ph, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = report(&out);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    let truth = visible_core_fraction(&ph);
    assert!(
        (row.percent_dense - truth).abs() < 0.02,
        "percent {} vs truth {truth}",
        row.percent_dense
    );
    assert_eq!(row.image_id, "ph");
    assert_eq!(row.breast_px, ph.breast.count() as u64);
    let dense = read_mask(&fs::read(out.join("ph_dense.pgm")).unwrap()).unwrap();
    assert_eq!(dense.count() as u64, row.dense_px);
    assert!(dense.is_subset_of(&ph.breast));
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        fs::read_to_string(out.join("report.csv")).unwrap()
    );
}

#[test]
fn mirrored_input_gives_mirrored_mask() {
    let ph = phantom(200, 0.2);
    // shift the breast to the right edge so orientation matters
    let shift = |img: &densityseg::GrayImage| {
        densityseg::GrayImage::from_fn(
            260,
            200,
            8,
            |r, c| if c >= 60 { img.get(r, c - 60) } else { 0 },
        )
        .unwrap()
    };
    let shift_mask =
        |m: &BinaryMask| BinaryMask::from_fn(260, 200, |r, c| c >= 60 && m.get(r, c - 60));
    let right = Phantom {
        image: shift(&ph.image),
        breast: shift_mask(&ph.breast),
        disk: shift_mask(&ph.disk),
    };
    let left = Phantom {
        image: right.image.flip_horizontal(),
        breast: right.breast.flip_horizontal(),
        disk: right.disk.flip_horizontal(),
    };
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (oa, out_a) = single(a.path(), &right, &[]);
    let (ob, out_b) = single(b.path(), &left, &[]);
    assert!(oa.status.success() && ob.status.success());
    let ma = read_mask(&fs::read(out_a.join("ph_dense.pgm")).unwrap()).unwrap();
    let mb = read_mask(&fs::read(out_b.join("ph_dense.pgm")).unwrap()).unwrap();
    assert!(ma.count() > 0);
    assert_eq!(ma, mb.flip_horizontal());
    assert_eq!(report(&out_a), report(&out_b));
}

#[test]
fn missing_mask_names_the_path() {
    let tmp = TempDir::new().unwrap();
    let img = tmp.path().join("a.pgm");
    fs::write(&img, write_pgm(&phantom(64, 0.2).image, false)).unwrap();
    let missing = tmp.path().join("nowhere.pgm");
    let o = densityseg(&["segment", p(&img), p(&missing), "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(p(&missing)), "{}", stderr(&o));
}

#[test]
fn dimension_mismatch_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let img = tmp.path().join("a.pgm");
    let mask = tmp.path().join("m.pgm");
    fs::write(&img, write_pgm(&phantom(64, 0.2).image, false)).unwrap();
    fs::write(&mask, write_mask_pgm(&phantom(60, 0.2).breast).unwrap()).unwrap();
    let o = densityseg(&["segment", p(&img), p(&mask), "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("64x64") && stderr(&o).contains("60x60"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn corrupt_image_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let img = tmp.path().join("a.pgm");
    fs::write(&img, b"P5\n4 4\n255\nab").unwrap();
    let o = densityseg(&["segment", p(&img), p(&img), "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(p(&img)));
}

#[test]
fn reruns_and_job_counts_are_byte_identical() {
    let ph = phantom(192, 0.22);
    let mut runs = Vec::new();
    for jobs in ["1", "1", "3", "0"] {
        let tmp = TempDir::new().unwrap();
        let (o, out) = single(tmp.path(), &ph, &["--jobs", jobs, "--debug-stages"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for dir in [out.clone(), out.join("ph_stages")] {
            for e in fs::read_dir(&dir).unwrap() {
                let path = e.unwrap().path();
                if path.is_file() {
                    files.push((
                        path.file_name().unwrap().to_string_lossy().into(),
                        fs::read(&path).unwrap(),
                    ));
                }
            }
        }
        files.sort();
        runs.push(files);
    }
    assert!(runs[0].len() > 10);
    for r in &runs[1..] {
        assert_eq!(r, &runs[0]);
    }
}

#[test]
fn debug_stages_writes_every_stage() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = single(
        tmp.path(),
        &phantom(128, 0.2),
        &["--debug-stages", "--orientations", "4"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = out.join("ph_stages");
    for name in [
        "roi.pgm",
        "region.pgm",
        "enhanced.pgm",
        "orientation_00.pgm",
        "orientation_03.pgm",
        "response.pgm",
        "suppressed.pgm",
        "low.pgm",
        "high.pgm",
        "fused.pgm",
        "dense.pgm",
    ] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    assert!(!dir.join("orientation_04.pgm").exists());
}

fn batch_dirs(tmp: &Path, pairs: &[(&str, Phantom)]) -> (std::path::PathBuf, std::path::PathBuf) {
    let images = tmp.join("images");
    let masks = tmp.join("masks");
    fs::create_dir_all(&images).unwrap();
    fs::create_dir_all(&masks).unwrap();
    for (id, ph) in pairs {
        write_pair(&images, &masks, id, ph);
    }
    (images, masks)
}

#[test]
fn batch_of_three_is_sorted_and_equals_singles() {
    let tmp = TempDir::new().unwrap();
    let (images, masks) = batch_dirs(
        tmp.path(),
        &[
            ("mdb003", phantom(160, 0.15)),
            ("mdb001", phantom(200, 0.25)),
            ("mdb002", phantom(180, 0.3)),
        ],
    );
    let out = tmp.path().join("batch");
    let o = densityseg(&["batch", p(&images), p(&masks), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty());
    let rows = report(&out);
    let ids: Vec<&str> = rows.iter().map(|r| r.image_id.as_str()).collect();
    assert_eq!(ids, ["mdb001", "mdb002", "mdb003"]);

    let mut singles = Vec::new();
    for id in ["mdb003", "mdb001", "mdb002"] {
        let sout = tmp.path().join(format!("single_{id}"));
        let o = densityseg(&[
            "segment",
            p(&images.join(format!("{id}.pgm"))),
            p(&masks.join(format!("{id}.pgm"))),
            "--out",
            p(&sout),
        ]);
        assert!(o.status.success());
        singles.extend(report(&sout));
        assert_eq!(
            fs::read(sout.join(format!("{id}_dense.pgm"))).unwrap(),
            fs::read(out.join(format!("{id}_dense.pgm"))).unwrap()
        );
    }
    singles.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    assert_eq!(rows, singles);

    // categories follow the densities
    assert!(rows
        .windows(2)
        .all(|w| w[0].percent_dense != w[1].percent_dense));
}

#[test]
fn unpaired_file_warns_and_is_skipped() {
    let tmp = TempDir::new().unwrap();
    let (images, masks) = batch_dirs(tmp.path(), &[("a", phantom(128, 0.2))]);
    fs::write(
        images.join("b.pgm"),
        write_pgm(&phantom(128, 0.2).image, false),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = densityseg(&["batch", p(&images), p(&masks), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(&out).len(), 1);
    let err = stderr(&o);
    assert_eq!(
        err.lines().filter(|l| l.starts_with("warning:")).count(),
        1,
        "{err}"
    );
    assert!(err.contains("b.pgm"));
}

#[test]
fn warnings_are_in_id_order() {
    let tmp = TempDir::new().unwrap();
    let (images, masks) = batch_dirs(tmp.path(), &[("m", phantom(128, 0.2))]);
    let img = write_pgm(&phantom(64, 0.2).image, false);
    for id in ["z", "c", "k"] {
        fs::write(images.join(format!("{id}.pgm")), &img).unwrap();
    }
    fs::write(
        masks.join("d.pgm"),
        write_mask_pgm(&phantom(64, 0.2).breast).unwrap(),
    )
    .unwrap();
    let o = densityseg(&[
        "batch",
        p(&images),
        p(&masks),
        "--out",
        p(&tmp.path().join("o")),
    ]);
    assert!(o.status.success());
    let ids: Vec<char> = stderr(&o)
        .lines()
        .map(|l| l.trim_start_matches("warning: ").chars().next().unwrap())
        .collect();
    assert_eq!(ids, ['c', 'd', 'k', 'z']);
}

#[test]
fn empty_pairing_fails() {
    let tmp = TempDir::new().unwrap();
    let (images, masks) = batch_dirs(tmp.path(), &[]);
    fs::write(
        images.join("x.pgm"),
        write_pgm(&phantom(64, 0.2).image, false),
    )
    .unwrap();
    let o = densityseg(&[
        "batch",
        p(&images),
        p(&masks),
        "--out",
        p(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = densityseg(&["batch", p(&tmp.path().join("nope")), p(&masks)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_recomputes_batch_csv() {
    let tmp = TempDir::new().unwrap();
    let (images, masks) = batch_dirs(
        tmp.path(),
        &[("b", phantom(160, 0.3)), ("a", phantom(128, 0.2))],
    );
    let out = tmp.path().join("out");
    let o = densityseg(&[
        "batch",
        p(&images),
        p(&masks),
        "--out",
        p(&out),
        "--reference",
        "mean",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let batch_csv = fs::read(out.join("report.csv")).unwrap();

    let dense = tmp.path().join("dense");
    fs::create_dir_all(&dense).unwrap();
    for id in ["a", "b"] {
        let name = format!("{id}_dense.pgm");
        fs::copy(out.join(&name), dense.join(&name)).unwrap();
    }
    let again = tmp.path().join("again");
    let o = densityseg(&[
        "report",
        p(&masks),
        p(&dense),
        "--out",
        p(&again),
        "--reference",
        "mean",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(again.join("report.csv")).unwrap(), batch_csv);
}

#[test]
fn config_file_and_overrides() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.conf");
    fs::write(
        &cfg,
        "# tuned\nt_low = 0.5\nreference = mean\ntiles = 4x4\n",
    )
    .unwrap();
    let (o, out) = single(
        tmp.path(),
        &phantom(128, 0.2),
        &["--config", p(&cfg), "--reference", "max"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        report(&out)[0].threshold_reference,
        densityseg::Reference::Max
    );

    fs::write(&cfg, "t_lo = 0.5\n").unwrap();
    let (o, _) = single(tmp.path(), &phantom(128, 0.2), &["--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("t_lo"));

    let (o, _) = single(
        tmp.path(),
        &phantom(128, 0.2),
        &["--config", p(&tmp.path().join("absent.conf"))],
    );
    assert_eq!(o.status.code(), Some(2));

    let (o, _) = single(
        tmp.path(),
        &phantom(128, 0.2),
        &["--t-low", "0.9", "--t-high", "0.8"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn kernels_and_enhance() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("k");
    let o = densityseg(&[
        "kernels",
        "--kernel-size",
        "15",
        "--orientations",
        "6",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 6);
    let k = densityseg::read_pgm(&fs::read(out.join("kernel_05.pgm")).unwrap()).unwrap();
    assert_eq!(k.dims(), (15, 15));
    assert_eq!(
        densityseg(&["kernels", "--out", p(&out)]).status.code(),
        Some(1)
    );

    let ph = phantom(128, 0.2);
    let img = tmp.path().join("x.pgm");
    let mask = tmp.path().join("xm.pgm");
    fs::write(&img, write_pgm(&ph.image, false)).unwrap();
    fs::write(&mask, write_mask_pgm(&ph.breast).unwrap()).unwrap();
    let o = densityseg(&["kernels", "--image", p(&img), "--out", p(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .all(|l| l.split('\t').nth(2) == Some("11")));

    let o = densityseg(&["enhance", p(&img), p(&mask), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = densityseg::read_pgm(&fs::read(out.join("x_clahe.pgm")).unwrap()).unwrap();
    assert_eq!(e.dims(), (128, 128));
    assert!((0..128).all(|r| (0..128).all(|c| ph.breast.get(r, c) || e.get(r, c) == 0)));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(densityseg(&[]).status.code(), Some(1));
    assert_eq!(densityseg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        densityseg(&["batch", "a", "b", "--jobs", "many"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(densityseg(&["--version"]).status.code(), Some(0));
}
