use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gotstyle::io::{
    read_image, read_stats, read_tensor, write_manifest, write_stats, write_tensor, FeatureShape,
    Manifest, ManifestLevel,
};
use gotstyle::{GaussianStats, SpdMatrix};
use gotstyle_testkit as kit;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn gotstyle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gotstyle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gotstyle(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    gotstyle(args).status.code().unwrap()
}

fn value(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|line| line.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
        .to_string()
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn scalar_stats(path: &Path, mean: f64, var: f64) {
    let stats =
        GaussianStats::new(vec![mean], SpdMatrix::from_diagonal(&[var]).unwrap(), 10).unwrap();
    write_stats(path, &stats).unwrap();
}

#[test]
fn distance_between_identical_stats_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("s.gots");
    let out = ok(&["stats", s(&data("style.png")), "-o", s(&stats)]);
    assert_eq!(value(&out, "n_samples"), "4096");
    assert_eq!(value(&out, "dim"), "3");
    let out = ok(&["distance", "--metric", "w2", s(&stats), s(&stats)]);
    assert_eq!(out.trim(), "w2_sq=0.0");
    for metric in ["bures", "fisher-rao", "frobenius"] {
        let out = ok(&["distance", "--metric", metric, s(&stats), s(&stats)]);
        assert!(out.trim().ends_with("=0.0"), "{out}");
    }
}

#[test]
fn scalar_distances_and_barycenter() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, mixed) = (
        dir.path().join("a.gots"),
        dir.path().join("b.gots"),
        dir.path().join("m.gots"),
    );
    scalar_stats(&a, 0.0, 1.0);
    scalar_stats(&b, 3.0, 4.0);
    let out = ok(&["distance", s(&a), s(&b)]);
    assert!((value(&out, "w2_sq").parse::<f64>().unwrap() - 10.0).abs() < 1e-12);

    ok(&[
        "barycenter",
        "--mean",
        "wasserstein",
        "--weights",
        "0.5,0.5",
        s(&a),
        s(&b),
        "-o",
        s(&mixed),
    ]);
    let stats = read_stats(&mixed).unwrap();
    assert!((stats.cov.as_mat()[(0, 0)] - 2.25).abs() < 1e-12);
    assert!((stats.mean[0] - 1.5).abs() < 1e-15);

    ok(&[
        "barycenter",
        "--mean",
        "arithmetic",
        s(&a),
        s(&b),
        "-o",
        s(&mixed),
    ]);
    assert!((read_stats(&mixed).unwrap().cov.as_mat()[(0, 0)] - 2.5).abs() < 1e-12);
    ok(&[
        "barycenter",
        "--mean",
        "harmonic",
        s(&a),
        s(&b),
        "-o",
        s(&mixed),
    ]);
    assert!((read_stats(&mixed).unwrap().cov.as_mat()[(0, 0)] - 1.6).abs() < 1e-12);
    let out = ok(&[
        "barycenter",
        "--mean",
        "fisherrao",
        "--step",
        "1",
        "--backtracking",
        s(&a),
        s(&b),
        "-o",
        s(&mixed),
    ]);
    assert!((read_stats(&mixed).unwrap().cov.as_mat()[(0, 0)] - 2.0).abs() < 1e-8);
    assert!(value(&out, "iterations").parse::<usize>().unwrap() >= 1);
}

#[test]
fn transfer_at_zero_keeps_the_content() {
    let dir = tempfile::tempdir().unwrap();
    let out_png = dir.path().join("o.png");
    let out = ok(&[
        "transfer",
        "--content",
        s(&data("content.png")),
        "--style",
        s(&data("style.png")),
        "--t",
        "0",
        "-o",
        s(&out_png),
    ]);
    assert_eq!(value(&out, "clamp_fraction"), "0.0");
    assert_eq!(
        read_image(&out_png).unwrap(),
        read_image(data("content.png")).unwrap()
    );
}

#[test]
fn transfer_matches_style_moments_and_accepts_a_stats_style() {
    let dir = tempfile::tempdir().unwrap();
    let (style_stats, out_stats) = (dir.path().join("s.gots"), dir.path().join("o.gots"));
    ok(&["stats", s(&data("style.png")), "-o", s(&style_stats)]);
    for style in [data("style.png"), style_stats.clone()] {
        ok(&[
            "transfer",
            "--content",
            s(&data("content.png")),
            "--style",
            s(&style),
            "-o",
            s(&dir.path().join("o.png")),
            "--stats-out",
            s(&out_stats),
        ]);
        let got = read_stats(&out_stats).unwrap();
        let want = read_stats(&style_stats).unwrap();
        assert!(got.cov.rel_frobenius_diff(&want.cov) < 1e-10);
    }
    for map in ["wct", "adain"] {
        ok(&[
            "transfer",
            "--map",
            map,
            "--content",
            s(&data("content.png")),
            "--style",
            s(&data("style.png")),
            "-o",
            s(&dir.path().join("o.png")),
        ]);
    }
}

#[test]
fn mix_with_full_content_weight_returns_the_content() {
    let dir = tempfile::tempdir().unwrap();
    let out_png = dir.path().join("o.png");
    ok(&[
        "mix",
        "--content",
        s(&data("content.png")),
        "--style",
        s(&data("grid_style_1.png")),
        "--style",
        s(&data("grid_style_2.png")),
        "--with-content",
        "--weights",
        "0,0,1",
        "-o",
        s(&out_png),
    ]);
    assert_eq!(
        read_image(&out_png).unwrap().to_rgb8(),
        read_image(data("content.png")).unwrap().to_rgb8()
    );
}

fn grid(dir: &Path, corners: usize, resolution: usize, jobs: usize) -> String {
    let styles: Vec<PathBuf> = (1..=corners)
        .map(|k| data(&format!("grid_style_{k}.png")))
        .collect();
    let mut args = vec![
        "grid".to_string(),
        "--content".into(),
        s(&data("content.png")).into(),
        "--corners".into(),
        corners.to_string(),
        "--resolution".into(),
        resolution.to_string(),
        "--jobs".into(),
        jobs.to_string(),
        "--out-dir".into(),
        s(dir).into(),
    ];
    for style in &styles {
        args.push("--style".into());
        args.push(s(style).into());
    }
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn square_grid_corners_equal_single_transfers() {
    let dir = tempfile::tempdir().unwrap();
    let out = grid(dir.path(), 4, 5, 3);
    assert_eq!(value(&out, "cells"), "25");
    let cells = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_str()
                .unwrap()
                .starts_with("cell_")
        })
        .count();
    assert_eq!(cells, 25);
    for (k, cell) in [
        (1, "cell_r0_c0"),
        (2, "cell_r0_c4"),
        (3, "cell_r4_c0"),
        (4, "cell_r4_c4"),
    ] {
        let single = dir.path().join(format!("single{k}.png"));
        ok(&[
            "transfer",
            "--content",
            s(&data("content.png")),
            "--style",
            s(&data(&format!("grid_style_{k}.png"))),
            "-o",
            s(&single),
        ]);
        let cell = dir.path().join(format!("{cell}.png"));
        assert_eq!(
            std::fs::read(&single).unwrap(),
            std::fs::read(&cell).unwrap(),
            "{cell:?}"
        );
    }
    let sheet = read_image(dir.path().join("contact_sheet.png")).unwrap();
    assert_eq!(sheet.width(), 5 * (64 + 4) + 4);
    assert_eq!(sheet.height(), 5 * (64 + 4) + 4);
}

#[test]
fn grid_output_does_not_depend_on_job_count() {
    let (one, many) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = grid(one.path(), 3, 4, 1);
    let b = grid(many.path(), 3, 4, 4);
    assert_eq!(value(&a, "cells"), "10");
    let strip = |text: &str| {
        text.lines()
            .filter(|l| !l.starts_with("contact_sheet"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    for name in ["cell_r3_c2.png", "cell_r1_c1.png", "contact_sheet.png"] {
        assert_eq!(
            std::fs::read(one.path().join(name)).unwrap(),
            std::fs::read(many.path().join(name)).unwrap()
        );
    }
    let line = grid(one.path(), 2, 3, 2);
    assert_eq!(value(&line, "cells"), "3");
}

#[test]
fn usage_errors_exit_with_one() {
    let content = data("content.png");
    let style = data("style.png");
    assert_eq!(
        code(&[
            "transfer",
            "--content",
            s(&content),
            "--style",
            s(&style),
            "--t",
            "1.5",
            "-o",
            "x.png"
        ]),
        1
    );
    assert_eq!(
        code(&["transfer", "--content", s(&content), "--style", s(&style)]),
        1
    );
    assert_eq!(code(&["distance", "--metric", "cosine", "a", "b"]), 1);
    assert_eq!(
        code(&[
            "grid",
            "--content",
            s(&content),
            "--style",
            s(&style),
            "--corners",
            "5",
            "--out-dir",
            "x"
        ]),
        1
    );
    assert_eq!(
        code(&[
            "grid",
            "--content",
            s(&content),
            "--style",
            s(&style),
            "--corners",
            "2",
            "--out-dir",
            "x"
        ]),
        1
    );
    assert_eq!(
        code(&[
            "barycenter",
            "a.gots",
            "b.gots",
            "--weights",
            "0.7,0.7",
            "-o",
            "m.gots"
        ]),
        1
    );
    assert_eq!(
        code(&["barycenter", "a.gots", "--step", "-1", "-o", "m.gots"]),
        1
    );
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.gots");
    assert_eq!(code(&["distance", s(&missing), s(&missing)]), 2);

    let text = dir.path().join("notes.png");
    std::fs::write(&text, "not an image").unwrap();
    assert_eq!(
        code(&["stats", s(&text), "-o", s(&dir.path().join("o.gots"))]),
        2
    );

    let (a, b) = (dir.path().join("a.gots"), dir.path().join("b.gots"));
    let flat = GaussianStats::new(
        vec![0.0, 0.0],
        SpdMatrix::from_diagonal(&[1.0, 0.0]).unwrap(),
        1,
    )
    .unwrap();
    write_stats(&a, &flat).unwrap();
    scalar_stats(&b, 0.0, 1.0);
    assert_eq!(
        code(&["distance", "--metric", "fisher-rao", s(&a), s(&a)]),
        2
    );
    assert_eq!(code(&["distance", s(&a), s(&b)]), 2);
    assert_eq!(
        code(&[
            "barycenter",
            "--mean",
            "harmonic",
            s(&a),
            s(&a),
            "-o",
            s(&b)
        ]),
        2
    );
}

fn tensor_manifest(dir: &Path, tag: &str, shapes: &[FeatureShape], seed: u64) -> PathBuf {
    let mut rng = kit::rng(seed);
    let levels = shapes
        .iter()
        .enumerate()
        .map(|(i, &shape)| {
            let input = dir.join(format!("{tag}{}.gotf", i + 1));
            let stats = kit::random_stats(&mut rng, shape.channels, 10.0);
            write_tensor(
                &input,
                &kit::gaussian_exact_samples(&mut rng, &stats, shape.samples()),
                shape,
            )
            .unwrap();
            ManifestLevel {
                input,
                output: dir.join(format!("{tag}{}_out.gotf", i + 1)),
                shape,
            }
        })
        .collect();
    let path = dir.join(format!("{tag}.toml"));
    write_manifest(&path, &Manifest::new(levels).unwrap()).unwrap();
    path
}

#[test]
fn tensor_codec_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = [FeatureShape::new(4, 5, 5), FeatureShape::new(6, 3, 3)];
    let content = tensor_manifest(dir.path(), "content", &shapes, 1);
    let style = tensor_manifest(dir.path(), "style", &shapes, 2);
    let log = dir.path().join("hook.log");
    let hook = format!("echo {{level}} {{output}} >> {}", s(&log));
    let out = ok(&[
        "transfer",
        "--codec",
        "tensor",
        "--content",
        s(&content),
        "--style",
        s(&style),
        "--hook",
        &hook,
    ]);
    assert!(out.contains("level2.residual="));
    let logged = std::fs::read_to_string(&log).unwrap();
    assert!(logged.starts_with("2 ") && logged.lines().nth(1).unwrap().starts_with("1 "));

    let style_stats = dir.path().join("style2.gots");
    ok(&[
        "stats",
        "--codec",
        "tensor",
        "--level",
        "2",
        s(&style),
        "-o",
        s(&style_stats),
    ]);
    let (written, shape) = read_tensor(dir.path().join("content2_out.gotf")).unwrap();
    assert_eq!(shape, shapes[1]);
    let got = gotstyle::gaussian::estimate_stats(&written, 0.0).unwrap();
    assert!(
        got.cov
            .rel_frobenius_diff(&read_stats(&style_stats).unwrap().cov)
            < 1e-5
    );

    assert_eq!(
        code(&[
            "transfer",
            "--codec",
            "tensor",
            "--content",
            s(&content),
            "--style",
            s(&style),
            "--hook",
            "false"
        ]),
        2
    );

    let grid_dir = dir.path().join("grid");
    let out = ok(&[
        "grid",
        "--codec",
        "tensor",
        "--content",
        s(&content),
        "--style",
        s(&style),
        "--style",
        s(&content),
        "--corners",
        "2",
        "--resolution",
        "3",
        "--out-dir",
        s(&grid_dir),
    ]);
    assert_eq!(value(&out, "cells"), "3");
    assert!(grid_dir.join("cell_r0_c1/manifest.toml").exists());
    assert!(grid_dir.join("cell_r0_c2/level1_out.gotf").exists());
}
