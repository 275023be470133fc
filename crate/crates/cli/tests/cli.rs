use std::path::Path;
use std::process::{Command, Output};

use image::{GrayImage, Luma, Rgb, RgbImage};

fn ecoscapes(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecoscapes"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ECOSCAPES_API_TOKEN")
        .env_remove("ECOSCAPES_LLM_TOKEN")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_manual(root: &Path, loc: &str) {
    let dir = root.join(loc);
    std::fs::create_dir_all(&dir).unwrap();
    RgbImage::from_fn(40, 30, |x, y| Rgb([(x * 6) as u8, (y * 8) as u8, 90]))
        .save(dir.join("rgb.png"))
        .unwrap();
    RgbImage::from_fn(40, 30, |x, _| Rgb([200, (x * 6) as u8, 40]))
        .save(dir.join("moisture.png"))
        .unwrap();
    GrayImage::from_fn(40, 30, |x, _| {
        Luma([if (10..16).contains(&x) { 230 } else { 0 }])
    })
    .save(dir.join("water.png"))
    .unwrap();
}

fn write_config(dir: &Path) -> String {
    let cfg = dir.join("ecoscapes.toml");
    std::fs::write(
        &cfg,
        format!(
            "manual_root = {:?}\noutput_dir = {:?}\ngeocoder_url = \"http://127.0.0.1:9/search\"\n\
             satellite_api_url = \"http://127.0.0.1:9/v1\"\n",
            dir.join("satellite_data"),
            dir.join("out")
        ),
    )
    .unwrap();
    cfg.to_str().unwrap().to_owned()
}

#[test]
fn run_with_manual_images() {
    let dir = tempfile::tempdir().unwrap();
    write_manual(&dir.path().join("satellite_data"), "Roßtal");
    let cfg = write_config(dir.path());
    let o = ecoscapes(&["--config", &cfg, "run", "Roßtal"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run_dir = Path::new(stdout(&o).trim()).to_owned();
    assert_eq!(run_dir, dir.path().join("out/Roßtal"));
    for f in [
        "rgb_analysis.txt",
        "moisture_analysis.txt",
        "water_analysis.txt",
        "climate_report.txt",
        "downstream_prompt.txt",
        "run_report.json",
    ] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn run_without_images_or_token_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = ecoscapes(&["--config", &cfg, "run", "Nowhere"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("satellite_loader: failed"), "{err}");
    assert!(err.contains("configuration"), "{err}");
}

#[test]
fn remote_backend_needs_token() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = ecoscapes(
        &["--config", &cfg, "run", "X", "--backend", "remote"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ECOSCAPES_LLM_TOKEN"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "max_clouds = 0.5\n").unwrap();
    let o = ecoscapes(&["--config", cfg.to_str().unwrap(), "run", "X"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("max_clouds"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ecoscapes(&["run"], dir.path()).status.code(), Some(1));
    assert_eq!(ecoscapes(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn score_add_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let add = |run: &str, value: &str| {
        ecoscapes(
            &[
                "score",
                "add",
                "--location",
                "Fürth",
                "--system",
                "CC",
                "--criterion",
                "usability",
                "--run",
                run,
                "--value",
                value,
            ],
            dir.path(),
        )
    };
    let o = add("1", "7");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains('7'), "{}", stderr(&o));
    assert!(!dir.path().join("scores.csv").exists());

    assert_eq!(add("1", "4").status.code(), Some(0));
    assert_eq!(stdout(&add("1", "4")).trim(), "already recorded");
    assert_eq!(add("1", "2").status.code(), Some(1));
    assert_eq!(add("2", "3").status.code(), Some(0));

    let o = ecoscapes(
        &["score", "summary", "--location", "Fürth", "--json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("\"median\": 3.5"), "{out}");
}

#[test]
fn summary_of_empty_store_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecoscapes(&["score", "summary", "--location", "Roßtal"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Roßtal"), "{}", stderr(&o));
}

#[test]
fn published_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecoscapes(
        &[
            "score",
            "summary",
            "--published",
            "--location",
            "Roßtal",
            "--criterion",
            "relevancy",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("CC+EcoScapes") && out.contains("CC"), "{out}");
}

#[test]
fn indices_missing_band_named() {
    let dir = tempfile::tempdir().unwrap();
    let bands = dir.path().join("bands");
    std::fs::create_dir(&bands).unwrap();
    for b in ["B02", "B03", "B04", "B08", "B11"] {
        GrayImage::from_pixel(4, 4, Luma([50]))
            .save(bands.join(format!("{b}.png")))
            .unwrap();
        std::fs::write(
            bands.join(format!("{b}.json")),
            format!(r#"{{"band": "{b}"}}"#),
        )
        .unwrap();
    }
    let o = ecoscapes(&["indices", "--bands", "bands", "--out", "idx"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("B8A"), "{}", stderr(&o));

    GrayImage::from_pixel(4, 4, Luma([50]))
        .save(bands.join("B8A.png"))
        .unwrap();
    std::fs::write(bands.join("B8A.json"), r#"{"band": "B8A"}"#).unwrap();
    let o = ecoscapes(&["indices", "--bands", "bands", "--out", "idx"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn validate_manual_reports_sizes() {
    let dir = tempfile::tempdir().unwrap();
    write_manual(&dir.path().join("satellite_data"), "Erlangen");
    let cfg = write_config(dir.path());
    let o = ecoscapes(
        &["--config", &cfg, "validate-manual", "Erlangen"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("water.png 40x30"), "{}", stdout(&o));
    let o = ecoscapes(
        &["--config", &cfg, "validate-manual", "Nürnberg"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}
