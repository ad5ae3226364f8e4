#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use iqbench::data::Dataset;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    files.sort();
    files
}

/// Deterministic boxes for image `k`: a few ships and planes, one of them
/// rotated and one marked difficult.
pub fn annotation_text(k: usize) -> String {
    let mut s = String::from("imagesource:fixture\ngsd:0.5\n");
    for j in 0..4usize {
        let x = 20.0 + 50.0 * j as f64 + k as f64;
        let y = 30.0 + 40.0 * ((j + k) % 3) as f64;
        let (w, h) = (30.0 + 2.0 * j as f64, 14.0);
        let class = if j % 2 == 0 { "ship" } else { "plane" };
        let difficult = u8::from(j == 3);
        if j == 1 {
            // rotated by 30 degrees around the centre
            let (cx, cy) = (x + w / 2.0, y + h / 2.0);
            let (c, sn) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
            let pts: Vec<String> = [
                (-w / 2.0, -h / 2.0),
                (w / 2.0, -h / 2.0),
                (w / 2.0, h / 2.0),
                (-w / 2.0, h / 2.0),
            ]
            .iter()
            .map(|&(dx, dy)| format!("{:.3} {:.3}", cx + dx * c - dy * sn, cy + dx * sn + dy * c))
            .collect();
            s += &format!("{} {class} {difficult}\n", pts.join(" "));
        } else {
            s += &format!(
                "{x} {y} {} {y} {} {} {x} {} {class} {difficult}\n",
                x + w,
                x + w,
                y + h,
                y + h
            );
        }
    }
    s
}

/// Copies the corpus into `dir` with annotation files and loads it as a
/// dataset with a single `test` partition.
pub fn corpus_dataset(dir: &Path) -> Dataset {
    fs::create_dir_all(dir).unwrap();
    for (k, f) in corpus_files().iter().enumerate() {
        let name = f.file_name().unwrap();
        fs::copy(f, dir.join(name)).unwrap();
        let stem = f.file_stem().unwrap().to_string_lossy();
        fs::write(dir.join(format!("{stem}.txt")), annotation_text(k)).unwrap();
    }
    Dataset::from_directory(dir, "corpus").unwrap()
}

/// Writes per-image prediction files: exact copies of the annotations
/// (`jitter == 0`) or shifted copies plus one false alarm per image.
pub fn write_predictions(dataset: &Dataset, dir: &Path, jitter: f64) {
    fs::create_dir_all(dir).unwrap();
    for e in dataset.partition("test").unwrap() {
        let mut s = String::new();
        for (i, a) in e.annotations.iter().enumerate() {
            let shift = jitter * (1.0 + (i % 3) as f64);
            let coords: Vec<String> = a
                .quad
                .iter()
                .map(|p| format!("{} {}", p.x + shift, p.y - shift / 2.0))
                .collect();
            let score = 0.95 - 0.1 * i as f64;
            s += &format!("{} {} {score}\n", coords.join(" "), a.category);
        }
        if jitter > 0.0 {
            s += "200 200 230 200 230 215 200 215 ship 0.6\n";
        }
        fs::write(dir.join(format!("{}.txt", e.id)), s).unwrap();
    }
}

/// Copies a fixture file into `dir` so the original stays untouched.
pub fn copy_fixture(name: &str, dir: &Path) -> PathBuf {
    let dst = dir.join(name);
    fs::copy(fixtures().join(name), &dst).unwrap();
    dst
}
