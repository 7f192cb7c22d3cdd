//! Byte-identical CLI output across reruns and thread counts.

use std::path::Path;
use std::process::Command;

use bgt_l0::game::save_dataset;
use bgt_l0::level0::{Level0Spec, Level0Weights};
use bgt_l0::behavioral::ModelParams;
use bgt_l0::synth::{generate, GeneratorConfig};

use crate::Outcome;

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn run(dir: &Path, args: &[&str], threads: usize, out: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_bgt-l0"))
        .current_dir(dir)
        .args(args)
        .args(["--threads", &threads.to_string(), "--out", out])
        .env_remove("BGT_L0_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(outputs(&dir.join(out)))
}

pub fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let w = Level0Weights::new(vec![0.2, 0.1, 0.3, 0.1]).unwrap();
    let truth = ModelParams::qch(1.0, 0.4, 0.2, w.clone()).unwrap();
    let data = generate(&GeneratorConfig::new(truth, Level0Spec::linear4(w).unwrap(), 20, 50, 9)).unwrap();
    save_dataset(&data, dir.join("d.json")).unwrap();

    let many = std::thread::available_parallelism().map_or(1, usize::from).max(4);
    let commands: [(&str, &[&str]); 2] = [
        (
            "cv",
            &["cv", "--dataset", "d.json", "--model", "qch", "--level0", "uniform", "--rounds", "10", "--folds", "10", "--seed", "7"],
        ),
        (
            "posterior",
            &[
                "posterior", "--dataset", "d.json", "--model", "qch", "--level0", "linear4", "--iterations", "30000", "--burn-in",
                "10000", "--thin", "10", "--seed", "7",
            ],
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, args) in commands {
        let runs = [(1, "a"), (1, "b"), (many, "c")].map(|(t, o)| run(dir, args, t, &format!("{name}-{o}")));
        match runs {
            [Ok(a), Ok(b), Ok(c)] => {
                let same = a == b && a == c && !a.is_empty();
                pass &= same;
                parts.push(format!(
                    "{name}: {} files, {} across reruns and 1 vs {many} threads",
                    a.len(),
                    if same { "identical" } else { "DIFFERENT" }
                ));
            }
            other => {
                pass = false;
                let err = other.into_iter().find_map(Result::err).unwrap_or_default();
                parts.push(format!("{name}: run failed: {err}"));
            }
        }
    }
    Outcome::new(pass, parts.join("; "))
}
