use std::path::Path;
use std::process::Command as Proc;

use chartlab::{execute, Command, ExperimentConfig, Method, ScenarioEntry, Task};
use chartlab_core::scenegen::{Area, ScenarioSpec};

fn small(mut s: ScenarioSpec, side: f64, spacing: f64) -> ScenarioSpec {
    s.area = Area { width_m: side, height_m: side };
    s.traj_spacing_m = spacing;
    let k = s.ap_positions.len() as f64;
    s.ap_positions = (0..s.ap_positions.len())
        .map(|i| {
            let a = i as f64 / k * std::f64::consts::TAU;
            [side / 2.0 + side * a.cos(), side / 2.0 + side * a.sin()]
        })
        .collect();
    s
}

/// Two small scenarios and a few epochs of everything.
fn tiny(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.scenarios = vec![
        ScenarioEntry::Spec(small(ScenarioSpec::indoor_like(3), 2.0, 0.2)),
        ScenarioEntry::Spec(small(ScenarioSpec::factory_like(3), 4.0, 0.4)),
    ];
    c.train.epochs = 2;
    c.train.n_train_batches = 4;
    c.train.n_test_batches = 2;
    c.train.batch_size = 16;
    c.train.semi_scenarios = vec![2];
    c.autoencoder_epochs = 1;
    c.heads.epochs = 3;
    c.scs_ee.epochs = 2;
    c.embed_dims = vec![2, 4];
    c.output_dir = dir.to_path_buf();
    c.validate().unwrap();
    c
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn csv_rows(p: impl AsRef<Path>) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

/// Tag balance check; enough to catch malformed output from a writer that
/// only emits elements, attributes and escaped text.
fn well_formed(xml: &str) -> bool {
    let mut stack = Vec::new();
    let mut rest = xml;
    while let Some(i) = rest.find('<') {
        let Some(j) = rest[i..].find('>') else { return false };
        let tag = &rest[i + 1..i + j];
        rest = &rest[i + j + 1..];
        if tag.starts_with('?') || tag.ends_with('/') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            if stack.pop() != Some(name.to_string()) {
                return false;
            }
        } else {
            stack.push(tag.split_whitespace().next().unwrap_or("").to_string());
        }
    }
    stack.is_empty()
}

#[test]
fn generate_is_idempotent_and_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let s = execute(Command::Generate, &cfg).unwrap();
    assert_eq!(s.ran, ["generate/s2", "generate/s3"]);
    let first = std::fs::read(dir.path().join("scenarios/scenario_2.bin")).unwrap();
    let s = execute(Command::Generate, &cfg).unwrap();
    assert!(s.ran.is_empty());

    let other = tempfile::tempdir().unwrap();
    execute(Command::Generate, &tiny(other.path())).unwrap();
    assert_eq!(std::fs::read(other.path().join("scenarios/scenario_2.bin")).unwrap(), first);
    assert_eq!(read(dir.path().join("manifest.json")), read(other.path().join("manifest.json")));
}

#[test]
fn train_counts_checkpoints_logs_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.methods = vec![Method::Csi2VecAug];
    cfg.tasks = vec![Task::Pos];
    execute(Command::Generate, &cfg).unwrap();
    let s = execute(Command::Train, &cfg).unwrap();
    assert_eq!(s.ran, ["model/csi2vec-aug/d16", "head/csi2vec-aug_d16_pos_s2", "head/csi2vec-aug_d16_pos_s3"]);
    let models: Vec<_> = std::fs::read_dir(dir.path().join("models")).unwrap().collect();
    assert_eq!(models.len(), 1);
    assert_eq!(std::fs::read_dir(dir.path().join("heads")).unwrap().count(), 2);

    let log = csv_rows(dir.path().join("logs/csi2vec-aug_d16_train.csv"));
    let train_rows: Vec<_> = log.iter().filter(|r| r[2] == "train").collect();
    assert_eq!(train_rows.len(), cfg.train.epochs * cfg.train.n_train_batches);
    let mut keys: Vec<_> = log.iter().map(|r| (r[0].clone(), r[1].clone(), r[2].clone())).collect();
    let n = keys.len();
    keys.dedup();
    assert_eq!(keys.len(), n, "one row per (epoch, batch, phase)");

    let s = execute(Command::Train, &cfg).unwrap();
    assert!(s.ran.is_empty(), "{s:?}");
    assert_eq!(s.skipped.len(), 3);

    // a head config change reruns the heads only
    cfg.heads.epochs = 4;
    let s = execute(Command::Train, &cfg).unwrap();
    assert_eq!(s.skipped, ["model/csi2vec-aug/d16"]);
    assert_eq!(s.ran.len(), 2);
}

#[test]
fn full_run_tables_plots_sweep_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let cfg = tiny(a.path());
    execute(Command::Run, &cfg).unwrap();

    for id in [2, 3] {
        let rows = csv_rows(a.path().join(format!("tables/scenario_{id}.csv")));
        assert_eq!(rows.len(), Method::ALL.len() * Task::ALL.len());
        for r in &rows {
            let is_cc = r[1] != "pos";
            assert_eq!(r[3].is_empty(), is_cc, "{r:?}");
            assert_eq!(r[4].is_empty(), is_cc, "{r:?}");
            for cell in &r[5..] {
                assert!(cell.parse::<f64>().unwrap().is_finite());
            }
        }
        let n_test = csv_rows(a.path().join(format!("charts/csi2vec_pos_s{id}.csv"))).len();
        assert!(n_test > 10);
        for m in Method::ALL {
            for t in Task::ALL {
                let svg = read(a.path().join(format!("plots/{m}_{t}_s{id}.svg")));
                assert!(well_formed(&svg));
                assert_eq!(svg.matches("<circle").count(), n_test);
            }
        }
        let sweep = csv_rows(a.path().join(format!("sweep/sweep_s{id}.csv")));
        assert_eq!(sweep.len(), Method::ALL.len() * cfg.embed_dims.len());
        assert!(well_formed(&read(a.path().join(format!("sweep/sweep_s{id}.svg")))));
    }
    assert!(a.path().join("models/csi2vec-aug-semi_d16_aux_s2.ckpt").exists());
    assert!(a.path().join("models/ae_d16_decoder.ckpt").exists());

    // every file on disk except the manifest has an entry
    let manifest: chartlab::Manifest = serde_json::from_str(&read(a.path().join("manifest.json"))).unwrap();
    let mut on_disk = Vec::new();
    let mut stack = vec![a.path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                on_disk.push(p.strip_prefix(a.path()).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    on_disk.retain(|p| p != "manifest.json");
    on_disk.sort();
    let listed: Vec<_> = manifest.entries.iter().map(|e| e.path.clone()).collect();
    assert_eq!(listed, on_disk);
    assert!(manifest.entries.iter().all(|e| e.config_hash == cfg.hash() && e.sha256.len() == 64));

    let b = tempfile::tempdir().unwrap();
    execute(Command::Run, &tiny(b.path())).unwrap();
    assert_eq!(read(a.path().join("manifest.json")), read(b.path().join("manifest.json")));
}

fn bin(args: &[&str]) -> std::process::Output {
    Proc::new(env!("CARGO_BIN_EXE_chartlab")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut cfg = tiny(&out);
    let mut broken = cfg.clone();
    if let ScenarioEntry::Spec(s) = &mut broken.scenarios[0] {
        s.n_ap = 0;
    }
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(&cfg_path, serde_json::to_string(&broken).unwrap()).unwrap();
    let o = bin(&["generate", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists(), "nothing is written for an invalid spec");

    let o = bin(&["train", "--set", "train.epochz=3"]);
    assert_eq!(o.status.code(), Some(2));

    cfg.methods = vec![Method::Csi2Vec];
    cfg.tasks = vec![Task::CcPca];
    let cfg_path = dir.path().join("ok.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let c = cfg_path.to_str().unwrap();
    let o = bin(&["train", "--config", c]);
    assert_eq!(o.status.code(), Some(3), "missing scenario files");
    assert_eq!(bin(&["generate", "--config", c, "--jobs", "2"]).status.code(), Some(0));
    assert_eq!(bin(&["eval", "--config", c]).status.code(), Some(3), "missing checkpoint");

    let o = bin(&["train", "--config", c, "--set", "train.adam.learning_rate=1e300"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}
