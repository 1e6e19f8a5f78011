//! The four stages of an experiment. Each stage computes its artifacts in
//! parallel (per scenario or per model) and writes them in a fixed order,
//! so the output bytes do not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chartlab_core::chartmetrics::{evaluate_all, normalize_chart, MetricReport};
use chartlab_core::downstream::{
    predict_batch, train_cc_siamese, train_pos_head, train_scs_ee, write_chart_csv, ChartPoints,
    CoordinateKind, PcaProjection, ScsTask,
};
use chartlab_core::embedtrain::{
    embed, train_autoencoder, train_csi2vec, train_csi2vec_semi, write_log_csv, Corpus, TrainLogRow,
};
use chartlab_core::neuralnet::{read_checkpoint, write_checkpoint, MlpModel};
use chartlab_core::scenegen::{generate_scenario, read_scenario, write_scenario, ScenarioData};
use chartlab_core::{Error, Matrix, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{sha256_hex, ExperimentConfig, Method, ScenarioEntry, Task};
use crate::manifest::Workspace;
use crate::svg;

type Model = MlpModel<f64>;
type Files = Vec<(String, Vec<u8>)>;

/// Stages executed and skipped by a command, by stage name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub ran: Vec<String>,
    pub skipped: Vec<String>,
}

impl Summary {
    fn merge(&mut self, other: Summary) {
        self.ran.extend(other.ran);
        self.skipped.extend(other.skipped);
    }
}

fn key(v: serde_json::Value) -> String {
    sha256_hex(v.to_string().as_bytes())
}

fn checkpoint_bytes(model: &Model) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    Ok(buf)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn scenario_rel(id: u32) -> (String, String) {
    (format!("scenarios/scenario_{id}.bin"), format!("scenarios/scenario_{id}.json"))
}

fn ensure_unique_ids(ids: impl IntoIterator<Item = u32>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Config(format!("scenario id {id} appears twice")));
        }
    }
    Ok(())
}

/// Writes one container and spec sidecar per generated scenario.
pub fn generate(cfg: &ExperimentConfig, ws: &mut Workspace) -> Result<Summary> {
    ws.set_command("generate");
    let specs = cfg.generated_specs()?;
    for s in &specs {
        s.validate()?;
    }
    ensure_unique_ids(specs.iter().map(|s| s.scenario_id))?;
    let mut summary = Summary::default();
    let mut todo = Vec::new();
    for spec in specs {
        let stage = format!("generate/s{}", spec.scenario_id);
        let k = key(serde_json::to_value(&spec)?);
        if ws.is_done(&stage, &k) {
            summary.skipped.push(stage);
        } else {
            todo.push((stage, k, spec));
        }
    }
    let data: Vec<ScenarioData> = todo.par_iter().map(|(_, _, s)| generate_scenario(s)).collect::<Result<_>>()?;
    std::fs::create_dir_all(ws.path("scenarios"))?;
    for ((stage, k, spec), d) in todo.into_iter().zip(data) {
        let (bin, json) = scenario_rel(spec.scenario_id);
        ws.begin(&stage);
        write_scenario(&ws.path(&bin), &ws.path(&json), &d)?;
        ws.record(&bin, &stage)?;
        ws.record(&json, &stage)?;
        ws.finish(&stage, &k)?;
        summary.ran.push(stage);
    }
    ws.save()?;
    Ok(summary)
}

/// Scenarios and the key of their on-disk content.
struct Loaded {
    corpus: Corpus,
    data_key: String,
}

fn load_corpus(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Loaded> {
    let specs = cfg.generated_specs()?;
    let mut spec_iter = specs.iter();
    let mut paths: Vec<(PathBuf, PathBuf)> = Vec::new();
    let mut expected = Vec::new();
    for e in &cfg.scenarios {
        match e {
            ScenarioEntry::Path(p) => {
                paths.push((p.clone(), p.with_extension("json")));
                expected.push(None);
            }
            _ => {
                let spec = spec_iter.next().expect("one spec per generated entry");
                let (bin, json) = scenario_rel(spec.scenario_id);
                paths.push((ws.path(&bin), ws.path(&json)));
                expected.push(Some(spec));
            }
        }
    }
    let mut data = Vec::with_capacity(paths.len());
    let mut hashes = Vec::with_capacity(paths.len());
    for ((bin, json), want) in paths.iter().zip(expected) {
        if !bin.exists() || !json.exists() {
            return Err(Error::Data(format!(
                "missing scenario file {}; run `chartlab generate` first",
                bin.display()
            )));
        }
        let d = read_scenario(bin, json)?;
        if let Some(spec) = want {
            if &d.spec != spec {
                return Err(Error::Data(format!(
                    "{} was generated from a different spec; rerun `chartlab generate`",
                    bin.display()
                )));
            }
        }
        hashes.push(sha256_hex(&std::fs::read(bin)?));
        data.push(d);
    }
    ensure_unique_ids(data.iter().map(|d| d.spec.scenario_id))?;
    let corpus = Corpus::new(data, &cfg.corpus)?;
    let data_key = key(json!({ "scenarios": hashes, "corpus": cfg.corpus }));
    Ok(Loaded { corpus, data_key })
}

fn model_rel(method: Method, dim: usize) -> String {
    if method.is_autoencoder() {
        format!("models/{method}_d{dim}_encoder.ckpt")
    } else {
        format!("models/{method}_d{dim}.ckpt")
    }
}

fn model_stage(method: Method, dim: usize) -> String {
    format!("model/{method}/d{dim}")
}

fn model_key(cfg: &ExperimentConfig, data_key: &str, method: Method, dim: usize) -> String {
    let mut train = cfg.train_config();
    train.embed_dim = dim;
    if method.is_autoencoder() {
        train.epochs = cfg.autoencoder_epochs;
    }
    if method != Method::Csi2VecAugSemi {
        train.semi_scenarios.clear();
    }
    let augment = method.augmented().then(|| cfg.augment_config());
    key(json!({ "data": data_key, "method": method, "train": train, "augment": augment }))
}

fn log_bytes(log: &[TrainLogRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_log_csv(&mut buf, log)?;
    Ok(buf)
}

fn train_model(cfg: &ExperimentConfig, corpus: &Corpus, method: Method, dim: usize) -> Result<Files> {
    let mut train = cfg.train_config();
    train.embed_dim = dim;
    let augment = cfg.augment_config();
    let aug = method.augmented().then_some(&augment);
    let log_rel = format!("logs/{method}_d{dim}_train.csv");
    let mut files = Vec::new();
    match method {
        Method::Csi2Vec | Method::Csi2VecAug => {
            let run = train_csi2vec(corpus, &train, aug)?;
            files.push((model_rel(method, dim), checkpoint_bytes(&run.model)?));
            files.push((log_rel, log_bytes(&run.log)?));
        }
        Method::Csi2VecAugSemi => {
            let semi = train_csi2vec_semi(corpus, &train, aug)?;
            files.push((model_rel(method, dim), checkpoint_bytes(&semi.run.model)?));
            for (id, head) in &semi.heads {
                files.push((format!("models/{method}_d{dim}_aux_s{id}.ckpt"), checkpoint_bytes(head)?));
            }
            files.push((log_rel, log_bytes(&semi.run.log)?));
        }
        Method::Ae | Method::AeAug => {
            train.epochs = cfg.autoencoder_epochs;
            let run = train_autoencoder(corpus, &train, aug)?;
            files.push((model_rel(method, dim), checkpoint_bytes(&run.encoder)?));
            files.push((format!("models/{method}_d{dim}_decoder.ckpt"), checkpoint_bytes(&run.decoder)?));
            files.push((log_rel, log_bytes(&run.log)?));
        }
        Method::ScsEe => unreachable!("the end-to-end baseline has no shared embedding"),
    }
    Ok(files)
}

fn load_model(ws: &Workspace, rel: &str) -> Result<Model> {
    let p = ws.path(rel);
    let f = std::fs::File::open(&p).map_err(|_| {
        Error::Data(format!("missing checkpoint {}; run `chartlab train` first", p.display()))
    })?;
    read_checkpoint(std::io::BufReader::new(f))
}

/// Trains every missing embedding in `wanted` and returns all of them,
/// with the key each was trained under.
fn ensure_models(
    cfg: &ExperimentConfig,
    ws: &mut Workspace,
    loaded: &Loaded,
    wanted: &[(Method, usize)],
    summary: &mut Summary,
) -> Result<BTreeMap<(Method, usize), (Model, String)>> {
    let mut todo = Vec::new();
    for &(m, d) in wanted {
        let stage = model_stage(m, d);
        let k = model_key(cfg, &loaded.data_key, m, d);
        if ws.is_done(&stage, &k) {
            summary.skipped.push(stage);
        } else {
            todo.push((m, d, stage, k));
        }
    }
    let trained: Vec<Files> =
        todo.par_iter().map(|&(m, d, _, _)| train_model(cfg, &loaded.corpus, m, d)).collect::<Result<_>>()?;
    for ((_, _, stage, k), files) in todo.into_iter().zip(trained) {
        ws.begin(&stage);
        for (rel, bytes) in files {
            ws.write(&rel, &bytes, &stage)?;
        }
        ws.finish(&stage, &k)?;
        summary.ran.push(stage);
    }
    let mut out = BTreeMap::new();
    for &(m, d) in wanted {
        let k = model_key(cfg, &loaded.data_key, m, d);
        out.insert((m, d), (load_model(ws, &model_rel(m, d))?, k));
    }
    Ok(out)
}

/// Clean training and test inputs of a method on one scenario: embeddings
/// for embedding methods, features for the end-to-end baseline.
fn method_inputs(corpus: &Corpus, s: usize, method: Method, encoder: Option<&Model>) -> Result<(Matrix, Matrix)> {
    let split = corpus.split(s);
    let source =
        if method.is_autoencoder() { &corpus.clean_raw()?[s] } else { &corpus.clean_features()?[s] };
    let tr = source.select_rows(&split.train);
    let te = source.select_rows(&split.test);
    match encoder {
        Some(m) => Ok((embed(m, &tr)?, embed(m, &te)?)),
        None => Ok((tr, te)),
    }
}

#[derive(Clone, Debug)]
struct HeadJob {
    method: Method,
    dim: usize,
    task: Task,
    s: usize,
    id: u32,
}

impl HeadJob {
    fn rel(&self) -> String {
        match self.method {
            Method::ScsEe => format!("heads/{}_{}_s{}.ckpt", self.method, self.task, self.id),
            m => format!("heads/{m}_d{}_{}_s{}.ckpt", self.dim, self.task, self.id),
        }
    }

    fn stage(&self) -> String {
        let rel = self.rel();
        rel.trim_end_matches(".ckpt").replacen("heads/", "head/", 1)
    }
}

fn head_key(cfg: &ExperimentConfig, job: &HeadJob, upstream: &str) -> String {
    let head = if job.method == Method::ScsEe { cfg.scs_ee_config() } else { cfg.head_config() };
    key(json!({ "upstream": upstream, "method": job.method, "task": job.task, "scenario": job.id, "head": head }))
}

fn train_head(cfg: &ExperimentConfig, corpus: &Corpus, job: &HeadJob, encoder: Option<&Model>) -> Result<Vec<u8>> {
    let (tr, te) = method_inputs(corpus, job.s, job.method, encoder)?;
    let positions = corpus.positions(job.s, &corpus.split(job.s).train);
    let model = if job.method == Method::ScsEe {
        let task = match job.task {
            Task::Pos => ScsTask::Pos { positions: &positions },
            Task::CcSn => ScsTask::CcSiamese,
            Task::CcPca => unreachable!("PCA charts are not trained"),
        };
        train_scs_ee(&tr, &te, task, &cfg.scs_ee_config())?.model.expect("trained tasks have a model")
    } else {
        match job.task {
            Task::Pos => train_pos_head(&tr, &positions, &te, &cfg.head_config())?.model,
            Task::CcSn => train_cc_siamese(&tr, &te, &cfg.head_config())?.model,
            Task::CcPca => unreachable!("PCA charts are not trained"),
        }
    };
    checkpoint_bytes(&model)
}

fn ensure_heads(
    cfg: &ExperimentConfig,
    ws: &mut Workspace,
    loaded: &Loaded,
    models: &BTreeMap<(Method, usize), (Model, String)>,
    jobs: Vec<HeadJob>,
    summary: &mut Summary,
) -> Result<()> {
    let mut todo = Vec::new();
    for job in jobs {
        let upstream = match job.method {
            Method::ScsEe => loaded.data_key.clone(),
            m => models[&(m, job.dim)].1.clone(),
        };
        let (stage, k) = (job.stage(), head_key(cfg, &job, &upstream));
        if ws.is_done(&stage, &k) {
            summary.skipped.push(stage);
        } else {
            todo.push((job, stage, k));
        }
    }
    let trained: Vec<Vec<u8>> = todo
        .par_iter()
        .map(|(job, _, _)| {
            let enc = models.get(&(job.method, job.dim)).map(|(m, _)| m);
            train_head(cfg, &loaded.corpus, job, enc)
        })
        .collect::<Result<_>>()?;
    for ((job, stage, k), bytes) in todo.into_iter().zip(trained) {
        ws.begin(&stage);
        ws.write(&job.rel(), &bytes, &stage)?;
        ws.finish(&stage, &k)?;
        summary.ran.push(stage);
    }
    Ok(())
}

fn scenario_ids(corpus: &Corpus) -> Vec<(usize, u32)> {
    corpus.scenarios().iter().enumerate().map(|(s, d)| (s, d.spec.scenario_id)).collect()
}

fn embedding_methods(cfg: &ExperimentConfig) -> Vec<Method> {
    cfg.methods.iter().copied().filter(|m| m.has_embedding()).collect()
}

/// Trains the selected embeddings across all scenarios, then one head per
/// (method, trained task, scenario).
pub fn train(cfg: &ExperimentConfig, ws: &mut Workspace) -> Result<Summary> {
    ws.set_command("train");
    let loaded = load_corpus(cfg, ws)?;
    let dim = cfg.train.embed_dim;
    let mut summary = Summary::default();
    let wanted: Vec<_> = embedding_methods(cfg).into_iter().map(|m| (m, dim)).collect();
    let models = ensure_models(cfg, ws, &loaded, &wanted, &mut summary)?;
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for &task in cfg.tasks.iter().filter(|t| t.is_trained()) {
            for (s, id) in scenario_ids(&loaded.corpus) {
                jobs.push(HeadJob { method, dim, task, s, id });
            }
        }
    }
    ensure_heads(cfg, ws, &loaded, &models, jobs, &mut summary)?;
    ws.save()?;
    Ok(summary)
}

/// Columns of the per-scenario metric tables.
pub const TABLE_HEADER: [&str; 9] = ["method", "task", "dim", "MDE", "P95", "TW", "CT", "KS", "RD"];

/// Test-partition chart of one (method, task) on one scenario.
fn chart_for(
    ws: &Workspace,
    corpus: &Corpus,
    s: usize,
    id: u32,
    method: Method,
    task: Task,
    dim: usize,
    encoder: Option<&Model>,
) -> Result<ChartPoints> {
    let (tr, te) = method_inputs(corpus, s, method, encoder)?;
    let job = HeadJob { method, dim, task, s, id };
    match task {
        Task::Pos => ChartPoints::new(predict_batch(&load_model(ws, &job.rel())?, &te)?, CoordinateKind::Metric),
        Task::CcSn => {
            let raw = ChartPoints::new(predict_batch(&load_model(ws, &job.rel())?, &te)?, CoordinateKind::Arbitrary)?;
            normalize_chart(&raw)
        }
        Task::CcPca => {
            let p = PcaProjection::fit(&tr, 2)?;
            normalize_chart(&ChartPoints::new(p.project(&te)?, CoordinateKind::Arbitrary)?)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn as_pairs(m: &Matrix) -> Vec<[f64; 2]> {
    m.iter_rows().map(|r| [r[0], r[1]]).collect()
}

fn eval_scenario(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    corpus: &Corpus,
    encoders: &BTreeMap<Method, Model>,
    s: usize,
    id: u32,
) -> Result<Files> {
    let dim = cfg.train.embed_dim;
    let split = corpus.split(s);
    let data = corpus.scenario(s);
    let truth = corpus.positions(s, &split.test);
    let truth_pts = as_pairs(&truth);
    let shade = svg::shade_by_first(&truth_pts);
    let timestamps: Vec<f64> = split.test.iter().map(|&i| data.timestamps[i]).collect();
    let eval = cfg.eval_config();
    let mut files = Vec::new();
    files.push((
        format!("plots/truth_s{id}.svg"),
        svg::scatter(&format!("{} ground truth", data.spec.name), &truth_pts, &shade).into_bytes(),
    ));
    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(TABLE_HEADER).map_err(csv_err)?;
    for &method in &cfg.methods {
        for &task in &cfg.tasks {
            let chart = chart_for(ws, corpus, s, id, method, task, dim, encoders.get(&method))?;
            let r: MetricReport = evaluate_all(&chart, &truth, &eval)?;
            let dim_cell = if method.has_embedding() { dim.to_string() } else { String::new() };
            table
                .write_record([
                    method.name().to_string(),
                    task.name().to_string(),
                    dim_cell,
                    fmt_opt(r.mde_m),
                    fmt_opt(r.p95_m),
                    r.tw.to_string(),
                    r.ct.to_string(),
                    r.ks.to_string(),
                    r.rd.to_string(),
                ])
                .map_err(csv_err)?;
            let mut buf = Vec::new();
            write_chart_csv(&mut buf, &chart, &split.test, &timestamps, Some(&truth))?;
            files.push((format!("charts/{method}_{task}_s{id}.csv"), buf));
            let title = format!("{} {method} {task}", data.spec.name);
            files.push((
                format!("plots/{method}_{task}_s{id}.svg"),
                svg::scatter(&title, &as_pairs(&chart.points), &shade).into_bytes(),
            ));
        }
    }
    files.push((format!("tables/scenario_{id}.csv"), table.into_inner().map_err(|e| Error::Io(e.into_error()))?));
    Ok(files)
}

/// Metric tables, chart exports and scatter plots for every scenario.
pub fn eval(cfg: &ExperimentConfig, ws: &mut Workspace) -> Result<Summary> {
    ws.set_command("eval");
    let loaded = load_corpus(cfg, ws)?;
    let dim = cfg.train.embed_dim;
    let mut encoders = BTreeMap::new();
    for m in embedding_methods(cfg) {
        encoders.insert(m, load_model(ws, &model_rel(m, dim))?);
    }
    let ids = scenario_ids(&loaded.corpus);
    let ws_ref: &Workspace = ws;
    let outputs: Vec<Files> = ids
        .par_iter()
        .map(|&(s, id)| eval_scenario(cfg, ws_ref, &loaded.corpus, &encoders, s, id))
        .collect::<Result<_>>()?;
    let mut summary = Summary::default();
    for ((_, id), files) in ids.into_iter().zip(outputs) {
        let stage = format!("eval/s{id}");
        ws.begin(&stage);
        for (rel, bytes) in files {
            ws.write(&rel, &bytes, &stage)?;
        }
        ws.finish(&stage, "")?;
        summary.ran.push(stage);
    }
    ws.save()?;
    Ok(summary)
}

/// Columns of the sweep tables.
pub const SWEEP_HEADER: [&str; 4] = ["method", "embed_dim", "MDE", "P95"];

/// Retrains embedding and positioning head for every `D′` in the grid and
/// records test MDE per scenario. The end-to-end baseline has no `D′`; its
/// single result is repeated on every row as a reference line.
pub fn sweep(cfg: &ExperimentConfig, ws: &mut Workspace) -> Result<Summary> {
    ws.set_command("sweep");
    if cfg.embed_dims.is_empty() {
        return Err(Error::Config("sweep needs a nonempty embed_dims".into()));
    }
    let loaded = load_corpus(cfg, ws)?;
    let mut summary = Summary::default();
    let wanted: Vec<_> = embedding_methods(cfg)
        .into_iter()
        .flat_map(|m| cfg.embed_dims.iter().map(move |&d| (m, d)))
        .collect();
    let models = ensure_models(cfg, ws, &loaded, &wanted, &mut summary)?;
    let ids = scenario_ids(&loaded.corpus);
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        let dims = if method.has_embedding() { cfg.embed_dims.clone() } else { vec![cfg.train.embed_dim] };
        for dim in dims {
            for &(s, id) in &ids {
                jobs.push(HeadJob { method, dim, task: Task::Pos, s, id });
            }
        }
    }
    ensure_heads(cfg, ws, &loaded, &models, jobs, &mut summary)?;

    let eval = cfg.eval_config();
    let ws_ref: &Workspace = ws;
    let outputs: Vec<Files> = ids
        .par_iter()
        .map(|&(s, id)| {
            let truth = loaded.corpus.positions(s, &loaded.corpus.split(s).test);
            let mut table = csv::Writer::from_writer(Vec::new());
            table.write_record(SWEEP_HEADER).map_err(csv_err)?;
            let mut series = Vec::new();
            for &method in &cfg.methods {
                let mut points = Vec::new();
                let reference = if method.has_embedding() {
                    None
                } else {
                    let c = chart_for(ws_ref, &loaded.corpus, s, id, method, Task::Pos, cfg.train.embed_dim, None)?;
                    Some(evaluate_all(&c, &truth, &eval)?)
                };
                for &dim in &cfg.embed_dims {
                    let r = match &reference {
                        Some(r) => r.clone(),
                        None => {
                            let enc = &models[&(method, dim)].0;
                            let c = chart_for(ws_ref, &loaded.corpus, s, id, method, Task::Pos, dim, Some(enc))?;
                            evaluate_all(&c, &truth, &eval)?
                        }
                    };
                    let mde = r.mde_m.expect("metric chart");
                    table
                        .write_record([method.name().to_string(), dim.to_string(), mde.to_string(), fmt_opt(r.p95_m)])
                        .map_err(csv_err)?;
                    points.push((dim as f64, mde));
                }
                series.push((method.name().to_string(), points));
            }
            let name = &loaded.corpus.scenario(s).spec.name;
            let plot = svg::lines(&format!("{name}: test MDE vs embedding size"), "D'", "MDE [m]", &series);
            Ok(vec![
                (format!("sweep/sweep_s{id}.csv"), table.into_inner().map_err(|e| Error::Io(e.into_error()))?),
                (format!("sweep/sweep_s{id}.svg"), plot.into_bytes()),
            ])
        })
        .collect::<Result<_>>()?;
    for ((_, id), files) in ids.into_iter().zip(outputs) {
        let stage = format!("sweep/s{id}");
        ws.begin(&stage);
        for (rel, bytes) in files {
            ws.write(&rel, &bytes, &stage)?;
        }
        ws.finish(&stage, "")?;
        summary.ran.push(stage);
    }
    ws.save()?;
    Ok(summary)
}

/// `generate`, `train`, `eval` and, when a grid is configured, `sweep`.
pub fn run(cfg: &ExperimentConfig, ws: &mut Workspace) -> Result<Summary> {
    let mut summary = generate(cfg, ws)?;
    summary.merge(train(cfg, ws)?);
    summary.merge(eval(cfg, ws)?);
    if !cfg.embed_dims.is_empty() {
        summary.merge(sweep(cfg, ws)?);
    }
    Ok(summary)
}
