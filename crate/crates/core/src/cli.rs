//! Batch experiment runner and report emitter behind the `iga` binary.
//!
//! `bench` output layout:
//!
//! ```text
//! <out>/config.json                               resolved configuration
//! <out>/summary.csv, <out>/summary.md             one row per (function, algorithm)
//! <out>/runs/<function>/<ALG>/runs.csv            run_index,seed,final_best_value,best_x,best_y,evaluations
//! <out>/runs/<function>/<ALG>/run_<k>_convergence.csv   generation,best_of_generation,best_so_far
//! <out>/runs/<function>/<ALG>/run_<k>_population.csv    x,y,run_index
//! ```
//!
//! `report` rebuilds both summary files from the per-run CSVs alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::idx::{encode_pgm, load_idx_images, load_idx_labels, Image};
use crate::attack::{run_attack, AttackParams, AttackRecord, ClassifierModel, InitMode};
use crate::benchmarks::{make_problem, TestFunctionId};
use crate::error::{Error, Result};
use crate::optimizers::{run_algorithm, Algorithm, AlgorithmParams, RunRecord};
use crate::parallel::{self, Execution};
use crate::rng::derive_seed;
use crate::stats::{density, success_rate, summarize, t_test, Significance, SUCCESS_PRECISION};

/// Built-in default comparison grid.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

fn default_repeats() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub functions: Vec<TestFunctionId>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub params: AlgorithmParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("bundled config is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `name_or_path` is `default` (alias `table2`) or a JSON file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if name_or_path == "default" || name_or_path == "table2" {
            return Ok(Self::defaults());
        }
        let text = fs::read_to_string(name_or_path).map_err(|e| Error::Config(format!("{name_or_path}: {e}")))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{name_or_path}: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.algorithms.is_empty() || self.functions.is_empty() {
            return Err(Error::Config(
                "at least one algorithm and one function are required".into(),
            ));
        }
        self.params.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn run_seed(&self, run_index: usize) -> u64 {
        derive_seed(self.master_seed, run_index as u64)
    }

    fn iterations(&self, algorithm: Algorithm) -> usize {
        match algorithm {
            Algorithm::Iga => self.params.iga.iterations,
            Algorithm::Sga => self.params.sga.iterations,
            Algorithm::Pso => self.params.pso.iterations,
            Algorithm::Gwo => self.params.gwo.iterations,
        }
    }
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub function: TestFunctionId,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub prob_015: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// Against the IGA sample of the same function; absent without IGA runs.
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub sign: Option<String>,
    pub density_population: f64,
    pub density_best: f64,
}

/// Everything the summary needs from one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunDigest {
    pub final_best_value: f64,
    pub final_best_position: Vec<f64>,
    pub final_population: Vec<Vec<f64>>,
}

impl From<&RunRecord> for RunDigest {
    fn from(r: &RunRecord) -> Self {
        Self {
            final_best_value: r.final_best_value,
            final_best_position: r.final_best_position.clone(),
            final_population: r.final_population.clone(),
        }
    }
}

pub fn summarize_grid(
    functions: &[TestFunctionId],
    algorithms: &[Algorithm],
    runs: &BTreeMap<(TestFunctionId, Algorithm), Vec<RunDigest>>,
) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for &function in functions {
        let problem = make_problem(function);
        let finals = |alg| -> Option<Vec<f64>> {
            runs.get(&(function, alg))
                .map(|v| v.iter().map(|d| d.final_best_value).collect())
        };
        let reference = finals(Algorithm::Iga);
        for &algorithm in algorithms {
            let digests = runs
                .get(&(function, algorithm))
                .ok_or_else(|| Error::Invariant(format!("no runs for {function}/{algorithm}")))?;
            let values = finals(algorithm).unwrap_or_default();
            let s = summarize(&values)?;
            let (t, p, sign) = match &reference {
                Some(r) if values.len() >= 2 && r.len() >= 2 => {
                    let test = t_test(&values, r)?;
                    let ref_mean = r.iter().sum::<f64>() / r.len() as f64;
                    let sign = Significance::classify(&test, s.mean, ref_mean).symbol().to_string();
                    (Some(test.t), Some(test.p), Some(sign))
                }
                _ => (None, None, None),
            };
            let pooled: Vec<Vec<f64>> = digests
                .iter()
                .flat_map(|d| d.final_population.iter().cloned())
                .collect();
            let bests: Vec<Vec<f64>> = digests.iter().map(|d| d.final_best_position.clone()).collect();
            rows.push(SummaryRow {
                function,
                algorithm,
                runs: values.len(),
                prob_015: success_rate(&values, problem.global_minimum_value, SUCCESS_PRECISION)?,
                min: s.min,
                max: s.max,
                mean: s.mean,
                median: s.median,
                std: s.std,
                t,
                p,
                sign,
                density_population: density(&pooled, &problem.global_minimizer)?,
                density_best: density(&bests, &problem.global_minimizer)?,
            });
        }
    }
    Ok(rows)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_bytes<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| Error::io(path, e.into_error()))
}

fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    write_atomic(path, &csv_bytes(path, rows)?)
}

fn read_csv<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<D>> {
    let wrap = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    r.deserialize()
        .collect::<std::result::Result<Vec<D>, _>>()
        .map_err(wrap)
}

#[derive(Debug, Serialize, Deserialize)]
struct ConvergenceRow {
    generation: usize,
    best_of_generation: f64,
    best_so_far: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PopulationRow {
    x: f64,
    y: f64,
    run_index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRow {
    run_index: usize,
    seed: u64,
    final_best_value: f64,
    best_x: f64,
    best_y: f64,
    evaluations: u64,
}

fn run_dir(out: &Path, function: TestFunctionId, algorithm: Algorithm) -> PathBuf {
    out.join("runs").join(function.name()).join(algorithm.name())
}

fn convergence_rows(r: &RunRecord) -> impl Iterator<Item = ConvergenceRow> + '_ {
    r.best_of_generation.iter().zip(&r.best_so_far_curve).enumerate().map(
        |(generation, (&best_of_generation, &best_so_far))| ConvergenceRow {
            generation,
            best_of_generation,
            best_so_far,
        },
    )
}

fn summary_markdown(rows: &[SummaryRow]) -> String {
    let fmt = |v: f64| format!("{v:.2E}");
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let mut md = String::from(
        "| Fun | Alg | Prob(.15) | Min | Max | Mean | Median | Std | T-test | +/=/- | Density (pop) | Density (best) |\n\
         |---|---|---|---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.function,
            r.algorithm,
            r.prob_015,
            fmt(r.min),
            fmt(r.max),
            fmt(r.mean),
            fmt(r.median),
            fmt(r.std),
            opt(r.p),
            r.sign.as_deref().unwrap_or(""),
            fmt(r.density_population),
            fmt(r.density_best),
        )
        .expect("writing to a String cannot fail");
    }
    md
}

fn write_summary(out: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(&out.join("summary.csv"), rows)?;
    write_atomic(&out.join("summary.md"), summary_markdown(rows).as_bytes())
}

/// Runs the configured grid and writes every artifact under `out`.
pub fn cmd_bench(config: &ExperimentConfig, out: &Path, exec: Execution) -> Result<Vec<SummaryRow>> {
    config.validate()?;
    let jobs: Vec<(TestFunctionId, Algorithm, usize)> = config
        .functions
        .iter()
        .flat_map(|&f| {
            config
                .algorithms
                .iter()
                .flat_map(move |&a| (0..config.repeats).map(move |k| (f, a, k)))
        })
        .collect();
    let records = parallel::map(exec, &jobs, |&(f, a, k)| {
        let problem = make_problem(f);
        let record = run_algorithm(a, &problem, &config.params, config.run_seed(k))?;
        record.check(config.iterations(a), &problem.domain)?;
        Ok(record)
    })
    .into_iter()
    .collect::<Result<Vec<RunRecord>>>()?;

    let mut grouped: BTreeMap<(TestFunctionId, Algorithm), Vec<(usize, &RunRecord)>> = BTreeMap::new();
    for (&(f, a, k), r) in jobs.iter().zip(&records) {
        grouped.entry((f, a)).or_default().push((k, r));
    }

    let mut resolved = config.clone();
    resolved.output_dir = None;
    let config_json = serde_json::to_string_pretty(&resolved).expect("config serializes") + "\n";
    write_atomic(&out.join("config.json"), config_json.as_bytes())?;

    let mut digests = BTreeMap::new();
    for (&(f, a), runs) in &grouped {
        let dir = run_dir(out, f, a);
        for &(k, r) in runs {
            write_csv(&dir.join(format!("run_{k}_convergence.csv")), convergence_rows(r))?;
            write_csv(
                &dir.join(format!("run_{k}_population.csv")),
                r.final_population.iter().map(|p| PopulationRow {
                    x: p[0],
                    y: p[1],
                    run_index: k,
                }),
            )?;
        }
        write_csv(
            &dir.join("runs.csv"),
            runs.iter().map(|&(k, r)| RunRow {
                run_index: k,
                seed: r.seed,
                final_best_value: r.final_best_value,
                best_x: r.final_best_position[0],
                best_y: r.final_best_position[1],
                evaluations: r.evaluation_count,
            }),
        )?;
        digests.insert((f, a), runs.iter().map(|&(_, r)| RunDigest::from(r)).collect());
    }

    let rows = summarize_grid(&config.functions, &config.algorithms, &digests)?;
    write_summary(out, &rows)?;
    Ok(rows)
}

/// Rebuilds the summary from the per-run CSVs of a `bench` output directory.
pub fn cmd_report(dir: &Path) -> Result<Vec<SummaryRow>> {
    let config_path = dir.join("config.json");
    let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
    let config = ExperimentConfig::parse(&text)?;
    let mut digests = BTreeMap::new();
    for &f in &config.functions {
        for &a in &config.algorithms {
            let rd = run_dir(dir, f, a);
            let runs: Vec<RunRow> = read_csv(&rd.join("runs.csv"))?;
            let mut list = Vec::with_capacity(runs.len());
            for run in runs {
                let conv_path = rd.join(format!("run_{}_convergence.csv", run.run_index));
                let conv: Vec<ConvergenceRow> = read_csv(&conv_path)?;
                let last = conv.last().ok_or_else(|| Error::Format {
                    path: conv_path.clone(),
                    offset: 0,
                    message: "empty convergence file".into(),
                })?;
                if last.best_so_far != run.final_best_value {
                    return Err(Error::Invariant(format!(
                        "{}: final best {} disagrees with runs.csv value {}",
                        conv_path.display(),
                        last.best_so_far,
                        run.final_best_value
                    )));
                }
                let pop: Vec<PopulationRow> = read_csv(&rd.join(format!("run_{}_population.csv", run.run_index)))?;
                list.push(RunDigest {
                    final_best_value: last.best_so_far,
                    final_best_position: vec![run.best_x, run.best_y],
                    final_population: pop.iter().map(|p| vec![p.x, p.y]).collect(),
                });
            }
            digests.insert((f, a), list);
        }
    }
    let rows = summarize_grid(&config.functions, &config.algorithms, &digests)?;
    write_summary(dir, &rows)?;
    Ok(rows)
}

/// Inputs of the `attack` command.
#[derive(Clone, Debug)]
pub struct AttackCommand {
    pub model: PathBuf,
    pub label: usize,
    pub iterations: usize,
    pub init: InitMode,
    pub dataset: Option<PathBuf>,
    /// Optional IDX label file; keeps only dataset images of the target label.
    pub dataset_labels: Option<PathBuf>,
    pub threshold: u8,
    pub seed: u64,
    pub population_size: usize,
    pub out: PathBuf,
    pub execution: Execution,
}

/// Label, initialisation, iterations and confidence of one attack run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackMetadata {
    pub label: usize,
    pub initialize: InitMode,
    pub iteration: usize,
    pub confidence: f64,
    pub confidences: Vec<f64>,
    pub seed: u64,
    pub population_size: usize,
    pub base_mutation_rate: f64,
    pub threshold: u8,
    pub oracle_queries: u64,
    pub seed_images: usize,
}

fn load_seed_images(cmd: &AttackCommand) -> Result<Option<Vec<Image>>> {
    let Some(path) = &cmd.dataset else {
        return Ok(None);
    };
    let mut images = load_idx_images(path)?;
    if let Some(lp) = &cmd.dataset_labels {
        let labels = load_idx_labels(lp)?;
        if labels.len() != images.len() {
            return Err(Error::Format {
                path: lp.clone(),
                offset: 4,
                message: format!("{} labels for {} images", labels.len(), images.len()),
            });
        }
        images = images
            .into_iter()
            .zip(labels)
            .filter(|(_, l)| *l as usize == cmd.label)
            .map(|(img, _)| img)
            .collect();
    }
    Ok(Some(images))
}

pub fn cmd_attack(cmd: &AttackCommand) -> Result<(AttackRecord, AttackMetadata)> {
    if cmd.init == InitMode::Dataset && cmd.dataset.is_none() {
        return Err(Error::Config("--init dataset requires --dataset".into()));
    }
    if cmd.init == InitMode::Random && cmd.dataset_labels.is_some() && cmd.dataset.is_none() {
        return Err(Error::Config("--labels requires --dataset".into()));
    }
    let params = AttackParams {
        population_size: cmd.population_size,
        iterations: cmd.iterations,
        target_label: cmd.label,
        base_mutation_rate: 0.025,
        init: cmd.init,
        threshold: cmd.threshold,
        execution: cmd.execution,
    };
    params.validate().map_err(|e| Error::Config(e.to_string()))?;
    let model = ClassifierModel::load(&cmd.model)?;
    let images = load_seed_images(cmd)?;
    if cmd.init == InitMode::Dataset && images.as_ref().is_none_or(|v| v.is_empty()) {
        return Err(Error::Config("dataset contains no usable seed images".into()));
    }
    let seeds = if cmd.init == InitMode::Dataset {
        images.as_deref()
    } else {
        None
    };
    let record = run_attack(&model, &params, cmd.seed, seeds)?;

    if record.confidence_curve.len() != cmd.iterations
        || record.confidence_curve.windows(2).any(|w| w[1] < w[0])
        || record.oracle_queries != params.expected_queries()
    {
        return Err(Error::Invariant("attack record violates its accounting".into()));
    }

    let meta = AttackMetadata {
        label: cmd.label,
        initialize: cmd.init,
        iteration: cmd.iterations,
        confidence: record.final_confidence,
        confidences: record.final_confidences.clone(),
        seed: cmd.seed,
        population_size: cmd.population_size,
        base_mutation_rate: params.base_mutation_rate,
        threshold: cmd.threshold,
        oracle_queries: record.oracle_queries,
        seed_images: seeds.map_or(0, |s| s.len()),
    };
    let curve_path = cmd.out.join("confidence.csv");
    let curve_bytes = csv_bytes(
        &curve_path,
        record
            .best_of_generation
            .iter()
            .zip(&record.confidence_curve)
            .enumerate()
            .map(|(generation, (&best_of_generation, &best_so_far))| ConvergenceRow {
                generation,
                best_of_generation,
                best_so_far,
            }),
    )?;
    let pgm = encode_pgm(&record.final_image)?;
    let meta_json = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    write_atomic(&cmd.out.join("adversarial.pgm"), &pgm)?;
    write_atomic(&curve_path, &curve_bytes)?;
    write_atomic(&cmd.out.join("metadata.json"), meta_json.as_bytes())?;
    Ok((record, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults() {
        let cfg = ExperimentConfig::defaults();
        assert_eq!(cfg.algorithms, Algorithm::ALL.to_vec());
        assert_eq!(cfg.functions, TestFunctionId::ALL.to_vec());
        assert_eq!(cfg.repeats, 10);
        assert_eq!(cfg.params, AlgorithmParams::default());
        assert_eq!(cfg.params.iga.mutation_rate, 0.025);
        assert_eq!(cfg.params.sga.mutation_rate, 0.2);
        assert_eq!(cfg.params.pso.cognitive, 1.49445);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let bad = r#"{"algorithms": ["IGA", "DE"], "functions": ["sphere"]}"#;
        assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))));
        let bad = r#"{"algorithms": ["IGA"], "functions": ["rosenbrock"]}"#;
        assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))));
        let zero = r#"{"algorithms": ["IGA"], "functions": ["sphere"], "repeats": 0}"#;
        assert!(matches!(ExperimentConfig::parse(zero), Err(Error::Config(_))));
    }

    #[test]
    fn run_seeds_do_not_depend_on_grid() {
        let mut cfg = ExperimentConfig::defaults();
        let before: Vec<u64> = (0..10).map(|k| cfg.run_seed(k)).collect();
        cfg.algorithms.truncate(1);
        assert_eq!(before, (0..10).map(|k| cfg.run_seed(k)).collect::<Vec<_>>());
    }

    #[test]
    fn markdown_has_one_line_per_row() {
        let row = SummaryRow {
            function: TestFunctionId::Sphere,
            algorithm: Algorithm::Iga,
            runs: 2,
            prob_015: 100.0,
            min: 0.0,
            max: 9.31e-8,
            mean: 4.6e-8,
            median: 4.6e-8,
            std: 6.5e-8,
            t: Some(0.0),
            p: Some(1.0),
            sign: Some("=".into()),
            density_population: 0.1,
            density_best: 0.0,
        };
        let md = summary_markdown(&[row.clone(), row]);
        assert_eq!(md.lines().count(), 4);
        assert!(md.contains("9.31E-8"));
    }
}
