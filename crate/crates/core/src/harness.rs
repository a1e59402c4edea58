//! Experiment runner, CSV persistence and result aggregation.
//!
//! One experiment is a (problem, ratios, variant) combination run under
//! several seeds. Its directory holds a trace and an archive per run plus a
//! `summary.csv` whose `#` header lines record every setting that shaped the
//! result. Wall-clock times go to a separate `timing.csv` so that everything
//! else is reproducible byte for byte.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{make_problem, sample_reference_front, BenchmarkFamily, BenchmarkSpec, ReferenceFront};
use crate::engine::{ReferenceVectorSet, APD_ALPHA};
use crate::error::{Error, Result};
use crate::optimizer::{run, splitmix64, OptimizerConfig, RunOutcome, Variant, DUPLICATE_TOLERANCE};
use crate::problem::HeterogeneousProblem;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const TIMING_FILE: &str = "timing.csv";

const SUMMARY_HEADER: [&str; 8] = [
    "problem",
    "m",
    "d",
    "variant",
    "runs",
    "mean_igd_plus",
    "std_igd_plus",
    "median_igd_plus",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Benchmark name, e.g. `DTLZ2` or `WFG4`.
    pub problem: String,
    pub m: usize,
    pub d: usize,
    /// WFG position parameters; `None` picks the default.
    pub k: Option<usize>,
    pub ratios: Vec<u32>,
    pub r_thres: u32,
    pub variant: Variant,
    pub fe_max_expensive: usize,
    pub runs: usize,
    /// Master seed; run `k` uses `splitmix64(seed + k)`.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub workers: usize,
    /// Reference-front sample size; `None` means 1000 for m <= 5, else 5000.
    pub reference_points: Option<usize>,
    pub u: usize,
    pub w_max: usize,
    pub initial_size: Option<usize>,
    pub training_cap: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        Self {
            problem: "DTLZ2".into(),
            m: 3,
            d: 10,
            k: None,
            ratios: vec![5, 5, 1],
            r_thres: 1,
            variant: Variant::SbpBo,
            fe_max_expensive: opt.fe_max_expensive,
            runs: 5,
            seed: 0,
            output_dir: PathBuf::from("out"),
            workers: 1,
            reference_points: None,
            u: opt.u,
            w_max: opt.w_max,
            initial_size: None,
            training_cap: None,
        }
    }
}

/// A list of experiments, written as `[[experiment]]` tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn benchmark(&self) -> Result<BenchmarkSpec> {
        let family: BenchmarkFamily = self.problem.parse()?;
        let spec = BenchmarkSpec::new(family, self.m, self.d);
        let spec = match self.k {
            Some(k) => spec.with_k(k),
            None => spec,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.ratios.len() != self.m {
            return Err(Error::Config(format!(
                "{} ratios given for {} objectives",
                self.ratios.len(),
                self.m
            )));
        }
        self.benchmark()?;
        self.optimizer(0).validate(self.d)
    }

    pub fn reference_size(&self) -> usize {
        self.reference_points
            .unwrap_or(if self.m <= 5 { 1000 } else { 5000 })
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        splitmix64(self.seed.wrapping_add(run as u64))
    }

    pub fn optimizer(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            u: self.u,
            w_max: self.w_max,
            fe_max_expensive: self.fe_max_expensive,
            variant: self.variant,
            seed,
            initial_size: self.initial_size,
            training_cap: self.training_cap,
            ..OptimizerConfig::default()
        }
    }

    /// `<problem>_m<m>_<variant>` under the output directory.
    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}_m{}_{}", self.problem.to_ascii_uppercase(), self.m, self.variant))
    }
}

/// Final result of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub final_igd_plus: f64,
    pub iterations: usize,
    pub fe_expensive: usize,
    pub fe_cheap: Vec<usize>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Statistics {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub median: f64,
}

impl Statistics {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Some(Self { mean, std, median })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub directory: PathBuf,
    pub runs: Vec<RunSummary>,
    pub failures: Vec<(usize, String)>,
    pub statistics: Option<Statistics>,
}

impl ExperimentSummary {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn final_values(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_igd_plus).collect()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn csv_writer(path: &Path, comments: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = create(path)?;
    for line in comments {
        writeln!(file, "# {line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-iteration trace. Wall-clock time is left out so traces are
/// reproducible.
pub fn write_trace(path: &Path, outcome: &RunOutcome, cheap_indices: &[usize]) -> Result<()> {
    let mut w = csv_writer(path, &[])?;
    let mut header: Vec<String> = ["itrn", "fe_expensive", "igd_plus", "penalty_min", "penalty_max", "nondominated"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(cheap_indices.iter().map(|i| format!("fe_cheap_f{}", i + 1)));
    w.write_record(&header)?;
    for r in &outcome.trace {
        let mut row = vec![
            r.itrn.to_string(),
            r.fe_expensive.to_string(),
            r.igd_plus.map_or_else(String::new, |v| v.to_string()),
            r.penalty_min.to_string(),
            r.penalty_max.to_string(),
            r.nondominated.to_string(),
        ];
        row.extend(r.fe_cheap.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// Every fully evaluated point with its iteration and non-dominance flag.
pub fn write_archive(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let archive = &outcome.archive;
    let mut w = csv_writer(path, &[])?;
    let (d, m) = archive
        .full
        .first()
        .map_or((0, 0), |(x, f)| (x.len(), f.len()));
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend((1..=m).map(|i| format!("f{i}")));
    header.push("iteration".into());
    header.push("nondominated".into());
    w.write_record(&header)?;
    let mut nd = vec![false; archive.len()];
    for &i in archive.nondominated() {
        nd[i] = true;
    }
    for (i, (x, f)) in archive.full.iter().enumerate() {
        let mut row: Vec<String> = x.iter().chain(f).map(|v| v.to_string()).collect();
        row.push(archive.full_iteration[i].to_string());
        row.push(u8::from(nd[i]).to_string());
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// Settings recorded as `#` lines at the top of the summary.
pub fn metadata(config: &ExperimentConfig, problem: &HeterogeneousProblem, front: &ReferenceFront) -> Vec<String> {
    let opt = config.optimizer(0);
    let refs = ReferenceVectorSet::for_objectives(config.m);
    let seeds: Vec<String> = (0..config.runs).map(|k| config.run_seed(k).to_string()).collect();
    let ratios: Vec<String> = config.ratios.iter().map(u32::to_string).collect();
    let cheap: Vec<String> = problem.partition().cheap.iter().map(|i| format!("f{}", i + 1)).collect();
    let expensive: Vec<String> = problem.partition().expensive.iter().map(|i| format!("f{}", i + 1)).collect();
    let g = &opt.gp;
    vec![
        format!("hetbo {}", env!("CARGO_PKG_VERSION")),
        format!("problem = {}", config.problem.to_ascii_uppercase()),
        format!("m = {}", config.m),
        format!("d = {}", config.d),
        format!("k = {}", config.benchmark().ok().and_then(|s| s.position_parameters()).map_or("-".into(), |k| k.to_string())),
        format!("ratios = {}", ratios.join(" ")),
        format!("r_thres = {}", config.r_thres),
        format!("expensive = {}", expensive.join(" ")),
        format!("cheap = {}", cheap.join(" ")),
        format!("variant = {}", config.variant),
        format!("fe_max_expensive = {}", config.fe_max_expensive),
        format!("runs = {}", config.runs),
        format!("master_seed = {}", config.seed),
        format!("run_seeds = {}", seeds.join(" ")),
        format!("initial_size = {}", opt.initial_size_for(config.d)),
        format!("training_cap = {}", opt.training_cap_for(config.d)),
        format!("u = {}", opt.u),
        format!("w_max = {}", opt.w_max),
        format!("reference_vectors = {}", refs.len()),
        format!("population = {}", opt.population.unwrap_or(refs.len())),
        format!("apd_alpha = {APD_ALPHA}"),
        format!("vector_adaptation_every = {}", opt.w_max.div_ceil(2)),
        format!(
            "variation = sbx eta {} p {}; polynomial mutation eta {} p {}",
            opt.variation.eta_c,
            opt.variation.crossover_prob,
            opt.variation.eta_m,
            opt.variation.mutation_prob.map_or("1/d".into(), |p| p.to_string())
        ),
        format!("soea_population = {} tournament = {}", opt.soea.population, opt.soea.tournament),
        format!(
            "gp_initial = restarts {} iterations {}; gp_refit = restarts {} iterations {}",
            g.initial.restarts, g.initial.max_iterations, g.refit.restarts, g.refit.max_iterations
        ),
        format!(
            "gp_nugget = {:e} up to {:e}; length_scale bounds = [{:e}, {:e}]",
            g.initial.nugget, g.initial.max_nugget, g.initial.min_length_scale, g.initial.max_length_scale
        ),
        format!("duplicate_tolerance = {DUPLICATE_TOLERANCE:e}"),
        "loop_guard = fe_expensive capped at fe_max_expensive".into(),
        "indicator = igd_plus with d+(a,z) = sqrt(sum max(a_k - z_k, 0)^2)".into(),
        format!(
            "reference_front = {} points requested {} method {}{}",
            front.points.len(),
            config.reference_size(),
            front.method,
            if front.approximate { " (approximate)" } else { "" }
        ),
    ]
}

fn run_one(
    config: &ExperimentConfig,
    problem: &HeterogeneousProblem,
    front: &ReferenceFront,
    dir: &Path,
    run_index: usize,
) -> Result<RunSummary> {
    let seed = config.run_seed(run_index);
    let start = Instant::now();
    let outcome = run(problem, &config.optimizer(seed), Some(&front.points))?;
    let wall_time = start.elapsed().as_secs_f64();
    write_trace(
        &dir.join(format!("run_{run_index}_trace.csv")),
        &outcome,
        &problem.partition().cheap,
    )?;
    write_archive(&dir.join(format!("run_{run_index}_archive.csv")), &outcome)?;
    let last = outcome.trace.last().ok_or(Error::Empty("run trace"))?;
    Ok(RunSummary {
        run: run_index,
        seed,
        final_igd_plus: last.igd_plus.ok_or(Error::Empty("final indicator"))?,
        iterations: last.itrn,
        fe_expensive: last.fe_expensive,
        fe_cheap: last.fe_cheap.clone(),
        wall_time,
    })
}

/// Runs every seed of `config` and writes its directory. Runs that fail are
/// listed in the returned summary; the others are still written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let spec = config.benchmark()?;
    let problem = make_problem(&spec, config.ratios.clone(), config.r_thres)?;
    let front = sample_reference_front(&spec, config.reference_size())?;
    let dir = config.experiment_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let job = |k: usize| {
        log::info!("{} run {k} started", dir.display());
        let result = run_one(config, &problem, &front, &dir, k);
        match &result {
            Ok(r) => log::info!("{} run {k}: igd+ {:.4e} in {:.1}s", dir.display(), r.final_igd_plus, r.wall_time),
            Err(e) => log::error!("{} run {k} failed: {e}", dir.display()),
        }
        result
    };
    let results: Vec<Result<RunSummary>> = if config.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| (0..config.runs).into_par_iter().map(job).collect())
    } else {
        (0..config.runs).map(job).collect()
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => runs.push(s),
            Err(e) => failures.push((k, e.to_string())),
        }
    }
    let summary = ExperimentSummary {
        statistics: Statistics::of(&runs.iter().map(|r| r.final_igd_plus).collect::<Vec<_>>()),
        directory: dir.clone(),
        runs,
        failures,
    };
    write_summary(config, &problem, &front, &summary)?;
    Ok(summary)
}

fn write_summary(
    config: &ExperimentConfig,
    problem: &HeterogeneousProblem,
    front: &ReferenceFront,
    summary: &ExperimentSummary,
) -> Result<()> {
    let dir = &summary.directory;
    let mut comments = metadata(config, problem, front);
    for (k, reason) in &summary.failures {
        comments.push(format!("failed run {k}: {reason}"));
    }
    let path = dir.join(SUMMARY_FILE);
    let mut w = csv_writer(&path, &comments)?;
    w.write_record(SUMMARY_HEADER)?;
    if let Some(s) = summary.statistics {
        w.write_record([
            config.problem.to_ascii_uppercase(),
            config.m.to_string(),
            config.d.to_string(),
            config.variant.to_string(),
            summary.runs.len().to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.median.to_string(),
        ])?;
    }
    finish(w, &path)?;

    let path = dir.join(RUNS_FILE);
    let mut w = csv_writer(&path, &[])?;
    let mut header: Vec<String> = ["run", "seed", "final_igd_plus", "iterations", "fe_expensive"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(problem.partition().cheap.iter().map(|i| format!("fe_cheap_f{}", i + 1)));
    w.write_record(&header)?;
    for r in &summary.runs {
        let mut row = vec![
            r.run.to_string(),
            r.seed.to_string(),
            r.final_igd_plus.to_string(),
            r.iterations.to_string(),
            r.fe_expensive.to_string(),
        ];
        row.extend(r.fe_cheap.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    finish(w, &path)?;

    let path = dir.join(TIMING_FILE);
    let mut w = csv_writer(&path, &[])?;
    w.write_record(["run", "seed", "wall_time_s"])?;
    for r in &summary.runs {
        w.write_record([r.run.to_string(), r.seed.to_string(), format!("{:.3}", r.wall_time)])?;
    }
    finish(w, &path)
}

/// One row of a summary file.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub m: usize,
    pub d: usize,
    pub variant: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

fn schema(path: &Path, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let header = reader.headers().map_err(|e| schema(path, e.to_string()))?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(schema(path, format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| schema(path, e.to_string()))?;
        let int = |i: usize| {
            record[i]
                .parse::<usize>()
                .map_err(|_| schema(path, format!("column {} is not an integer: `{}`", SUMMARY_HEADER[i], &record[i])))
        };
        let real = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| schema(path, format!("column {} is not a number: `{}`", SUMMARY_HEADER[i], &record[i])))
        };
        rows.push(SummaryRow {
            problem: record[0].to_string(),
            m: int(1)?,
            d: int(2)?,
            variant: record[3].to_string(),
            runs: int(4)?,
            mean: real(5)?,
            std: real(6)?,
            median: real(7)?,
        });
    }
    Ok(rows)
}

/// Problem-by-variant comparison of mean (std) IGD+.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub variants: Vec<String>,
    /// Keyed by (problem, m); one optional cell per variant.
    pub rows: Vec<((String, usize), Vec<Option<SummaryRow>>)>,
}

fn collect_summaries(dir: &Path) -> Result<Vec<PathBuf>> {
    let direct = dir.join(SUMMARY_FILE);
    if direct.is_file() {
        return Ok(vec![direct]);
    }
    let mut found = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path().join(SUMMARY_FILE);
        if path.is_file() {
            found.push(path);
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(schema(dir, "no summary.csv found"));
    }
    Ok(found)
}

/// Aggregates the summaries found in `dirs`, each either an experiment
/// directory or a directory of experiment directories.
pub fn report(dirs: &[PathBuf]) -> Result<ComparisonTable> {
    if dirs.is_empty() {
        return Err(Error::Empty("result directories"));
    }
    let mut cells: BTreeMap<(String, usize), BTreeMap<String, SummaryRow>> = BTreeMap::new();
    let mut variants: Vec<String> = Vec::new();
    for dir in dirs {
        for path in collect_summaries(dir)? {
            for row in read_summary(&path)? {
                if !variants.contains(&row.variant) {
                    variants.push(row.variant.clone());
                }
                cells
                    .entry((row.problem.clone(), row.m))
                    .or_default()
                    .insert(row.variant.clone(), row);
            }
        }
    }
    let order = |v: &String| {
        Variant::ALL
            .iter()
            .position(|k| k.as_str() == v)
            .unwrap_or(Variant::ALL.len())
    };
    variants.sort_by_key(order);
    let rows = cells
        .into_iter()
        .map(|(key, by_variant)| {
            let row = variants.iter().map(|v| by_variant.get(v).cloned()).collect();
            (key, row)
        })
        .collect();
    Ok(ComparisonTable { variants, rows })
}

impl ComparisonTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["problem".to_string(), "m".to_string()];
        h.extend(self.variants.iter().cloned());
        h
    }

    fn body(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|((problem, m), cells)| {
                let mut line = vec![problem.clone(), m.to_string()];
                line.extend(cells.iter().map(|c| {
                    c.as_ref()
                        .map_or_else(|| "-".to_string(), |s| format!("{:.3e} ({:.2e})", s.mean, s.std))
                }));
                line
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.header())?;
        for line in self.body() {
            w.write_record(&line)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_text(&self) -> String {
        let mut lines = vec![self.header()];
        lines.extend(self.body());
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &lines {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
