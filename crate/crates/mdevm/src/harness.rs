//! Config-driven experiment runner: expands a (function × scheme × mode ×
//! N_P × D) matrix into seeded runs, shards them over a worker pool, and
//! persists everything as a replayable archive.
//!
//! # Archive layout
//!
//! ```text
//! out/
//!   manifest.json            config snapshot, code version, per-cell run
//!                            summaries and seeds
//!   cells/<cell_id>/run_000.csv   one trajectory per run with columns
//!                            nfc,best_value_so_far,centroid_diversity,pairwise_diversity
//! ```
//!
//! Cell ids look like `sphere_best1_vrmf_np5_d10`; stripping the leading
//! function name gives the cell *family* (`best1_vrmf_np5_d10`) used to
//! compare one algorithm configuration across all functions.
//!
//! Per-run seeds derive from `hash(master_seed, cell_id, run_index)` using
//! integer mixing only, so archives are byte-identical across platforms and
//! across serial/parallel execution. Reports (`emit_curves`, `compare`) are
//! pure functions of the archive.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::{self, BenchmarkFunction};
use crate::engine::{self, GenerationSample, RunConfig, Termination, TerminationCriteria};
use crate::error::{Error, Result};
use crate::mutation::{FactorMode, MutationConfig, MutationScheme};
use crate::stats::{self, ComparisonReport};

fn default_cr() -> f64 {
    0.9
}

fn default_evtr() -> f64 {
    1e-8
}

fn default_nfc_max_multiplier() -> u64 {
    1000
}

fn default_n_run() -> usize {
    30
}

fn default_workers() -> usize {
    1
}

fn default_cmf_value() -> f64 {
    0.9
}

fn default_factor_range() -> (f64, f64) {
    (0.1, 1.5)
}

/// Termination settings shared by every cell; the budget scales with the
/// problem dimension as `nfc_max = nfc_max_multiplier * D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminationSpec {
    #[serde(default = "default_evtr")]
    pub evtr: f64,
    #[serde(default = "default_nfc_max_multiplier")]
    pub nfc_max_multiplier: u64,
}

impl Default for TerminationSpec {
    fn default() -> Self {
        Self {
            evtr: default_evtr(),
            nfc_max_multiplier: default_nfc_max_multiplier(),
        }
    }
}

/// The experiment matrix. Unknown JSON keys are rejected; scalar settings
/// default to the standard protocol (Cr 0.9, budget 1000·D calls, error
/// tolerance 1e-8, 30 runs, constant factor 0.9, random factor range
/// [0.1, 1.5]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub functions: Vec<String>,
    pub schemes: Vec<MutationScheme>,
    /// Factor modes by name: `cmf`, `srmf`, `vrmf`.
    pub modes: Vec<String>,
    pub n_p: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default = "default_cr")]
    pub cr: f64,
    #[serde(default)]
    pub termination: TerminationSpec,
    #[serde(default = "default_n_run")]
    pub n_run: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Constant factor used by `cmf` cells.
    #[serde(default = "default_cmf_value")]
    pub cmf_value: f64,
    /// Uniform range used by `srmf`/`vrmf` cells.
    #[serde(default = "default_factor_range")]
    pub factor_range: (f64, f64),
    /// Reuse one factor draw across both difference terms of two-term
    /// schemes.
    #[serde(default)]
    pub shared_factor_draws: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, empty) in [
            ("functions", self.functions.is_empty()),
            ("schemes", self.schemes.is_empty()),
            ("modes", self.modes.is_empty()),
            ("n_p", self.n_p.is_empty()),
            ("d", self.d.is_empty()),
        ] {
            if empty {
                return Err(Error::InvalidConfig(format!("{field} must not be empty")));
            }
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::InvalidConfig(format!(
                "cr must lie in [0, 1], got {}",
                self.cr
            )));
        }
        if self.n_run == 0 || self.workers == 0 {
            return Err(Error::InvalidConfig(
                "n_run and workers must be at least 1".into(),
            ));
        }
        if self.termination.evtr < 0.0 || self.termination.nfc_max_multiplier == 0 {
            return Err(Error::InvalidConfig(
                "termination needs evtr >= 0 and nfc_max_multiplier >= 1".into(),
            ));
        }
        for mode in &self.modes {
            FactorMode::from_name(mode, self.cmf_value, self.factor_range)?;
        }
        for &scheme in &self.schemes {
            for &n_p in &self.n_p {
                scheme.require_population(n_p)?;
            }
        }
        for &d in &self.d {
            if d == 0 {
                return Err(Error::InvalidConfig("d entries must be at least 1".into()));
            }
        }
        for name in &self.functions {
            benchmarks::by_name(name, 1, 0).map(|_| ())?;
        }
        Ok(())
    }

    /// Cells in deterministic declaration order: functions, then schemes,
    /// modes, population sizes, dimensions.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for function in &self.functions {
            for &scheme in &self.schemes {
                for mode in &self.modes {
                    for &n_p in &self.n_p {
                        for &d in &self.d {
                            cells.push(Cell {
                                function: function.clone(),
                                scheme,
                                mode: mode.clone(),
                                n_p,
                                d,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}

/// One point of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub function: String,
    pub scheme: MutationScheme,
    pub mode: String,
    pub n_p: usize,
    pub d: usize,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("{}_{}", self.function, self.family())
    }

    /// The cell id without its function: one algorithm configuration.
    pub fn family(&self) -> String {
        format!("{}_{}_np{}_d{}", self.scheme.id(), self.mode, self.n_p, self.d)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Platform-stable seed for one (cell, run) task.
pub fn derive_seed(master_seed: u64, cell_id: &str, run_index: u64) -> u64 {
    let mixed = splitmix64(master_seed ^ fnv1a64(cell_id.as_bytes()));
    splitmix64(mixed ^ run_index)
}

/// Seed for the benchmark shift/rotation data; one per archive so every
/// cell of a dimension sees the same composite instance.
pub fn benchmark_data_seed(master_seed: u64) -> u64 {
    splitmix64(master_seed ^ fnv1a64(b"benchmark-data"))
}

/// Everything the manifest keeps about one finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_index: usize,
    pub seed: u64,
    pub terminated_by: Termination,
    pub generations: usize,
    pub final_nfc: u64,
    pub final_best_value: f64,
    pub final_best_position: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One cell's manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: String,
    #[serde(flatten)]
    pub cell: Cell,
    /// Value to reach: the function's registered optimum.
    pub vtr: f64,
    pub nfc_max: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub runs: Vec<RunSummary>,
}

impl CellRecord {
    pub fn final_errors(&self) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| (r.final_best_value - self.vtr).abs())
            .collect()
    }
}

/// The archive's manifest.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellRecord>,
}

/// A loaded archive: manifest plus lazy access to per-run trajectories.
#[derive(Debug, Clone)]
pub struct Archive {
    root: PathBuf,
    manifest: Manifest,
}

const MANIFEST_NAME: &str = "manifest.json";
const CELLS_DIR: &str = "cells";

fn run_csv_name(run_index: usize) -> String {
    format!("run_{run_index:03}.csv")
}

impl Archive {
    pub fn load(root: &Path) -> Result<Self> {
        let manifest_path = root.join(MANIFEST_NAME);
        if !manifest_path.exists() {
            return Err(Error::Archive(format!(
                "no manifest at {}",
                manifest_path.display()
            )));
        }
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn cell(&self, cell_id: &str) -> Result<&CellRecord> {
        self.manifest
            .cells
            .iter()
            .find(|c| c.id == cell_id)
            .ok_or_else(|| Error::Archive(format!("unknown cell {cell_id:?}")))
    }

    /// Reads one run's trajectory back from its CSV.
    pub fn run_history(&self, cell_id: &str, run_index: usize) -> Result<Vec<GenerationSample>> {
        let path = self
            .root
            .join(CELLS_DIR)
            .join(cell_id)
            .join(run_csv_name(run_index));
        let mut reader = csv::Reader::from_path(&path)?;
        let mut history = Vec::new();
        for row in reader.deserialize() {
            let sample: GenerationSample = row?;
            history.push(sample);
        }
        Ok(history)
    }
}

fn write_history_csv(path: &Path, history: &[GenerationSample]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "nfc",
        "best_value_so_far",
        "centroid_diversity",
        "pairwise_diversity",
    ])?;
    for sample in history {
        writer.write_record([
            sample.nfc.to_string(),
            sample.best_value_so_far.to_string(),
            sample.centroid_diversity.to_string(),
            sample.pairwise_diversity.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn execute_task(
    config: &ExperimentConfig,
    cell: &Cell,
    function: &BenchmarkFunction,
    run_index: usize,
    cell_dir: &Path,
) -> Result<RunSummary> {
    let cell_id = cell.id();
    let seed = derive_seed(config.master_seed, &cell_id, run_index as u64);
    let mode = FactorMode::from_name(&cell.mode, config.cmf_value, config.factor_range)?;
    let mut mutation = MutationConfig::new(cell.scheme, mode);
    mutation.shared_draws = config.shared_factor_draws;
    let run_config = RunConfig {
        mutation,
        crossover_rate: config.cr,
        population_size: cell.n_p,
        termination: TerminationCriteria::new(
            function.optimum_value(),
            config.termination.evtr,
            config.termination.nfc_max_multiplier * cell.d as u64,
        )?,
        seed,
        parallel_eval: false,
    };
    let record = engine::run(&run_config, function.bounds(), function)?;
    write_history_csv(&cell_dir.join(run_csv_name(run_index)), &record.history)?;
    Ok(RunSummary {
        run_index,
        seed,
        terminated_by: record.terminated_by,
        generations: record.generations(),
        final_nfc: record.final_nfc(),
        final_best_value: record.final_best_value(),
        final_best_position: record.final_best.position().to_vec(),
    })
}

/// Outcome of [`run_matrix`]: the written archive plus the failed-cell
/// count (for the CLI's exit code).
#[derive(Debug)]
pub struct MatrixOutcome {
    pub archive: Archive,
    pub failed_cells: usize,
}

/// Executes the full matrix into `out_dir`.
///
/// Workers pick (cell, run) tasks off a queue; each task derives its own
/// seed and writes only its own trajectory file, and the manifest is
/// written once at the end, so archives do not depend on scheduling. Task
/// failures mark their cell `failed` without aborting the rest.
pub fn run_matrix(config: &ExperimentConfig, out_dir: &Path) -> Result<MatrixOutcome> {
    config.validate()?;
    let cells = config.cells();
    let data_seed = benchmark_data_seed(config.master_seed);
    let functions: Vec<BenchmarkFunction> = cells
        .iter()
        .map(|cell| benchmarks::by_name(&cell.function, cell.d, data_seed))
        .collect::<Result<_>>()?;

    fs::create_dir_all(out_dir.join(CELLS_DIR))?;
    for cell in &cells {
        fs::create_dir_all(out_dir.join(CELLS_DIR).join(cell.id()))?;
    }

    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.n_run).map(move |r| (c, r)))
        .collect();
    let run_task = |&(cell_index, run_index): &(usize, usize)| {
        let cell = &cells[cell_index];
        let cell_dir = out_dir.join(CELLS_DIR).join(cell.id());
        execute_task(config, cell, &functions[cell_index], run_index, &cell_dir)
    };

    let results: Vec<Result<RunSummary>> = if config.workers == 1 {
        tasks.iter().map(run_task).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            tasks.par_iter().map(run_task).collect()
        })
    };

    let mut records: Vec<CellRecord> = cells
        .iter()
        .zip(&functions)
        .map(|(cell, function)| CellRecord {
            id: cell.id(),
            cell: cell.clone(),
            vtr: function.optimum_value(),
            nfc_max: config.termination.nfc_max_multiplier * cell.d as u64,
            status: CellStatus::Ok,
            error: None,
            runs: Vec::new(),
        })
        .collect();
    for ((cell_index, _run_index), result) in tasks.iter().zip(results) {
        let record = &mut records[*cell_index];
        match result {
            Ok(summary) => record.runs.push(summary),
            Err(error) => {
                record.status = CellStatus::Failed;
                if record.error.is_none() {
                    record.error = Some(error.to_string());
                }
            }
        }
    }
    let failed_cells = records
        .iter()
        .filter(|r| r.status == CellStatus::Failed)
        .count();

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        cells: records,
    };
    let mut file = fs::File::create(out_dir.join(MANIFEST_NAME))?;
    file.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    file.write_all(b"\n")?;

    Ok(MatrixOutcome {
        archive: Archive {
            root: out_dir.to_path_buf(),
            manifest,
        },
        failed_cells,
    })
}

/// One row of the generation-aligned median curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub nfc: u64,
    pub best_value_so_far_median: f64,
    pub best_value_so_far_iqr: f64,
    pub c_d_median: f64,
    pub p_d_median: f64,
}

/// Linear-interpolation quantile over a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let position = q * (sorted.len() - 1) as f64;
    let low = position.floor() as usize;
    let high = position.ceil() as usize;
    if low == high {
        sorted[low]
    } else {
        sorted[low] + (position - low as f64) * (sorted[high] - sorted[low])
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    quantile(values, 0.5)
}

/// Median/IQR curves of a cell, aligned by generation. Runs that stopped
/// early carry their final sample forward, so the emitted best-so-far
/// median stays non-increasing; the row count equals the longest run.
pub fn emit_curves(archive: &Archive, cell_id: &str) -> Result<Vec<CurveRow>> {
    let cell = archive.cell(cell_id)?;
    if cell.runs.is_empty() {
        return Err(Error::Archive(format!("cell {cell_id:?} has no runs")));
    }
    let histories: Vec<Vec<GenerationSample>> = cell
        .runs
        .iter()
        .map(|run| archive.run_history(cell_id, run.run_index))
        .collect::<Result<_>>()?;
    if histories.iter().any(|h| h.is_empty()) {
        return Err(Error::Archive(format!(
            "cell {cell_id:?} contains an empty trajectory"
        )));
    }
    let longest = histories.iter().map(Vec::len).max().unwrap();
    let n_p = cell.cell.n_p as u64;

    let mut rows = Vec::with_capacity(longest);
    for g in 0..longest {
        let at = |h: &Vec<GenerationSample>| h[g.min(h.len() - 1)];
        let mut best: Vec<f64> = histories.iter().map(|h| at(h).best_value_so_far).collect();
        let mut c_d: Vec<f64> = histories.iter().map(|h| at(h).centroid_diversity).collect();
        let mut p_d: Vec<f64> = histories.iter().map(|h| at(h).pairwise_diversity).collect();
        best.sort_by(f64::total_cmp);
        let iqr = quantile(&best, 0.75) - quantile(&best, 0.25);
        rows.push(CurveRow {
            nfc: (g as u64 + 1) * n_p,
            best_value_so_far_median: quantile(&best, 0.5),
            best_value_so_far_iqr: iqr,
            c_d_median: median(&mut c_d),
            p_d_median: median(&mut p_d),
        });
    }
    Ok(rows)
}

/// Writes curve rows as CSV with the stable column set.
pub fn write_curves_csv<W: std::io::Write>(rows: &[CurveRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "nfc",
        "best_value_so_far_median",
        "best_value_so_far_iqr",
        "c_d_median",
        "p_d_median",
    ])?;
    for row in rows {
        w.write_record([
            row.nfc.to_string(),
            row.best_value_so_far_median.to_string(),
            row.best_value_so_far_iqr.to_string(),
            row.c_d_median.to_string(),
            row.p_d_median.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn family_samples(archive: &Archive, family: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut samples: Vec<(String, Vec<f64>)> = archive
        .manifest()
        .cells
        .iter()
        .filter(|record| record.status == CellStatus::Ok && record.cell.family() == family)
        .map(|record| (record.cell.function.clone(), record.final_errors()))
        .collect();
    if samples.is_empty() {
        return Err(Error::Archive(format!(
            "no completed cells match family {family:?}"
        )));
    }
    samples.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(samples)
}

/// Wilcoxon comparison of two cell families over their shared function set,
/// on final best errors `|BFV - VTR|` per run.
pub fn compare(
    archive: &Archive,
    reference_family: &str,
    opponent_family: &str,
    alpha: f64,
) -> Result<ComparisonReport> {
    let reference = family_samples(archive, reference_family)?;
    let opponent = family_samples(archive, opponent_family)?;
    stats::summarize(
        reference_family,
        &reference,
        opponent_family,
        &opponent,
        alpha,
    )
}
