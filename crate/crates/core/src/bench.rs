//! Repeated-trial experiments and their CSV/JSON reports.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::GateVocabulary;
use crate::search::{guided_search, run_with_verification, GatePolicy, Outcome, SearchConfig};
use crate::target::TargetStates;

pub const RESULTS_FILE: &str = "results.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub benchmark: String,
    pub trial: usize,
    pub outcome: String,
    /// Quantum cost of the found circuit; empty for failures.
    pub cost: Option<usize>,
    pub restarts: usize,
    pub elapsed_s: f64,
    pub seed: u64,
    #[serde(skip)]
    pub circuit: Option<Circuit>,
}

impl TrialRecord {
    pub fn is_found(&self) -> bool {
        self.outcome == Outcome::Found.as_str()
    }
}

/// Runs `trials` independent verified guided searches, trial `i` seeded with
/// `seed + i`. Records come back in trial order either way.
#[allow(clippy::too_many_arguments)]
pub fn run_trials<P: GatePolicy + ?Sized>(
    name: &str,
    target: &TargetStates,
    policy: &P,
    vocab: &GateVocabulary,
    cfg: &SearchConfig,
    trials: usize,
    seed: u64,
    parallel: bool,
) -> Result<Vec<TrialRecord>> {
    let run = |trial: usize| -> Result<TrialRecord> {
        let trial_seed = seed.wrapping_add(trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let r = run_with_verification(target, cfg, || guided_search(target, policy, vocab, cfg, &mut rng))?;
        Ok(TrialRecord {
            benchmark: name.to_string(),
            trial,
            outcome: r.outcome.as_str().to_string(),
            cost: r.circuit.as_ref().map(Circuit::quantum_cost),
            restarts: r.restarts_used,
            elapsed_s: r.elapsed.as_secs_f64(),
            seed: trial_seed,
            circuit: r.circuit,
        })
    };
    if parallel {
        (0..trials).into_par_iter().map(run).collect()
    } else {
        (0..trials).map(run).collect()
    }
}

/// Per-benchmark statistics. Means and deviations cover successful trials
/// only; deviations are population (divide by N) and left empty with fewer
/// than two successes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub benchmark: String,
    pub trials: usize,
    pub successes: usize,
    pub min_cost: Option<usize>,
    pub mean_elapsed_s: Option<f64>,
    pub std_elapsed_s: Option<f64>,
    pub mean_restarts: Option<f64>,
    pub std_restarts: Option<f64>,
    pub cost_histogram: BTreeMap<usize, usize>,
}

impl BenchSummary {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Groups records by benchmark, in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<BenchSummary> {
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.benchmark.as_str()) {
            names.push(&r.benchmark);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.benchmark == name).collect();
            let found: Vec<&TrialRecord> = rows.iter().copied().filter(|r| r.is_found()).collect();
            let mut cost_histogram = BTreeMap::new();
            for r in &found {
                if let Some(c) = r.cost {
                    *cost_histogram.entry(c).or_insert(0) += 1;
                }
            }
            let times: Vec<f64> = found.iter().map(|r| r.elapsed_s).collect();
            let restarts: Vec<f64> = found.iter().map(|r| r.restarts as f64).collect();
            let (mean_elapsed_s, std_elapsed_s) = mean_std(&times);
            let (mean_restarts, std_restarts) = mean_std(&restarts);
            BenchSummary {
                benchmark: name.to_string(),
                trials: rows.len(),
                successes: found.len(),
                min_cost: cost_histogram.keys().next().copied(),
                mean_elapsed_s,
                std_elapsed_s,
                mean_restarts,
                std_restarts,
                cost_histogram,
            }
        })
        .collect()
}

pub fn write_results_csv<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    benchmark: &'a str,
    cost: usize,
    count: usize,
}

/// One row per (benchmark, cost), sorted by cost within each benchmark.
pub fn write_histogram_csv<W: Write>(summaries: &[BenchSummary], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in summaries {
        for (&cost, &count) in &s.cost_histogram {
            out.serialize(HistogramRow {
                benchmark: &s.benchmark,
                cost,
                count,
            })?;
        }
    }
    if summaries.iter().all(|s| s.cost_histogram.is_empty()) {
        out.write_record(["benchmark", "cost", "count"])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(summaries: &[BenchSummary], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, summaries)?;
    writeln!(w)?;
    Ok(())
}

/// Writes the three report files into `dir`, creating it if needed.
pub fn write_reports(dir: impl AsRef<Path>, records: &[TrialRecord]) -> Result<Vec<BenchSummary>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(Error::at_path(dir))?;
    let create = |name: &str| {
        let path = dir.join(name);
        std::fs::File::create(&path).map_err(Error::at_path(path))
    };
    let summaries = summarize(records);
    write_results_csv(records, create(RESULTS_FILE)?)?;
    write_histogram_csv(&summaries, create(HISTOGRAM_FILE)?)?;
    write_summary_json(&summaries, create(SUMMARY_FILE)?)?;
    Ok(summaries)
}
