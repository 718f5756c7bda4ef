//! Backward synthesis: repeatedly un-apply gates from the target table until
//! the residual is the identity. The un-applied gates, reversed, form the
//! circuit.

use std::time::{Duration, Instant};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::{inverse_of, GateVocabulary};
use crate::state::{circuit_unitary, is_identity_with, OperatorTable, DEFAULT_TOLERANCE};
use crate::target::TargetStates;

/// Anything that scores the vocabulary given a residual table.
pub trait GatePolicy: Sync {
    fn n_qubits(&self) -> usize;
    fn vocab_size(&self) -> usize;
    /// One probability per vocabulary entry.
    fn gate_probabilities(&self, residual: &OperatorTable) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Gates generated per attempt.
    pub max_depth: usize,
    /// Attempts before giving up.
    pub max_restarts: usize,
    pub tolerance: f64,
    /// Probabilities are raised to `1 / temperature` before sampling.
    pub temperature: f64,
    /// Never emit the exact inverse of the previously emitted gate.
    pub guard_inverse: bool,
    /// Accept a residual equal to the identity up to a global phase.
    pub allow_global_phase: bool,
}

pub const DEFAULT_MAX_RESTARTS: usize = 1000;
pub const DEFAULT_DEPTH_UNKNOWN_COST: usize = 30;
pub const MIN_DEFAULT_DEPTH: usize = 12;

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig::for_cost(None)
    }
}

impl SearchConfig {
    /// Depth twice the expected cost (at least 12), or 30 when unknown.
    pub fn for_cost(expected_cost: Option<usize>) -> Self {
        SearchConfig {
            max_depth: default_depth(expected_cost),
            max_restarts: DEFAULT_MAX_RESTARTS,
            tolerance: DEFAULT_TOLERANCE,
            temperature: 1.0,
            guard_inverse: true,
            allow_global_phase: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::Config("max depth must be at least 1".into()));
        }
        if self.max_restarts == 0 {
            return Err(Error::Config("max restarts must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::Config(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

pub fn default_depth(expected_cost: Option<usize>) -> usize {
    match expected_cost {
        Some(c) => (2 * c).max(MIN_DEFAULT_DEPTH),
        None => DEFAULT_DEPTH_UNKNOWN_COST,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Found,
    Exhausted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Found => "found",
            Outcome::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: Outcome,
    /// In execution order. Present iff the outcome is [`Outcome::Found`].
    pub circuit: Option<Circuit>,
    /// Failed attempts before the successful one (all attempts if exhausted).
    pub restarts_used: usize,
    pub elapsed: Duration,
    /// Gates un-applied across all attempts.
    pub gates_evaluated: u64,
}

impl SearchResult {
    pub fn is_found(&self) -> bool {
        self.outcome == Outcome::Found
    }
}

fn check_vocabulary(target: &TargetStates, vocab: &GateVocabulary) -> Result<()> {
    if vocab.n_qubits() != target.n_qubits() {
        return Err(Error::Dimension {
            what: "vocabulary qubit count",
            expected: target.n_qubits(),
            found: vocab.n_qubits(),
        });
    }
    Ok(())
}

/// The shared attempt loop; `choose` picks the next vocabulary index given
/// the residual and the previously emitted gate.
fn backward_search<F>(
    target: &TargetStates,
    vocab: &GateVocabulary,
    cfg: &SearchConfig,
    mut choose: F,
) -> Result<SearchResult>
where
    F: FnMut(&OperatorTable, Option<usize>) -> Result<usize>,
{
    cfg.validate()?;
    check_vocabulary(target, vocab)?;
    let start = Instant::now();
    let mut gates_evaluated = 0u64;
    for attempt in 0..cfg.max_restarts {
        let mut residual = target.table().clone();
        let mut emitted: Vec<usize> = Vec::with_capacity(cfg.max_depth);
        for step in 0..=cfg.max_depth {
            if is_identity_with(&residual, cfg.tolerance, cfg.allow_global_phase) {
                let gates = emitted.iter().rev().map(|&i| vocab.entries()[i]).collect();
                return Ok(SearchResult {
                    outcome: Outcome::Found,
                    circuit: Some(Circuit::from_gates(target.n_qubits(), gates)?),
                    restarts_used: attempt,
                    elapsed: start.elapsed(),
                    gates_evaluated,
                });
            }
            if step == cfg.max_depth {
                break;
            }
            let k = choose(&residual, emitted.last().copied())?;
            residual.apply_inverse(vocab.entries()[k]);
            emitted.push(k);
            gates_evaluated += 1;
        }
    }
    Ok(SearchResult {
        outcome: Outcome::Exhausted,
        circuit: None,
        restarts_used: cfg.max_restarts,
        elapsed: start.elapsed(),
        gates_evaluated,
    })
}

/// Uniformly random gates, `max_depth` per attempt.
pub fn random_search<R: Rng + ?Sized>(
    target: &TargetStates,
    vocab: &GateVocabulary,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult> {
    if vocab.is_empty() {
        return Err(Error::EmptyKinds);
    }
    backward_search(target, vocab, cfg, |_, _| Ok(rng.random_range(0..vocab.len())))
}

/// Samples index `k` with weight `p_k^(1/T)`, optionally excluding `masked`.
/// Falls back to uniform over the unmasked entries when every weight is zero.
pub fn sample_gate<R: Rng + ?Sized>(probs: &[f64], temperature: f64, masked: Option<usize>, rng: &mut R) -> usize {
    let mut weights: Vec<f64> = probs
        .iter()
        .map(|&p| {
            let w = if temperature == 1.0 {
                p
            } else {
                p.powf(1.0 / temperature)
            };
            if w.is_finite() && w > 0.0 {
                w
            } else {
                0.0
            }
        })
        .collect();
    if let Some(m) = masked {
        if weights.len() > 1 {
            weights[m] = 0.0;
        }
    }
    match WeightedIndex::new(&weights) {
        Ok(dist) => dist.sample(rng),
        Err(_) => {
            let allowed: Vec<usize> = (0..probs.len())
                .filter(|&k| Some(k) != masked || probs.len() == 1)
                .collect();
            allowed[rng.random_range(0..allowed.len())]
        }
    }
}

/// Policy-guided backward search.
pub fn guided_search<P: GatePolicy + ?Sized, R: Rng + ?Sized>(
    target: &TargetStates,
    policy: &P,
    vocab: &GateVocabulary,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult> {
    if policy.n_qubits() != target.n_qubits() {
        return Err(Error::Dimension {
            what: "model qubit count",
            expected: target.n_qubits(),
            found: policy.n_qubits(),
        });
    }
    if policy.vocab_size() != vocab.len() {
        return Err(Error::Dimension {
            what: "model vocabulary size",
            expected: vocab.len(),
            found: policy.vocab_size(),
        });
    }
    let inverses: Vec<Option<usize>> = vocab
        .entries()
        .iter()
        .map(|&g| vocab.index_of(&inverse_of(g)))
        .collect();
    backward_search(target, vocab, cfg, |residual, previous| {
        let probs = policy.gate_probabilities(residual)?;
        if probs.len() != vocab.len() {
            return Err(Error::Dimension {
                what: "policy output length",
                expected: vocab.len(),
                found: probs.len(),
            });
        }
        let masked = if cfg.guard_inverse {
            previous.and_then(|k| inverses[k])
        } else {
            None
        };
        Ok(sample_gate(&probs, cfg.temperature, masked, rng))
    })
}

/// A basis input whose image under the circuit differs from the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub input: usize,
    pub max_abs_diff: f64,
}

/// Pushes every basis state through `circuit` and compares with the target
/// columns. Returns the failing inputs (empty when the circuit is correct).
pub fn verify_circuit(
    circuit: &Circuit,
    target: &TargetStates,
    tol: f64,
    allow_global_phase: bool,
) -> Result<Vec<Mismatch>> {
    if circuit.n_qubits() != target.n_qubits() {
        return Err(Error::Dimension {
            what: "circuit qubit count",
            expected: target.n_qubits(),
            found: circuit.n_qubits(),
        });
    }
    let actual = circuit_unitary(circuit)?;
    let expected = target.table();
    let mut phase = num_complex::Complex64::new(1.0, 0.0);
    if allow_global_phase {
        let (j, _) = (0..expected.dim())
            .map(|j| (j, expected.entry(j, 0).norm()))
            .fold((0, 0.0), |best, x| if x.1 > best.1 { x } else { best });
        let (a, e) = (actual.entry(j, 0), expected.entry(j, 0));
        if a.norm() > 0.0 {
            phase = (e / a) / (e / a).norm();
        }
    }
    Ok((0..expected.dim())
        .filter_map(|col| {
            let diff = actual
                .column(col)
                .iter()
                .zip(expected.column(col))
                .map(|(a, e)| (a * phase - e).norm())
                .fold(0.0, f64::max);
            (diff > tol).then_some(Mismatch {
                input: col,
                max_abs_diff: diff,
            })
        })
        .collect())
}

/// Runs `search` and independently re-simulates any circuit it returns.
/// A found circuit that does not reproduce the target is an error.
pub fn run_with_verification(
    target: &TargetStates,
    cfg: &SearchConfig,
    search: impl FnOnce() -> Result<SearchResult>,
) -> Result<SearchResult> {
    let result = search()?;
    if let Some(c) = &result.circuit {
        let mismatches = verify_circuit(c, target, cfg.tolerance, cfg.allow_global_phase)?;
        if !mismatches.is_empty() {
            return Err(Error::Verification {
                mismatches: mismatches.len(),
            });
        }
    }
    Ok(result)
}

/// `vocab_len^depth`, saturating.
pub fn search_space_size(vocab_len: usize, depth: usize) -> u128 {
    (vocab_len as u128).checked_pow(depth as u32).unwrap_or(u128::MAX)
}

#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub depth: usize,
    pub vocab_len: usize,
    pub search_space: u128,
    /// Complete depth-`depth` candidates tried.
    pub candidates: u64,
    pub gates_evaluated: u64,
    pub elapsed: Duration,
    /// Circuit found within the budget, if any.
    pub found: Option<Circuit>,
}

impl BaselineReport {
    pub fn gates_per_second(&self) -> f64 {
        self.gates_evaluated as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }

    pub fn candidates_per_second(&self) -> f64 {
        self.candidates as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }

    /// Expected seconds until a uniformly random search over a space holding
    /// one solution succeeds with probability one half: `ln 2 · N^d / rate`.
    pub fn estimated_seconds_to_half(&self) -> f64 {
        std::f64::consts::LN_2 * self.search_space as f64 / self.candidates_per_second()
    }
}

/// Random search at a fixed depth for a wall-clock budget, for extrapolation.
pub fn random_baseline<R: Rng + ?Sized>(
    target: &TargetStates,
    vocab: &GateVocabulary,
    depth: usize,
    budget: Duration,
    rng: &mut R,
) -> Result<BaselineReport> {
    let cfg = SearchConfig {
        max_depth: depth,
        max_restarts: 1,
        ..SearchConfig::default()
    };
    let start = Instant::now();
    let mut report = BaselineReport {
        depth,
        vocab_len: vocab.len(),
        search_space: search_space_size(vocab.len(), depth),
        candidates: 0,
        gates_evaluated: 0,
        elapsed: Duration::ZERO,
        found: None,
    };
    loop {
        let r = random_search(target, vocab, &cfg, rng)?;
        report.candidates += 1;
        report.gates_evaluated += r.gates_evaluated;
        if report.found.is_none() {
            report.found = r.circuit;
        }
        if start.elapsed() >= budget {
            break;
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}
