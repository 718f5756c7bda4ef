//! Training data: random loop-free circuits and the (prefix table,
//! multi-hot next-gate) pairs extracted from their dependency frontiers.

use std::collections::HashSet;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{forms_loop, key_for, to_dag, Circuit, DedupMode};
use crate::error::{Error, Result};
use crate::gates::{inverse_of, GateVocabulary, KindSet};
use crate::state::{circuit_unitary, OperatorTable};

pub const DATASET_MAGIC: &[u8; 4] = b"AQCD";
pub const DATASET_VERSION: u32 = 1;

/// Largest frontier whose subsets are enumerated (2^8 pairs).
pub const MAX_FRONTIER: usize = 8;

/// Attempts allowed per requested circuit before giving up on deduplication.
const ATTEMPTS_PER_CIRCUIT: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub n_qubits: usize,
    pub kinds: KindSet,
    /// Number of two-qubit gates per generated circuit.
    pub circuit_cost: usize,
    pub circuit_count: usize,
    pub seed: u64,
    pub dedup: DedupMode,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_qubits: 4,
            kinds: KindSet::SYNTHESIS,
            circuit_cost: 10,
            circuit_count: 100_000,
            seed: 0,
            dedup: DedupMode::Semantic,
        }
    }
}

impl CorpusConfig {
    pub fn vocabulary(&self) -> Result<GateVocabulary> {
        GateVocabulary::new(self.n_qubits, self.kinds)
    }
}

/// Draws gates uniformly from `vocab`, skipping any draw that would undo the
/// latest gate on its qubits, until the circuit holds `cost` two-qubit gates.
pub fn random_circuit<R: Rng + ?Sized>(vocab: &GateVocabulary, cost: usize, rng: &mut R) -> Result<Circuit> {
    let mut circuit = Circuit::new(vocab.n_qubits())?;
    if cost == 0 {
        return Ok(circuit);
    }
    if !vocab.entries().iter().any(|g| g.kind.is_controlled()) {
        return Err(Error::Config(format!(
            "vocabulary {} on {} qubits has no two-qubit gates",
            vocab.kinds(),
            vocab.n_qubits()
        )));
    }
    let mut remaining = cost;
    while remaining > 0 {
        let g = vocab.entries()[rng.random_range(0..vocab.len())];
        if forms_loop(circuit.gates(), g) {
            continue;
        }
        circuit.push(g)?;
        if g.kind.is_controlled() {
            remaining -= 1;
        }
    }
    Ok(circuit)
}

/// Flattened table (interleaved re/im, column-major) and its multi-hot
/// next-gate target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<f64>,
    pub target: Vec<u8>,
}

impl TrainingPair {
    pub fn input_table(&self, n_qubits: usize) -> Result<OperatorTable> {
        let data = self
            .input
            .chunks_exact(2)
            .map(|p| num_complex::Complex64::new(p[0], p[1]))
            .collect();
        OperatorTable::from_column_major(n_qubits, data)
    }

    pub fn hot_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.target.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i)
    }
}

/// Peels the circuit frontier by frontier. For a frontier `T` and every
/// proper subset `T'` (including the empty set), emits the table with `T'`
/// removed, labelled with the gates of `T \ T'`.
pub fn extract_pairs(c: &Circuit, vocab: &GateVocabulary) -> Result<Vec<TrainingPair>> {
    if c.n_qubits() != vocab.n_qubits() {
        return Err(Error::Dimension {
            what: "vocabulary qubit count",
            expected: c.n_qubits(),
            found: vocab.n_qubits(),
        });
    }
    let mut remainder = c.clone();
    let mut table = circuit_unitary(&remainder)?;
    let mut pairs = Vec::new();
    while !remainder.is_empty() {
        let frontier = to_dag(&remainder).frontier();
        if frontier.len() > MAX_FRONTIER {
            return Err(Error::FrontierTooLarge(frontier.len()));
        }
        let gates: Vec<_> = frontier.iter().map(|&i| remainder.gates()[i]).collect();
        let slots = gates
            .iter()
            .map(|g| {
                vocab.index_of(g).ok_or_else(|| Error::InvalidGate {
                    gate: g.to_string(),
                    reason: format!("not in the {} vocabulary", vocab.kinds()),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let full = (1u32 << gates.len()) - 1;
        for removed in 0..full {
            let mut input = table.clone();
            let mut target = vec![0u8; vocab.len()];
            for (k, (g, slot)) in gates.iter().zip(&slots).enumerate() {
                if removed & (1 << k) != 0 {
                    input.apply(inverse_of(*g));
                } else {
                    target[*slot] = 1;
                }
            }
            pairs.push(TrainingPair {
                input: input.to_interleaved(),
                target,
            });
        }

        for g in &gates {
            table.apply(inverse_of(*g));
        }
        let kept = remainder
            .gates()
            .iter()
            .enumerate()
            .filter(|(i, _)| !frontier.contains(i))
            .map(|(_, g)| *g)
            .collect();
        remainder = Circuit::from_gates(remainder.n_qubits(), kept)?;
    }
    Ok(pairs)
}

/// An in-memory corpus. Inputs and targets are stored contiguously in pair
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_qubits: usize,
    kinds: KindSet,
    vocab_size: usize,
    inputs: Vec<f64>,
    targets: Vec<u8>,
}

impl Dataset {
    pub fn new(n_qubits: usize, kinds: KindSet, vocab_size: usize) -> Self {
        Dataset {
            n_qubits,
            kinds,
            vocab_size,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kinds(&self) -> KindSet {
        self.kinds
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Real numbers per input: `2·4^n`.
    pub fn input_len(&self) -> usize {
        2 << (2 * self.n_qubits)
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.vocab_size.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let w = self.input_len();
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn target(&self, i: usize) -> &[u8] {
        &self.targets[i * self.vocab_size..(i + 1) * self.vocab_size]
    }

    pub fn pair(&self, i: usize) -> TrainingPair {
        TrainingPair {
            input: self.input(i).to_vec(),
            target: self.target(i).to_vec(),
        }
    }

    pub fn push(&mut self, pair: &TrainingPair) -> Result<()> {
        if pair.input.len() != self.input_len() {
            return Err(Error::Dimension {
                what: "pair input length",
                expected: self.input_len(),
                found: pair.input.len(),
            });
        }
        if pair.target.len() != self.vocab_size {
            return Err(Error::Dimension {
                what: "pair target length",
                expected: self.vocab_size,
                found: pair.target.len(),
            });
        }
        self.inputs.extend_from_slice(&pair.input);
        self.targets.extend_from_slice(&pair.target);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        w.write_all(&(self.vocab_size as u32).to_le_bytes())?;
        w.write_all(&[self.kinds.bits()])?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for i in 0..self.len() {
            for x in self.input(i) {
                w.write_all(&x.to_le_bytes())?;
            }
            w.write_all(self.target(i))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let corrupt = |m: String| Error::corrupt("dataset", m);
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "dataset")?;
        if &magic != DATASET_MAGIC {
            return Err(corrupt(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r, "dataset")?;
        if version != DATASET_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let n_qubits = read_u32(&mut r, "dataset")? as usize;
        if n_qubits == 0 || n_qubits > 8 {
            return Err(corrupt(format!("unsupported qubit count {n_qubits}")));
        }
        let vocab_size = read_u32(&mut r, "dataset")? as usize;
        let mut kind_bits = [0u8; 1];
        read_exact(&mut r, &mut kind_bits, "dataset")?;
        let kinds = KindSet::from_bits(kind_bits[0])?;
        let expected_vocab = GateVocabulary::new(n_qubits, kinds)?.len();
        if expected_vocab != vocab_size {
            return Err(corrupt(format!(
                "vocabulary size {vocab_size} does not match kinds {kinds} ({expected_vocab})"
            )));
        }
        let mut count = [0u8; 8];
        read_exact(&mut r, &mut count, "dataset")?;
        let count = u64::from_le_bytes(count) as usize;

        let mut ds = Dataset::new(n_qubits, kinds, vocab_size);
        let width = ds.input_len();
        let mut buf = vec![0u8; width * 8];
        let mut target = vec![0u8; vocab_size];
        ds.inputs.reserve(count.min(1 << 24) * width);
        for _ in 0..count {
            read_exact(&mut r, &mut buf, "dataset")?;
            ds.inputs.extend(
                buf.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))),
            );
            read_exact(&mut r, &mut target, "dataset")?;
            if target.iter().any(|&b| b > 1) {
                return Err(corrupt("target bytes must be 0 or 1".into()));
            }
            ds.targets.extend_from_slice(&target);
        }
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(Error::at_path(path))?;
        self.write_to(BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(Error::at_path(path))?;
        Dataset::read_from(BufReader::new(file))
    }
}

pub(crate) fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], kind: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::corrupt(kind, "unexpected end of file"),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_u32<R: Read>(r: &mut R, kind: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, kind)?;
    Ok(u32::from_le_bytes(b))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusReport {
    pub circuits: usize,
    pub attempts: usize,
    pub duplicates_rejected: usize,
    pub pairs: usize,
    pub warnings: Vec<String>,
}

/// RNG for generation attempt `index`: stream `index` of the corpus seed.
fn attempt_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Generates `circuit_count` distinct circuits and extracts all their pairs.
///
/// Attempt `i` always draws from its own RNG stream and duplicates are
/// rejected in attempt order, so the result is independent of the number of
/// worker threads.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<(Dataset, CorpusReport)> {
    let vocab = cfg.vocabulary()?;
    let mut dataset = Dataset::new(cfg.n_qubits, cfg.kinds, vocab.len());
    let mut report = CorpusReport::default();
    if cfg.circuit_cost == 0 || cfg.circuit_count == 0 {
        report
            .warnings
            .push("circuit cost or count is zero; corpus is empty".into());
        return Ok((dataset, report));
    }

    let max_attempts = cfg.circuit_count.saturating_mul(ATTEMPTS_PER_CIRCUIT);
    let mut seen = HashSet::new();
    let mut accepted = Vec::with_capacity(cfg.circuit_count);
    while accepted.len() < cfg.circuit_count && report.attempts < max_attempts {
        let batch = (cfg.circuit_count - accepted.len()).min(max_attempts - report.attempts);
        let start = report.attempts;
        let candidates = (start..start + batch)
            .into_par_iter()
            .map(|i| {
                let circuit = random_circuit(&vocab, cfg.circuit_cost, &mut attempt_rng(cfg.seed, i))?;
                let key = key_for(&circuit, cfg.dedup)?;
                Ok((circuit, key))
            })
            .collect::<Result<Vec<_>>>()?;
        for (circuit, key) in candidates {
            report.attempts += 1;
            if accepted.len() == cfg.circuit_count {
                break;
            }
            if seen.insert(key) {
                accepted.push(circuit);
            } else {
                report.duplicates_rejected += 1;
            }
        }
    }
    if accepted.len() < cfg.circuit_count {
        report.warnings.push(format!(
            "only {} distinct circuits found in {} attempts ({} requested)",
            accepted.len(),
            report.attempts,
            cfg.circuit_count
        ));
    }

    let per_circuit = accepted
        .par_iter()
        .map(|c| extract_pairs(c, &vocab))
        .collect::<Result<Vec<_>>>()?;
    for pairs in per_circuit {
        for pair in &pairs {
            dataset.push(pair)?;
        }
    }
    report.circuits = accepted.len();
    report.pairs = dataset.len();
    Ok((dataset, report))
}

/// [`generate_corpus`] followed by [`Dataset::save`].
pub fn write_corpus(cfg: &CorpusConfig, path: impl AsRef<Path>) -> Result<CorpusReport> {
    let (dataset, report) = generate_corpus(cfg)?;
    dataset.save(path)?;
    Ok(report)
}
