//! Synthesis targets: truth-table benchmarks and spec file ingestion.
//!
//! A target is the table of images of every computational basis state under
//! the desired circuit. Classical reversible gates give permutation tables.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::state::OperatorTable;

/// Orthonormality tolerance applied to loaded targets.
pub const UNITARITY_TOLERANCE: f64 = 1e-6;

/// A classical reversible specification: `outputs[j]` is the output bit
/// pattern for input pattern `j` (qubit 0 = most significant bit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTableSpec {
    n_qubits: usize,
    outputs: Vec<usize>,
}

impl TruthTableSpec {
    /// Validates that `outputs` is a bijection on `0..2^n`.
    pub fn new(n_qubits: usize, outputs: Vec<usize>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > crate::gates::MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if outputs.len() != dim {
            return Err(Error::Dimension {
                what: "truth table rows",
                expected: dim,
                found: outputs.len(),
            });
        }
        let mut first_seen: Vec<Option<usize>> = vec![None; dim];
        let mut collisions = Vec::new();
        for (input, &out) in outputs.iter().enumerate() {
            if out >= dim {
                return Err(Error::BasisIndex { index: out, n_qubits });
            }
            match first_seen[out] {
                Some(prev) => collisions.push((prev, input, out)),
                None => first_seen[out] = Some(input),
            }
        }
        if !collisions.is_empty() {
            return Err(Error::NotBijective { collisions });
        }
        Ok(TruthTableSpec { n_qubits, outputs })
    }

    /// Evaluates a bitwise formula over every input pattern. The closure
    /// receives the input bits in wire order and returns the output bits.
    pub fn from_fn(n_qubits: usize, f: impl Fn(&[u8]) -> Vec<u8>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let outputs = (0..dim)
            .map(|j| {
                let bits = to_bits(j, n_qubits);
                from_bits(&f(&bits))
            })
            .collect();
        TruthTableSpec::new(n_qubits, outputs)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn output(&self, input: usize) -> usize {
        self.outputs[input]
    }

    /// `# truthtable n=<q>` followed by `<in_bits> <out_bits>` rows.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("# truthtable n={}\n", self.n_qubits);
        for (input, &output) in self.outputs.iter().enumerate() {
            out.push_str(&format!(
                "{} {}\n",
                bit_string(input, self.n_qubits),
                bit_string(output, self.n_qubits)
            ));
        }
        out
    }
}

/// Bits of `value` over `n` wires, wire 0 first (most significant).
pub fn to_bits(value: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| ((value >> (n - 1 - q)) & 1) as u8).collect()
}

pub fn from_bits(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b as usize & 1))
}

pub fn bit_string(value: usize, n: usize) -> String {
    to_bits(value, n)
        .into_iter()
        .map(|b| if b == 1 { '1' } else { '0' })
        .collect()
}

/// A target operator table with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetStates {
    table: OperatorTable,
}

impl TargetStates {
    pub fn from_table(table: OperatorTable) -> Result<Self> {
        let deviation = table.unitarity_deviation();
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(TargetStates { table })
    }

    pub fn table(&self) -> &OperatorTable {
        &self.table
    }

    pub fn n_qubits(&self) -> usize {
        self.table.n_qubits()
    }

    pub fn into_table(self) -> OperatorTable {
        self.table
    }

    /// Amplitude file text: `# amplitudes n=<q>`, then column `j` on line
    /// `j` as `re,im` entries separated by `;`.
    pub fn to_amplitude_file_string(&self) -> String {
        let mut out = format!("# amplitudes n={}\n", self.n_qubits());
        for col in self.table.columns() {
            let cells: Vec<String> = col.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
            out.push_str(&cells.join(";"));
            out.push('\n');
        }
        out
    }
}

/// Column `j` is `|outputs[j]⟩`.
pub fn spec_to_targets(spec: &TruthTableSpec) -> TargetStates {
    let table = OperatorTable::from_permutation(spec.n_qubits, &spec.outputs).expect("validated truth table");
    TargetStates { table }
}

/// The built-in four-wire benchmark gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Benchmark {
    Hng,
    Pfag,
    Ig,
    Mig,
    Otg,
    Mkg,
    Tsg,
}

impl Benchmark {
    pub const ALL: [Benchmark; 7] = [
        Benchmark::Hng,
        Benchmark::Pfag,
        Benchmark::Ig,
        Benchmark::Mig,
        Benchmark::Otg,
        Benchmark::Mkg,
        Benchmark::Tsg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Hng => "HNG",
            Benchmark::Pfag => "PFAG",
            Benchmark::Ig => "IG",
            Benchmark::Mig => "MIG",
            Benchmark::Otg => "OTG",
            Benchmark::Mkg => "MKG",
            Benchmark::Tsg => "TSG",
        }
    }

    /// Lowest quantum cost previously reported for this gate over
    /// `{CX, CV, CVDG}`; used to size search depth.
    pub fn expected_cost(self) -> usize {
        match self {
            Benchmark::Hng | Benchmark::Pfag => 6,
            Benchmark::Ig | Benchmark::Mig => 7,
            Benchmark::Otg => 8,
            Benchmark::Mkg => 9,
            Benchmark::Tsg => 19,
        }
    }

    /// Output bits `(O0, O1, O2, O3)` for inputs `(A, B, C, D)` on wires 0..3.
    /// Overbar is `1 − x`, juxtaposition is AND and `⊕` is XOR.
    pub fn evaluate(self, a: u8, b: u8, c: u8, d: u8) -> [u8; 4] {
        let not = |x: u8| 1 - x;
        match self {
            Benchmark::Hng => [a, b, a ^ b ^ c, ((a ^ b) & c) ^ (a & b) ^ d],
            Benchmark::Pfag => [a, a ^ b, a ^ b ^ c, ((a ^ b) & c) ^ (a & b) ^ d],
            Benchmark::Ig => [a, a ^ b, (a & b) ^ c, (d & b) ^ (not(b) & (a ^ d))],
            Benchmark::Mig => [a, a ^ b, (a & b) ^ c, (a & not(b)) ^ d],
            Benchmark::Otg => [a, a ^ b, a ^ b ^ d, ((a ^ b) & d) ^ (a & b) ^ c],
            Benchmark::Mkg => {
                let t = (not(a) & not(d)) ^ not(b);
                [a, c, t ^ c, (t & c) ^ (a & b) ^ d]
            }
            Benchmark::Tsg => {
                let t = (not(a) & not(c)) ^ not(b);
                [a, t, t ^ d, (t & d) ^ (a & b) ^ c]
            }
        }
    }

    pub fn truth_table(self) -> Result<TruthTableSpec> {
        TruthTableSpec::from_fn(4, |bits| self.evaluate(bits[0], bits[1], bits[2], bits[3]).to_vec())
    }

    pub fn targets(self) -> Result<TargetStates> {
        Ok(spec_to_targets(&self.truth_table()?))
    }

    /// A published synthesized circuit for this gate.
    pub fn reference_circuit(self) -> Circuit {
        let text = match self {
            Benchmark::Hng => include_str!("../circuits/hng.qc"),
            Benchmark::Pfag => include_str!("../circuits/pfag.qc"),
            Benchmark::Ig => include_str!("../circuits/ig.qc"),
            Benchmark::Mig => include_str!("../circuits/mig.qc"),
            Benchmark::Otg => include_str!("../circuits/otg.qc"),
            Benchmark::Mkg => include_str!("../circuits/mkg.qc"),
            Benchmark::Tsg => include_str!("../circuits/tsg.qc"),
        };
        Circuit::from_file_str(text).expect("bundled circuit parses")
    }
}

/// The six-gate HNG realization `CV(0,3), CV(1,3), CV(2,3), CX(0,2), CX(1,2), CVDG(2,3)`.
pub fn hng_sequence() -> Circuit {
    Circuit::from_file_str(include_str!("../circuits/hng_sequence.qc")).expect("bundled circuit parses")
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownBenchmark(s.to_string()))
    }
}

/// Truth table for a named benchmark.
pub fn benchmark(name: &str) -> Result<TruthTableSpec> {
    Benchmark::from_str(name)?.truth_table()
}

/// Parses a truth-table or amplitude file, chosen by its header.
pub fn parse_spec(text: &str) -> Result<TargetStates> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty spec file"))?;
    let header_body = header
        .strip_prefix('#')
        .map(str::trim)
        .ok_or_else(|| parse_err(line, "missing `#` header"))?;
    let (format, n) = header_body
        .split_once(char::is_whitespace)
        .and_then(|(fmt, rest)| {
            let n = rest.trim().strip_prefix("n=")?.parse::<usize>().ok()?;
            Some((fmt, n))
        })
        .ok_or_else(|| parse_err(line, format!("malformed header {header:?}")))?;
    if n == 0 || n > crate::gates::MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    let rows: Vec<(usize, &str)> = lines.filter(|(_, l)| !l.starts_with('#')).collect();
    match format {
        "truthtable" => parse_truth_rows(n, &rows).map(|s| spec_to_targets(&s)),
        "amplitudes" => parse_amplitude_rows(n, &rows),
        other => Err(parse_err(line, format!("unknown spec format {other:?}"))),
    }
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<TargetStates> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::at_path(path))?;
    parse_spec(&text)
}

/// Parses a truth-table file body into a spec.
pub fn parse_truth_table(text: &str) -> Result<TruthTableSpec> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, header) = rows.next().ok_or_else(|| parse_err(1, "empty spec file"))?;
    let n = header
        .strip_prefix("# truthtable n=")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| parse_err(line, format!("expected `# truthtable n=<q>`, found {header:?}")))?;
    let rows: Vec<_> = rows.filter(|(_, l)| !l.starts_with('#')).collect();
    parse_truth_rows(n, &rows)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: 1,
        message: message.into(),
    }
}

fn parse_bits(s: &str, n: usize, line: usize) -> Result<usize> {
    if s.len() != n || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(parse_err(line, format!("expected {n} bits, found {s:?}")));
    }
    Ok(usize::from_str_radix(s, 2).expect("binary digits"))
}

fn parse_truth_rows(n: usize, rows: &[(usize, &str)]) -> Result<TruthTableSpec> {
    let dim = 1usize << n;
    let mut pairs = Vec::with_capacity(rows.len());
    for &(line, row) in rows {
        let mut parts = row.split_whitespace();
        let (Some(input), Some(output), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(
                line,
                format!("expected `<in_bits> <out_bits>`, found {row:?}"),
            ));
        };
        pairs.push((parse_bits(input, n, line)?, parse_bits(output, n, line)?));
    }

    // Repeated outputs are a reversibility failure regardless of row layout.
    let mut by_output: Vec<Option<usize>> = vec![None; dim];
    let mut collisions = Vec::new();
    for &(input, output) in &pairs {
        match by_output[output] {
            Some(prev) => collisions.push((prev, input, output)),
            None => by_output[output] = Some(input),
        }
    }
    if !collisions.is_empty() {
        return Err(Error::NotBijective { collisions });
    }

    let mut outputs: Vec<Option<usize>> = vec![None; dim];
    for (&(line, _), &(input, output)) in rows.iter().zip(&pairs) {
        if outputs[input].replace(output).is_some() {
            return Err(parse_err(line, format!("input {} listed twice", bit_string(input, n))));
        }
    }
    let outputs = outputs
        .into_iter()
        .enumerate()
        .map(|(input, o)| {
            o.ok_or_else(|| {
                parse_err(
                    rows.last().map_or(1, |r| r.0),
                    format!("missing row for input {}", bit_string(input, n)),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TruthTableSpec::new(n, outputs)
}

fn parse_amplitude_rows(n: usize, rows: &[(usize, &str)]) -> Result<TargetStates> {
    let dim = 1usize << n;
    if rows.len() != dim {
        return Err(Error::Dimension {
            what: "amplitude file columns",
            expected: dim,
            found: rows.len(),
        });
    }
    let mut data = Vec::with_capacity(dim * dim);
    for &(line, row) in rows {
        let cells: Vec<&str> = row.split(';').map(str::trim).collect();
        if cells.len() != dim {
            return Err(parse_err(
                line,
                format!("expected {dim} entries, found {}", cells.len()),
            ));
        }
        for cell in cells {
            let parsed = cell
                .split_once(',')
                .and_then(|(re, im)| Some(Complex64::new(re.trim().parse().ok()?, im.trim().parse().ok()?)));
            data.push(parsed.ok_or_else(|| parse_err(line, format!("bad entry {cell:?}")))?);
        }
    }
    TargetStates::from_table(OperatorTable::from_column_major(n, data)?)
}
