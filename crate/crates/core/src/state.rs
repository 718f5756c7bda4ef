//! Statevector and operator-table simulation.
//!
//! Bit convention: qubit 0 is the topmost circuit wire and the most
//! significant bit of a basis index, so `|q0 q1 … q(n−1)⟩` has index
//! `Σ q_k · 2^(n−1−k)`.

use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::{inverse_of, GateInstance, MAX_QUBITS};

/// Default tolerance for deciding that a residual is the identity.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::QubitCount(n_qubits));
    }
    Ok(())
}

/// Applies `g` to a register of `2^n` amplitudes in place.
///
/// Pairs each index with its target-bit partner and mixes the two
/// amplitudes, skipping pairs whose control bit is clear.
pub(crate) fn apply_in_place(amps: &mut [Complex64], n_qubits: usize, g: GateInstance) {
    debug_assert_eq!(amps.len(), 1 << n_qubits);
    let [[a, b], [c, d]] = g.kind.target_matrix();
    let tmask = 1usize << (n_qubits - 1 - g.target());
    let cmask = g.control().map_or(0, |q| 1usize << (n_qubits - 1 - q));
    for i in 0..amps.len() {
        if i & tmask != 0 || i & cmask != cmask {
            continue;
        }
        let j = i | tmask;
        let (x, y) = (amps[i], amps[j]);
        amps[i] = a * x + b * y;
        amps[j] = c * x + d * y;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Dimension {
                what: "amplitude count",
                expected: 1 << n_qubits,
                found: amplitudes.len(),
            });
        }
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn apply(&mut self, g: GateInstance) {
        apply_in_place(&mut self.amplitudes, self.n_qubits, g);
    }
}

/// `|j⟩` on `n` qubits.
pub fn basis_state(j: usize, n_qubits: usize) -> Result<StateVector> {
    check_qubits(n_qubits)?;
    let dim = 1usize << n_qubits;
    if j >= dim {
        return Err(Error::BasisIndex { index: j, n_qubits });
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
    amplitudes[j] = Complex64::new(1.0, 0.0);
    Ok(StateVector { n_qubits, amplitudes })
}

pub fn apply_gate(s: &StateVector, g: GateInstance) -> StateVector {
    let mut out = s.clone();
    out.apply(g);
    out
}

/// The images of all `2^n` basis states under an operator, stored column-major:
/// column `j` is the image of `|j⟩` and occupies `data[j·2^n .. (j+1)·2^n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTable {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl OperatorTable {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            data[j * dim + j] = Complex64::new(1.0, 0.0);
        }
        Ok(OperatorTable { n_qubits, data })
    }

    /// Builds a table from its flattened column-major entries.
    pub fn from_column_major(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return Err(Error::Dimension {
                what: "table entry count",
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(OperatorTable { n_qubits, data })
    }

    pub fn from_columns(columns: Vec<StateVector>) -> Result<Self> {
        let n_qubits = columns.first().map_or(0, |c| c.n_qubits);
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if columns.len() != dim {
            return Err(Error::Dimension {
                what: "column count",
                expected: dim,
                found: columns.len(),
            });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for c in &columns {
            if c.n_qubits != n_qubits {
                return Err(Error::Dimension {
                    what: "column qubit count",
                    expected: n_qubits,
                    found: c.n_qubits,
                });
            }
            data.extend_from_slice(&c.amplitudes);
        }
        Ok(OperatorTable { n_qubits, data })
    }

    /// Permutation table sending `|j⟩` to `|outputs[j]⟩`.
    pub fn from_permutation(n_qubits: usize, outputs: &[usize]) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if outputs.len() != dim {
            return Err(Error::Dimension {
                what: "permutation length",
                expected: dim,
                found: outputs.len(),
            });
        }
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, &out) in outputs.iter().enumerate() {
            if out >= dim {
                return Err(Error::BasisIndex { index: out, n_qubits });
            }
            data[j * dim + out] = Complex64::new(1.0, 0.0);
        }
        Ok(OperatorTable { n_qubits, data })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        let dim = self.dim();
        &self.data[j * dim..(j + 1) * dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.dim())
    }

    /// Entry `⟨row| U |col⟩`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.dim() + row]
    }

    /// The flattened column-major entries (the network's input layout).
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Column-major entries with real and imaginary parts interleaved.
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.data.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn apply(&mut self, g: GateInstance) {
        let (n, dim) = (self.n_qubits, self.dim());
        for col in self.data.chunks_exact_mut(dim) {
            apply_in_place(col, n, g);
        }
    }

    pub fn apply_inverse(&mut self, g: GateInstance) {
        self.apply(inverse_of(g));
    }

    /// Largest deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..dim {
            for b in a..dim {
                let dot: Complex64 = self
                    .column(a)
                    .iter()
                    .zip(self.column(b))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - expected).norm());
            }
        }
        worst
    }

    /// Largest elementwise distance to another table of the same size.
    pub fn max_abs_diff(&self, other: &OperatorTable) -> f64 {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Row-major text dump, one row per line, entries formatted like
    /// C's `%.12e%+.12ej`.
    pub fn dump(&self) -> String {
        let dim = self.dim();
        let mut out = String::new();
        for row in 0..dim {
            let cells: Vec<String> = (0..dim)
                .map(|col| {
                    let z = self.entry(row, col);
                    format!("{}{}j", c_exp(z.re, false), c_exp(z.im, true))
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

impl fmt::Display for OperatorTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// `printf("%.12e")` formatting (`%+.12e` with `plus`).
fn c_exp(x: f64, plus: bool) -> String {
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if plus && !mantissa.starts_with('-') { "+" } else { "" };
    let esign = if exp < 0 { '-' } else { '+' };
    format!("{sign}{mantissa}e{esign}{:02}", exp.abs())
}

pub fn apply_gate_table(t: &OperatorTable, g: GateInstance) -> OperatorTable {
    let mut out = t.clone();
    out.apply(g);
    out
}

pub fn apply_inverse_table(t: &OperatorTable, g: GateInstance) -> OperatorTable {
    let mut out = t.clone();
    out.apply_inverse(g);
    out
}

/// The identity table pushed through every gate of `c` in execution order.
pub fn circuit_unitary(c: &Circuit) -> Result<OperatorTable> {
    let mut t = OperatorTable::identity(c.n_qubits())?;
    for g in c.gates() {
        t.apply(*g);
    }
    Ok(t)
}

/// `max |t − I| ≤ tol`, elementwise.
pub fn is_identity(t: &OperatorTable, tol: f64) -> bool {
    is_identity_with(t, tol, false)
}

/// Like [`is_identity`]; with `allow_global_phase` the phase of the
/// largest-magnitude diagonal entry is divided out first.
pub fn is_identity_with(t: &OperatorTable, tol: f64, allow_global_phase: bool) -> bool {
    let dim = t.dim();
    let phase = if allow_global_phase {
        let pivot = (0..dim)
            .map(|j| t.entry(j, j))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        if pivot.norm() == 0.0 {
            return false;
        }
        (pivot / pivot.norm()).conj()
    } else {
        Complex64::new(1.0, 0.0)
    };
    for (col, column) in t.columns().enumerate() {
        for (row, z) in column.iter().enumerate() {
            let expected = if row == col { 1.0 } else { 0.0 };
            if (z * phase - expected).norm() > tol {
                return false;
            }
        }
    }
    true
}
