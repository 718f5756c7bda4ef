//! Primitive gates, their matrices and the indexed gate vocabulary.
//!
//! The synthesis vocabulary is `{CX, CV, CVDG}`. The single-qubit kinds exist
//! for small worked examples (Bell circuits, `{H, CX}` training sets).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{array, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts. Gate operands are stored as `u8`.
pub const MAX_QUBITS: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    V,
    Vdg,
    H,
    Cx,
    Cv,
    Cvdg,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::X,
        GateKind::V,
        GateKind::Vdg,
        GateKind::H,
        GateKind::Cx,
        GateKind::Cv,
        GateKind::Cvdg,
    ];

    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::Cx | GateKind::Cv | GateKind::Cvdg)
    }

    pub fn inverse(self) -> GateKind {
        match self {
            GateKind::V => GateKind::Vdg,
            GateKind::Vdg => GateKind::V,
            GateKind::Cv => GateKind::Cvdg,
            GateKind::Cvdg => GateKind::Cv,
            k => k,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::V => "V",
            GateKind::Vdg => "VDG",
            GateKind::H => "H",
            GateKind::Cx => "CX",
            GateKind::Cv => "CV",
            GateKind::Cvdg => "CVDG",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// The 2×2 action on the target qubit. Controlled kinds return the
    /// matrix applied when the control is set.
    pub fn target_matrix(self) -> [[Complex64; 2]; 2] {
        let p = Complex64::new(0.5, 0.5);
        let m = Complex64::new(0.5, -0.5);
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            GateKind::X | GateKind::Cx => [[ZERO, ONE], [ONE, ZERO]],
            // ((1+i)/2)·[[1, −i], [−i, 1]]
            GateKind::V | GateKind::Cv => [[p, m], [m, p]],
            // ((1−i)/2)·[[1, i], [i, 1]], the conjugate transpose of V
            GateKind::Vdg | GateKind::Cvdg => [[m, p], [p, m]],
            GateKind::H => [[h, h], [h, -h]],
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::InvalidGate {
                gate: s.to_string(),
                reason: "unknown gate kind".into(),
            })
    }
}

/// Unitary matrix of a gate kind: 2×2 for single-qubit kinds, 4×4 for
/// controlled kinds with the control as the more significant qubit.
pub fn matrix_of(kind: GateKind) -> Array2<Complex64> {
    let [[a, b], [c, d]] = kind.target_matrix();
    if kind.is_controlled() {
        array![
            [ONE, ZERO, ZERO, ZERO],
            [ZERO, ONE, ZERO, ZERO],
            [ZERO, ZERO, a, b],
            [ZERO, ZERO, c, d],
        ]
    } else {
        array![[a, b], [c, d]]
    }
}

/// An ordered subset of [`GateKind`], stored as the bitmask used in dataset
/// headers (bit `k` set for `GateKind::ALL[k]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KindSet(u8);

impl KindSet {
    pub const SYNTHESIS: KindSet = KindSet(0b111_0000);

    pub fn new(kinds: impl IntoIterator<Item = GateKind>) -> Self {
        KindSet(kinds.into_iter().fold(0, |acc, k| acc | k.bit()))
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits & 0x80 != 0 {
            return Err(Error::corrupt("kind set", format!("bitmask {bits:#010b}")));
        }
        Ok(KindSet(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, kind: GateKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn iter(self) -> impl Iterator<Item = GateKind> {
        GateKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }

    /// Parses a comma-separated list such as `CX,CV,CVDG`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let kinds = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(GateKind::from_str)
            .collect::<Result<Vec<_>>>()?;
        let set = KindSet::new(kinds);
        if set.is_empty() {
            return Err(Error::EmptyKinds);
        }
        Ok(set)
    }
}

impl Default for KindSet {
    fn default() -> Self {
        KindSet::SYNTHESIS
    }
}

impl fmt::Display for KindSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(GateKind::token).collect();
        f.write_str(&names.join(","))
    }
}

/// One gate together with its qubit operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateInstance {
    pub kind: GateKind,
    pub control: Option<u8>,
    pub target: u8,
}

impl GateInstance {
    pub fn single(kind: GateKind, target: usize) -> Self {
        debug_assert!(!kind.is_controlled());
        GateInstance {
            kind,
            control: None,
            target: target as u8,
        }
    }

    pub fn controlled(kind: GateKind, control: usize, target: usize) -> Self {
        debug_assert!(kind.is_controlled());
        GateInstance {
            kind,
            control: Some(control as u8),
            target: target as u8,
        }
    }

    pub fn x(t: usize) -> Self {
        Self::single(GateKind::X, t)
    }
    pub fn h(t: usize) -> Self {
        Self::single(GateKind::H, t)
    }
    pub fn v(t: usize) -> Self {
        Self::single(GateKind::V, t)
    }
    pub fn vdg(t: usize) -> Self {
        Self::single(GateKind::Vdg, t)
    }
    pub fn cx(c: usize, t: usize) -> Self {
        Self::controlled(GateKind::Cx, c, t)
    }
    pub fn cv(c: usize, t: usize) -> Self {
        Self::controlled(GateKind::Cv, c, t)
    }
    pub fn cvdg(c: usize, t: usize) -> Self {
        Self::controlled(GateKind::Cvdg, c, t)
    }

    pub fn target(&self) -> usize {
        self.target as usize
    }

    pub fn control(&self) -> Option<usize> {
        self.control.map(usize::from)
    }

    /// Bitmask of the qubits this gate touches.
    pub fn qubit_mask(&self) -> u32 {
        let t = 1u32 << self.target;
        match self.control {
            Some(c) => t | (1u32 << c),
            None => t,
        }
    }

    pub fn is_disjoint(&self, other: &GateInstance) -> bool {
        self.qubit_mask() & other.qubit_mask() == 0
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidGate {
                gate: self.to_string(),
                reason,
            })
        };
        if self.kind.is_controlled() != self.control.is_some() {
            return fail(format!("wrong arity for {}", self.kind));
        }
        if self.target() >= n_qubits {
            return fail(format!("target index must be below {n_qubits}"));
        }
        if let Some(c) = self.control() {
            if c >= n_qubits {
                return fail(format!("control index must be below {n_qubits}"));
            }
            if c == self.target() {
                return fail("control equals target".into());
            }
        }
        Ok(())
    }
}

/// Conjugate transpose of a gate; operands unchanged.
pub fn inverse_of(g: GateInstance) -> GateInstance {
    GateInstance {
        kind: g.kind.inverse(),
        ..g
    }
}

impl fmt::Display for GateInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.control {
            Some(c) => write!(f, "{}({},{})", self.kind, c, self.target),
            None => write!(f, "{}({})", self.kind, self.target),
        }
    }
}

/// Ordered list of every gate instance over `n` qubits for a kind set.
///
/// Order: kind (in [`GateKind::ALL`] order), then control ascending, then
/// target ascending. This order is the network's output layout.
#[derive(Debug, Clone)]
pub struct GateVocabulary {
    n_qubits: usize,
    kinds: KindSet,
    entries: Vec<GateInstance>,
    index: HashMap<GateInstance, usize>,
}

impl GateVocabulary {
    pub fn new(n_qubits: usize, kinds: KindSet) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::EmptyKinds);
        }
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut entries = Vec::new();
        for kind in kinds.iter() {
            if kind.is_controlled() {
                for c in 0..n_qubits {
                    for t in (0..n_qubits).filter(|&t| t != c) {
                        entries.push(GateInstance::controlled(kind, c, t));
                    }
                }
            } else {
                entries.extend((0..n_qubits).map(|t| GateInstance::single(kind, t)));
            }
        }
        let index = entries.iter().enumerate().map(|(i, g)| (*g, i)).collect();
        Ok(GateVocabulary {
            n_qubits,
            kinds,
            entries,
            index,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kinds(&self) -> KindSet {
        self.kinds
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GateInstance] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> Option<GateInstance> {
        self.entries.get(i).copied()
    }

    pub fn index_of(&self, g: &GateInstance) -> Option<usize> {
        self.index.get(g).copied()
    }
}

/// Shorthand for [`GateVocabulary::new`].
pub fn build_vocabulary(n_qubits: usize, kinds: KindSet) -> Result<GateVocabulary> {
    GateVocabulary::new(n_qubits, kinds)
}
