//! Renaming qubits. A circuit with its qubits permuted is another circuit,
//! and its table and frontier follow from the original's by the same
//! permutation, so a relabeled training pair is a valid training pair.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::{GateInstance, GateVocabulary};

/// Qubit `q` becomes qubit `perm[q]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitRelabeling {
    perm: Vec<usize>,
    /// Image of each basis index.
    basis: Vec<usize>,
    /// Image of each vocabulary index.
    gates: Vec<usize>,
}

impl QubitRelabeling {
    pub fn new(perm: Vec<usize>, vocab: &GateVocabulary) -> Result<Self> {
        let n = vocab.n_qubits();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Config(format!("{perm:?} is not a permutation of {n} qubits")));
        }
        let basis = (0..1usize << n)
            .map(|i| {
                (0..n)
                    .filter(|&q| i >> (n - 1 - q) & 1 == 1)
                    .fold(0, |acc, q| acc | 1 << (n - 1 - perm[q]))
            })
            .collect();
        let gates = vocab
            .entries()
            .iter()
            .map(|g| {
                vocab
                    .index_of(&relabel_gate(*g, &perm))
                    .expect("vocabularies are closed under relabeling")
            })
            .collect();
        Ok(QubitRelabeling { perm, basis, gates })
    }

    /// A uniformly random relabeling.
    pub fn random<R: Rng + ?Sized>(vocab: &GateVocabulary, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..vocab.n_qubits()).collect();
        perm.shuffle(rng);
        QubitRelabeling::new(perm, vocab).expect("shuffled identity is a permutation")
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn gate(&self, g: GateInstance) -> GateInstance {
        relabel_gate(g, &self.perm)
    }

    pub fn circuit(&self, c: &Circuit) -> Result<Circuit> {
        Circuit::from_gates(c.n_qubits(), c.gates().iter().map(|g| self.gate(*g)).collect())
    }

    /// Relabels a flattened table (interleaved re/im, column-major) into `out`.
    pub fn input_into(&self, input: &[f64], out: &mut [f64]) {
        let dim = self.basis.len();
        assert_eq!(input.len(), 2 * dim * dim);
        assert_eq!(out.len(), input.len());
        for (j, &sj) in self.basis.iter().enumerate() {
            for (i, &si) in self.basis.iter().enumerate() {
                let from = 2 * (j * dim + i);
                let to = 2 * (sj * dim + si);
                out[to] = input[from];
                out[to + 1] = input[from + 1];
            }
        }
    }

    /// Relabels a multi-hot target into `out`.
    pub fn target_into<T: Copy>(&self, target: &[T], out: &mut [T]) {
        assert_eq!(target.len(), self.gates.len());
        for (k, &to) in self.gates.iter().enumerate() {
            out[to] = target[k];
        }
    }
}

fn relabel_gate(g: GateInstance, perm: &[usize]) -> GateInstance {
    match g.control {
        Some(c) => GateInstance::controlled(g.kind, perm[c as usize], perm[g.target as usize]),
        None => GateInstance::single(g.kind, perm[g.target as usize]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{GateInstance as G, KindSet};

    #[test]
    fn rejects_non_permutations() {
        let vocab = GateVocabulary::new(3, KindSet::SYNTHESIS).unwrap();
        assert!(QubitRelabeling::new(vec![0, 0, 1], &vocab).is_err());
        assert!(QubitRelabeling::new(vec![0, 1], &vocab).is_err());
        assert!(QubitRelabeling::new(vec![0, 1, 3], &vocab).is_err());
    }

    #[test]
    fn swapping_qubits_moves_basis_bits() {
        let vocab = GateVocabulary::new(3, KindSet::SYNTHESIS).unwrap();
        let r = QubitRelabeling::new(vec![2, 1, 0], &vocab).unwrap();
        // |100> (qubit 0 set) becomes |001>.
        assert_eq!(r.basis[0b100], 0b001);
        assert_eq!(r.basis[0b110], 0b011);
        assert_eq!(r.gate(G::cv(0, 1)), G::cv(2, 1));
    }
}
