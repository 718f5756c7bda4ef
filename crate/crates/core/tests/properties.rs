use ndarray::linalg::kron;
use ndarray::Array2;
use num_complex::Complex64 as C;
use proptest::prelude::*;

use qsynth::circuit::{dedup_key, eliminate_loops, to_dag, Circuit};
use qsynth::dataset::extract_pairs;
use qsynth::gates::{GateInstance, GateKind, GateVocabulary, KindSet};
use qsynth::relabel::QubitRelabeling;
use qsynth::state::{apply_gate, basis_state, circuit_unitary, StateVector};

/// Dense matrix of a gate built from Kronecker products, qubit 0 leftmost.
fn dense(g: GateInstance, n: usize) -> Array2<C> {
    let m = g.kind.target_matrix();
    let m = Array2::from_shape_fn((2, 2), |(r, c)| m[r][c]);
    let eye = Array2::<C>::eye(2);
    let mut p0 = Array2::<C>::zeros((2, 2));
    p0[[0, 0]] = C::new(1.0, 0.0);
    let mut p1 = Array2::<C>::zeros((2, 2));
    p1[[1, 1]] = C::new(1.0, 0.0);
    let chain = |pick: &dyn Fn(usize) -> Array2<C>| (0..n).fold(Array2::<C>::eye(1), |acc, q| kron(&acc, &pick(q)));
    match g.control() {
        None => chain(&|q| if q == g.target() { m.clone() } else { eye.clone() }),
        Some(c) => {
            let off = chain(&|q| if q == c { p0.clone() } else { eye.clone() });
            let on = chain(&|q| {
                if q == c {
                    p1.clone()
                } else if q == g.target() {
                    m.clone()
                } else {
                    eye.clone()
                }
            });
            off + on
        }
    }
}

fn gate_strategy(n: usize, kinds: &'static [GateKind]) -> impl Strategy<Value = GateInstance> {
    (prop::sample::select(kinds), 0..n, 0..n - 1).prop_map(move |(kind, a, b)| {
        if kind.is_controlled() {
            let t = if b >= a { b + 1 } else { b };
            GateInstance::controlled(kind, a, t)
        } else {
            GateInstance::single(kind, a)
        }
    })
}

const ALL: &[GateKind] = &GateKind::ALL;
const CONTROLLED: &[GateKind] = &[GateKind::Cx, GateKind::Cv, GateKind::Cvdg];

fn circuit_strategy(n: usize, kinds: &'static [GateKind], max_len: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(gate_strategy(n, kinds), 0..max_len).prop_map(move |g| Circuit::from_gates(n, g).unwrap())
}

fn state_strategy(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n).prop_filter_map("non-zero", move |v| {
        let amps: Vec<C> = v.into_iter().map(|(r, i)| C::new(r, i)).collect();
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (norm > 1e-3).then(|| StateVector::new(n, amps.iter().map(|z| z / norm).collect()).unwrap())
    })
}

fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn apply_gate_matches_dense_oracle(
        g2 in gate_strategy(2, ALL),
        s2 in state_strategy(2),
        g3 in gate_strategy(3, ALL),
        s3 in state_strategy(3),
    ) {
        for (g, s, n) in [(g2, s2, 2), (g3, s3, 3)] {
            let out = apply_gate(&s, g);
            let expected = dense(g, n).dot(&ndarray::Array1::from(s.amplitudes().to_vec()));
            prop_assert!(max_diff(out.amplitudes(), expected.as_slice().unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn gates_preserve_norm(s in state_strategy(3), gates in prop::collection::vec(gate_strategy(3, ALL), 0..20)) {
        let mut s = s;
        for g in gates {
            s = apply_gate(&s, g);
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn circuit_unitary_matches_dense_product(c in circuit_strategy(3, ALL, 12)) {
        let dense_u = c.gates().iter().fold(Array2::<C>::eye(8), |u, g| dense(*g, 3).dot(&u));
        let table = circuit_unitary(&c).unwrap();
        for col in 0..8 {
            let expected: Vec<C> = dense_u.column(col).to_vec();
            prop_assert!(max_diff(table.column(col), &expected) <= 1e-12);
        }
    }

    #[test]
    fn loop_elimination_preserves_unitary(c in circuit_strategy(3, CONTROLLED, 16)) {
        let reduced = eliminate_loops(&c);
        prop_assert!(reduced.len() <= c.len());
        let d = circuit_unitary(&reduced).unwrap().max_abs_diff(&circuit_unitary(&c).unwrap());
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn frontier_gates_are_disjoint(c in circuit_strategy(4, CONTROLLED, 14)) {
        let dag = to_dag(&c);
        let frontier = dag.frontier();
        for (i, &a) in frontier.iter().enumerate() {
            for &b in &frontier[i + 1..] {
                prop_assert!(c.gates()[a].is_disjoint(&c.gates()[b]));
            }
        }
        // Every frontier gate is the last gate on each of its qubits.
        for &f in &frontier {
            let g = c.gates()[f];
            prop_assert!(c.gates()[f + 1..].iter().all(|h| h.is_disjoint(&g)));
        }
    }

    #[test]
    fn swapping_disjoint_neighbours_keeps_key_and_pairs(
        before in prop::collection::vec(gate_strategy(4, CONTROLLED), 0..5),
        after in prop::collection::vec(gate_strategy(4, CONTROLLED), 0..5),
        kinds in (prop::sample::select(CONTROLLED), prop::sample::select(CONTROLLED)),
        qubits in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let a = GateInstance::controlled(kinds.0, qubits[0], qubits[1]);
        let b = GateInstance::controlled(kinds.1, qubits[2], qubits[3]);
        let build = |x: GateInstance, y: GateInstance| {
            let gates = before.iter().copied().chain([x, y]).chain(after.iter().copied()).collect();
            Circuit::from_gates(4, gates).unwrap()
        };
        let (c, swapped) = (build(a, b), build(b, a));
        prop_assert_eq!(dedup_key(&c).unwrap(), dedup_key(&swapped).unwrap());

        let vocab = GateVocabulary::new(4, KindSet::SYNTHESIS).unwrap();
        let canon = |c: &Circuit| {
            let mut v: Vec<(Vec<i64>, Vec<u8>)> = extract_pairs(c, &vocab)
                .unwrap()
                .into_iter()
                .map(|p| (p.input.iter().map(|x| (x * 1e9).round() as i64).collect(), p.target))
                .collect();
            v.sort();
            v
        };
        prop_assert_eq!(canon(&c), canon(&swapped));
    }

    #[test]
    fn pair_inputs_are_consistent(c in circuit_strategy(3, CONTROLLED, 8)) {
        let vocab = GateVocabulary::new(3, KindSet::SYNTHESIS).unwrap();
        let pairs = extract_pairs(&c, &vocab).unwrap();
        if c.is_empty() {
            prop_assert!(pairs.is_empty());
            return Ok(());
        }
        // The first pair is the full circuit labelled with its whole frontier.
        let full = circuit_unitary(&c).unwrap();
        prop_assert!(pairs[0].input_table(3).unwrap().max_abs_diff(&full) <= 1e-12);
        let frontier: Vec<usize> = to_dag(&c).frontier().iter().map(|&i| vocab.index_of(&c.gates()[i]).unwrap()).collect();
        let mut hot: Vec<usize> = pairs[0].hot_indices().collect();
        let mut expected = frontier.clone();
        hot.sort();
        expected.sort();
        prop_assert_eq!(hot, expected);
        for p in &pairs {
            let t = p.input_table(3).unwrap();
            prop_assert!(t.unitarity_deviation() <= 1e-12);
            prop_assert!(p.hot_indices().count() >= 1);
        }
    }

    #[test]
    fn relabeling_commutes_with_simulation_and_extraction(
        c in circuit_strategy(3, ALL, 7),
        perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let vocab = GateVocabulary::new(3, KindSet::new(GateKind::ALL)).unwrap();
        let r = QubitRelabeling::new(perm, &vocab).unwrap();
        let moved = r.circuit(&c).unwrap();
        let pairs = extract_pairs(&c, &vocab).unwrap();
        let moved_pairs = extract_pairs(&moved, &vocab).unwrap();
        prop_assert_eq!(pairs.len(), moved_pairs.len());
        let mut input = vec![0.0; 2 * 64];
        let mut target = vec![0u8; vocab.len()];
        for (p, q) in pairs.iter().zip(&moved_pairs) {
            r.input_into(&p.input, &mut input);
            r.target_into(&p.target, &mut target);
            let d = input.iter().zip(&q.input).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            prop_assert!(d <= 1e-12, "table differs by {}", d);
            prop_assert_eq!(&target, &q.target);
        }
    }
}

#[test]
fn dense_oracle_agrees_with_basis_images() {
    // CX(0,1) on two qubits maps |10> to |11> with qubit 0 as the high bit.
    let out = apply_gate(&basis_state(0b10, 2).unwrap(), GateInstance::cx(0, 1));
    assert_eq!(out.amplitudes()[0b11], C::new(1.0, 0.0));
    let d = dense(GateInstance::cx(0, 1), 2);
    assert_eq!(d[[0b11, 0b10]], C::new(1.0, 0.0));
}
