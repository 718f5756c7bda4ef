//! Gate sequences, their dependency DAG, frontier sets and text format.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gates::{inverse_of, GateInstance, GateKind, MAX_QUBITS};
use crate::state::circuit_unitary;

/// Largest register for which [`dedup_key`] materializes the full table.
pub const DEDUP_MAX_QUBITS: usize = 6;

/// A gate sequence in execution order (left to right).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateInstance>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        Ok(Circuit {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<GateInstance>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, g: GateInstance) -> Result<()> {
        g.validate(self.n_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateInstance] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn quantum_cost(&self) -> usize {
        quantum_cost(self)
    }

    /// The circuit that undoes this one: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(|g| inverse_of(*g)).collect(),
        }
    }

    /// Parses comma- or newline-separated gate tokens. Lines starting with
    /// `#` are ignored.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let mut c = Circuit::new(n_qubits)?;
        for (line_no, line) in text.lines().enumerate() {
            if line.trim_start().starts_with('#') {
                continue;
            }
            for (column, token) in split_tokens(line) {
                let g = parse_token(token).map_err(|message| Error::Parse {
                    line: line_no + 1,
                    column,
                    message,
                })?;
                g.validate(n_qubits).map_err(|e| Error::Parse {
                    line: line_no + 1,
                    column,
                    message: e.to_string(),
                })?;
                c.gates.push(g);
            }
        }
        Ok(c)
    }

    /// Gate tokens joined by `", "`.
    pub fn to_sequence_string(&self) -> String {
        self.gates
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Circuit file: `# n=<qubits>` header, then one gate token per line.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("# n={}\n", self.n_qubits);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_file_str(text: &str) -> Result<Self> {
        let (line_no, header) = text
            .lines()
            .enumerate()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or(Error::Parse {
                line: 1,
                column: 1,
                message: "missing `# n=<qubits>` header".into(),
            })?;
        let n = header
            .trim()
            .strip_prefix('#')
            .map(str::trim)
            .and_then(|h| h.strip_prefix("n="))
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse {
                line: line_no + 1,
                column: 1,
                message: format!("expected `# n=<qubits>` header, found {header:?}"),
            })?;
        Circuit::parse(text, n)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(Error::at_path(path))?;
        Circuit::from_file_str(&text)
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_file_string()).map_err(Error::at_path(path))
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sequence_string())
    }
}

/// Splits a line on commas outside parentheses. Yields 1-based columns.
fn split_tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut push = |s: usize, e: usize| {
        let raw = &line[s..e];
        let trimmed = raw.trim_start();
        let col = s + (raw.len() - trimmed.len());
        let tok = trimmed.trim_end();
        if !tok.is_empty() {
            out.push((line[..col].chars().count() + 1, tok));
        }
    };
    for (i, ch) in line.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                push(start, i);
                start = i + 1;
            }
            _ => {}
        }
    }
    push(start, line.len());
    out
}

fn parse_token(token: &str) -> std::result::Result<GateInstance, String> {
    let open = token
        .find('(')
        .ok_or_else(|| format!("malformed gate token {token:?}"))?;
    let body = token[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| format!("malformed gate token {token:?}"))?;
    let kind = GateKind::from_str(token[..open].trim()).map_err(|e| e.to_string())?;
    let args = body
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<u8>()
                .map_err(|_| format!("bad qubit index {:?} in {token:?}", a.trim()))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match (kind.is_controlled(), args.as_slice()) {
        (true, [c, t]) => Ok(GateInstance {
            kind,
            control: Some(*c),
            target: *t,
        }),
        (false, [t]) => Ok(GateInstance {
            kind,
            control: None,
            target: *t,
        }),
        _ => Err(format!(
            "{kind} takes {} operand(s), got {}",
            if kind.is_controlled() { 2 } else { 1 },
            args.len()
        )),
    }
}

/// Number of two-qubit (controlled) gates.
pub fn quantum_cost(c: &Circuit) -> usize {
    c.gates.iter().filter(|g| g.kind.is_controlled()).count()
}

/// Dependency DAG: an edge `i → j` when gate `j` is the next gate after `i`
/// acting on a qubit they share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitDag {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    out_degree: Vec<usize>,
}

impl CircuitDag {
    pub fn len(&self) -> usize {
        self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.n_nodes == 0
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Nodes without outgoing edges, ascending.
    pub fn frontier(&self) -> Vec<usize> {
        (0..self.n_nodes).filter(|&i| self.out_degree[i] == 0).collect()
    }
}

pub fn to_dag(c: &Circuit) -> CircuitDag {
    let mut last_on: Vec<Option<usize>> = vec![None; c.n_qubits];
    let mut edges = Vec::new();
    let mut out_degree = vec![0; c.len()];
    for (j, g) in c.gates.iter().enumerate() {
        let mut qubits = vec![g.target()];
        qubits.extend(g.control());
        let mut preds: Vec<usize> = qubits.iter().filter_map(|&q| last_on[q]).collect();
        preds.sort_unstable();
        preds.dedup();
        for i in preds {
            edges.push((i, j));
            out_degree[i] += 1;
        }
        for q in qubits {
            last_on[q] = Some(j);
        }
    }
    CircuitDag {
        n_nodes: c.len(),
        edges,
        out_degree,
    }
}

/// Whether appending `g` to `gates` would immediately undo an earlier gate:
/// the last gate touching any of `g`'s qubits is `g`'s inverse.
pub fn forms_loop(gates: &[GateInstance], g: GateInstance) -> bool {
    gates
        .iter()
        .rev()
        .find(|prev| !prev.is_disjoint(&g))
        .is_some_and(|prev| *prev == inverse_of(g))
}

/// Removes gate/inverse pairs separated only by gates on disjoint qubits,
/// repeating until no such pair remains.
pub fn eliminate_loops(c: &Circuit) -> Circuit {
    let mut gates = c.gates.clone();
    'outer: loop {
        for i in 0..gates.len() {
            let partner = gates[i + 1..]
                .iter()
                .position(|h| !h.is_disjoint(&gates[i]))
                .map(|off| i + 1 + off);
            if let Some(j) = partner {
                if gates[j] == inverse_of(gates[i]) {
                    gates.remove(j);
                    gates.remove(i);
                    continue 'outer;
                }
            }
        }
        break;
    }
    Circuit {
        n_qubits: c.n_qubits,
        gates,
    }
}

/// Identifies circuits for corpus deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey([u8; 16]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DedupMode {
    /// Equal unitaries (entries rounded to 9 decimals) collide.
    #[default]
    Semantic,
    /// Only identical gate sequences collide.
    Sequence,
}

impl FromStr for DedupMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semantic" => Ok(DedupMode::Semantic),
            "sequence" => Ok(DedupMode::Sequence),
            other => Err(Error::Config(format!("unknown dedup mode {other:?}"))),
        }
    }
}

/// Hash of the circuit unitary with every real and imaginary part rounded
/// to 9 decimal places.
pub fn dedup_key(c: &Circuit) -> Result<DedupKey> {
    if c.n_qubits > DEDUP_MAX_QUBITS {
        return Err(Error::QubitCount(c.n_qubits));
    }
    let table = circuit_unitary(c)?;
    let mut hasher = Sha256::new();
    hasher.update((c.n_qubits as u32).to_le_bytes());
    for z in table.as_slice() {
        for part in [z.re, z.im] {
            let rounded = (part * 1e9).round() as i64;
            hasher.update(rounded.to_le_bytes());
        }
    }
    Ok(DedupKey(truncate(&hasher.finalize())))
}

pub fn sequence_key(c: &Circuit) -> DedupKey {
    let mut hasher = Sha256::new();
    hasher.update(c.to_file_string().as_bytes());
    DedupKey(truncate(&hasher.finalize()))
}

pub fn key_for(c: &Circuit, mode: DedupMode) -> Result<DedupKey> {
    match mode {
        DedupMode::Semantic => dedup_key(c),
        DedupMode::Sequence => Ok(sequence_key(c)),
    }
}

fn truncate(digest: &[u8]) -> [u8; 16] {
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest[..16]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateInstance as G;

    pub(crate) fn hng() -> Circuit {
        Circuit::from_gates(
            4,
            vec![
                G::cv(0, 3),
                G::cv(1, 3),
                G::cv(2, 3),
                G::cx(0, 2),
                G::cx(1, 2),
                G::cvdg(2, 3),
            ],
        )
        .unwrap()
    }

    fn sandwiched_cx() -> Circuit {
        Circuit::from_gates(2, vec![G::h(0), G::h(1), G::cx(0, 1), G::h(0), G::h(1)]).unwrap()
    }

    #[test]
    fn dag_frontiers() {
        let dag = to_dag(&sandwiched_cx());
        assert_eq!(dag.frontier(), vec![3, 4]);

        let single = Circuit::from_gates(2, vec![G::cx(0, 1)]).unwrap();
        let dag = to_dag(&single);
        assert_eq!(dag.len(), 1);
        assert!(dag.edges().is_empty());
        assert_eq!(dag.frontier(), vec![0]);

        assert_eq!(to_dag(&hng()).frontier(), vec![5]);
    }

    #[test]
    fn costs() {
        assert_eq!(quantum_cost(&hng()), 6);
        let c = Circuit::from_gates(2, vec![G::h(0), G::cx(0, 1)]).unwrap();
        assert_eq!(quantum_cost(&c), 1);
    }

    #[test]
    fn loop_elimination_examples() {
        let c = Circuit::from_gates(1, vec![G::h(0), G::h(0)]).unwrap();
        assert!(eliminate_loops(&c).is_empty());

        let c = Circuit::from_gates(2, vec![G::cv(0, 1), G::cvdg(0, 1)]).unwrap();
        assert!(eliminate_loops(&c).is_empty());

        let c = Circuit::from_gates(4, vec![G::cv(0, 1), G::cx(2, 3), G::cvdg(0, 1)]).unwrap();
        assert_eq!(eliminate_loops(&c).gates(), &[G::cx(2, 3)]);

        // Blocked by a gate sharing a qubit.
        let c = Circuit::from_gates(3, vec![G::cv(0, 1), G::cx(1, 2), G::cvdg(0, 1)]).unwrap();
        assert_eq!(eliminate_loops(&c), c);

        // Cascading removal.
        let c = Circuit::from_gates(2, vec![G::cv(0, 1), G::cx(1, 0), G::cx(1, 0), G::cvdg(0, 1)]).unwrap();
        assert!(eliminate_loops(&c).is_empty());
    }

    #[test]
    fn dedup_keys() {
        let a = Circuit::from_gates(1, vec![G::h(0), G::h(0)]).unwrap();
        let b = Circuit::new(1).unwrap();
        assert_eq!(dedup_key(&a).unwrap(), dedup_key(&b).unwrap());

        let a = Circuit::from_gates(2, vec![G::cx(0, 1)]).unwrap();
        let b = Circuit::from_gates(2, vec![G::cx(1, 0)]).unwrap();
        assert_ne!(dedup_key(&a).unwrap(), dedup_key(&b).unwrap());

        let swapped = Circuit::from_gates(2, vec![G::h(0), G::h(1), G::cx(0, 1), G::h(1), G::h(0)]).unwrap();
        assert_eq!(dedup_key(&sandwiched_cx()).unwrap(), dedup_key(&swapped).unwrap());
        assert_ne!(sequence_key(&sandwiched_cx()), sequence_key(&swapped));

        assert!(dedup_key(&Circuit::new(7).unwrap()).is_err());
    }

    #[test]
    fn parse_hng_sequence() {
        let c = Circuit::parse("CV(0,3), CV(1,3), CV(2,3), CX(0,2), CX(1,2), CVDG(2,3)", 4).unwrap();
        assert_eq!(c, hng());
        assert!(Circuit::parse("", 4).unwrap().is_empty());
    }

    #[test]
    fn parse_errors_carry_positions() {
        match Circuit::parse("CX(0,0)", 2) {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (1, 1));
                assert!(message.contains("control equals target"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        match Circuit::parse("CX(0,1)\nH(0), CZ(0,1)", 2) {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 7));
                assert!(message.contains("unknown gate kind"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(Circuit::parse("CX(1)", 2).is_err());
        assert!(Circuit::parse("H(0,1)", 2).is_err());
        assert!(Circuit::parse("H(2)", 2).is_err());
        assert!(Circuit::parse("H(0", 2).is_err());
    }

    #[test]
    fn file_format() {
        let text = hng().to_file_string();
        assert!(text.starts_with("# n=4\nCV(0,3)\n"));
        assert_eq!(Circuit::from_file_str(&text).unwrap(), hng());
        assert!(Circuit::from_file_str("CX(0,1)\n").is_err());
    }

    #[test]
    fn loop_detection_on_append() {
        let gates = [G::cv(0, 1), G::cx(2, 3)];
        assert!(forms_loop(&gates, G::cvdg(0, 1)));
        assert!(!forms_loop(&gates, G::cv(0, 1)));
        assert!(!forms_loop(&gates, G::cvdg(1, 0)));
        assert!(forms_loop(&gates, G::cx(2, 3)));
    }
}
