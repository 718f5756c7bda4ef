//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF, NegativeBinomial};

use qsynth::circuit::Circuit;
use qsynth::cvnn::{gradients, softmax, Activation, Network, NetworkConfig};
use qsynth::dataset::extract_pairs;
use qsynth::gates::{matrix_of, GateInstance as G, GateKind, GateVocabulary, KindSet};
use qsynth::search::{guided_search, random_search, run_with_verification, GatePolicy, SearchConfig};
use qsynth::state::{circuit_unitary, OperatorTable};
use qsynth::target::{hng_sequence, spec_to_targets, Benchmark, TargetStates};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn qsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsynth"))
        .args(args)
        .output()
        .expect("qsynth binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_ok(args: &[&str]) -> Result<String, String> {
    let o = qsynth(args);
    if o.status.success() {
        Ok(stdout(&o))
    } else {
        Err(format!(
            "`qsynth {}` exited with {:?}: {}",
            args.join(" "),
            o.status.code(),
            String::from_utf8_lossy(&o.stderr).trim()
        ))
    }
}

fn circuits_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/circuits")
}

fn max_diff(a: &ndarray::Array2<C>, b: &ndarray::Array2<C>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn two_by_two(kind: GateKind) -> ndarray::Array2<C> {
    let m = kind.target_matrix();
    ndarray::Array2::from_shape_fn((2, 2), |(r, c)| m[r][c])
}

fn gate_algebra() -> Check {
    let (x, v, vdg) = (
        two_by_two(GateKind::X),
        two_by_two(GateKind::V),
        two_by_two(GateKind::Vdg),
    );
    let eye2 = ndarray::Array2::<C>::eye(2);
    let eye4 = ndarray::Array2::<C>::eye(4);
    let (cx, cv) = (matrix_of(GateKind::Cx), matrix_of(GateKind::Cv));
    let errs = [
        ("V·V=X", max_diff(&v.dot(&v), &x)),
        ("V·V†=I", max_diff(&v.dot(&vdg), &eye2)),
        ("CX²=I", max_diff(&cx.dot(&cx), &eye4)),
        ("CV²=CX", max_diff(&cv.dot(&cv), &cx)),
    ];
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let detail = errs
        .iter()
        .map(|(n, e)| format!("{n} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bell() -> Check {
    let mut t = OperatorTable::identity(2).map_err(|e| e.to_string())?;
    t.apply(G::h(0));
    t.apply(G::cx(0, 1));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let expected = [[r, 0.0, 0.0, r], [0.0, r, r, 0.0], [r, 0.0, 0.0, -r], [0.0, r, -r, 0.0]];
    let mut worst: f64 = 0.0;
    for (j, col) in expected.iter().enumerate() {
        for (i, &e) in col.iter().enumerate() {
            worst = worst.max((t.entry(i, j) - C::new(e, 0.0)).norm());
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max error {worst:.1e}"))
    } else {
        Err(format!("max error {worst:.1e}"))
    }
}

fn convention_pin() -> Check {
    let hng = hng_sequence();
    let spec = Benchmark::Hng.truth_table().map_err(|e| e.to_string())?;
    let target = spec_to_targets(&spec);
    let u = circuit_unitary(&hng).map_err(|e| e.to_string())?;
    let d = u.max_abs_diff(target.table());
    if d == 0.0 && hng.quantum_cost() == 6 {
        Ok("HNG sequence equals its truth table exactly, cost 6".into())
    } else {
        Err(format!("difference {d:.3e}, cost {}", hng.quantum_cost()))
    }
}

fn reference_suite() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for b in Benchmark::ALL {
        let path = circuits_dir().join(format!("{}.qc", b.name().to_lowercase()));
        let path = path.to_string_lossy().into_owned();
        let o = qsynth(&["verify", "--circuit", &path, "--benchmark", b.name()]);
        let cost = Circuit::read(&path).map_err(|e| e.to_string())?.quantum_cost();
        match o.status.code() {
            Some(0) => notes.push(format!("{} ok (cost {cost})", b.name())),
            Some(1) if stdout(&o).contains("mismatch:") && stdout(&o).contains("  input ") => {
                notes.push(format!("{} mismatch reported (cost {cost})", b.name()))
            }
            code => {
                ok = false;
                notes.push(format!("{} unexpected exit {code:?}", b.name()));
            }
        }
        if b == Benchmark::Tsg && cost != 19 {
            ok = false;
            notes.push(format!("TSG cost {cost} != 19"));
        }
    }
    if ok {
        Ok(notes.join("; "))
    } else {
        Err(notes.join("; "))
    }
}

fn frontier_fidelity() -> Check {
    let vocab = GateVocabulary::new(2, KindSet::new([GateKind::H, GateKind::Cx])).map_err(|e| e.to_string())?;
    let order: Vec<String> = vocab.entries().iter().map(|g| g.to_string()).collect();
    if order != ["H(0)", "H(1)", "CX(0,1)", "CX(1,0)"] {
        return Err(format!("vocabulary order {order:?}"));
    }
    let gates = vec![G::h(0), G::h(1), G::cx(0, 1), G::h(0), G::h(1)];
    let circuit = Circuit::from_gates(2, gates.clone()).map_err(|e| e.to_string())?;
    let pairs = extract_pairs(&circuit, &vocab).map_err(|e| e.to_string())?;
    // Forward-simulated tables of the first three prefixes.
    let sim = |gs: &[G]| {
        let mut t = OperatorTable::identity(2).unwrap();
        for g in gs {
            t.apply(*g);
        }
        t.to_interleaved()
    };
    let sv5 = sim(&gates);
    let sv4 = sim(&[G::h(0), G::h(1), G::cx(0, 1), G::h(0)]);
    let sv3 = sim(&[G::h(0), G::h(1), G::cx(0, 1), G::h(1)]);
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
    let wanted: [(&[f64], [u8; 4]); 3] = [(&sv5, [1, 1, 0, 0]), (&sv4, [1, 0, 0, 0]), (&sv3, [0, 1, 0, 0])];
    for (sv, label) in wanted {
        if !pairs.iter().any(|p| p.target == label && close(&p.input, sv)) {
            return Err(format!("missing pair labelled {label:?}"));
        }
    }
    Ok(format!("{} pairs, required three present", pairs.len()))
}

/// Every parameter of a network as a mutable reference, in a fixed order.
fn params(net: &mut Network) -> Vec<&mut f64> {
    let mut out: Vec<&mut f64> = Vec::new();
    for l in &mut net.complex {
        out.extend(l.w_re.iter_mut());
        out.extend(l.w_im.iter_mut());
        out.extend(l.b_re.iter_mut());
        out.extend(l.b_im.iter_mut());
    }
    for l in &mut net.real {
        out.extend(l.w.iter_mut());
        out.extend(l.b.iter_mut());
    }
    out
}

fn gradient_check() -> Check {
    use rand::Rng;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let activation = if seed % 2 == 0 {
            Activation::SplitCRelu
        } else {
            Activation::ModRelu { bias: -0.05 }
        };
        let mut net = Network::new(&NetworkConfig {
            n_qubits: 1,
            vocab_size: 6,
            complex_widths: vec![5, 4, 3],
            real_hidden: 7,
            activation,
            seed,
        })
        .map_err(|e| e.to_string())?;
        for l in &mut net.complex {
            l.b_re.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
            l.b_im.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
        }
        let inputs = ndarray::Array2::from_shape_fn((5, 8), |_| rng.random_range(-1.0..1.0));
        let mut targets = ndarray::Array2::zeros((5, 6));
        for r in 0..5 {
            targets[[r, rng.random_range(0..6)]] = 1.0;
            targets[[r, rng.random_range(0..6)]] = 1.0;
        }
        let (_, grads) = gradients(&net, inputs.view(), targets.view()).map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = grads.slices().concat();
        let count = analytic.len();
        let loss = |net: &Network| gradients(net, inputs.view(), targets.view()).unwrap().0;
        for _ in 0..30 {
            let k = rng.random_range(0..count);
            let orig = *params(&mut net)[k];
            *params(&mut net)[k] = orig + h;
            let up = loss(&net);
            *params(&mut net)[k] = orig - h;
            let down = loss(&net);
            *params(&mut net)[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        let probs = net.forward_batch(inputs.view()).map_err(|e| e.to_string())?;
        for row in probs.rows() {
            worst_sum = worst_sum.max((row.sum() - 1.0).abs());
        }
    }
    let uniform = softmax(&[0.0; 36]);
    worst_sum = worst_sum.max((uniform.iter().sum::<f64>() - 1.0).abs());
    let detail = format!("max relative error {worst:.2e}, softmax sum error {worst_sum:.1e}");
    if worst < 1e-4 && worst_sum <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

fn desk_scale(dir: &Path) -> Check {
    let start = Instant::now();
    let data = dir.join("desk.aqcd").to_string_lossy().into_owned();
    let model = dir.join("desk.aqcw").to_string_lossy().into_owned();
    let out = dir.join("desk-bench").to_string_lossy().into_owned();
    let gen = run_ok(&[
        "gen-data", "--qubits", "4", "--cost", "10", "--count", "10000", "--seed", "1", "--out", &data,
    ])?;
    let train = run_ok(&["train", "--data", &data, "--out", &model, "--seed", "1"])?;
    if !train.contains("epochs=40 batch=64") {
        return Err("train did not echo its defaults".into());
    }
    let bench = run_ok(&[
        "bench",
        "--model",
        &model,
        "--benchmarks",
        "HNG,PFAG",
        "--trials",
        "20",
        "--max-restarts",
        "1000",
        "--out-dir",
        &out,
        "--seed",
        "1",
    ])?;
    let elapsed = start.elapsed();
    let mut notes = vec![
        format!("pairs={}", field(&gen, "pairs").unwrap_or("?")),
        format!("final_loss={}", field(&train, "final_loss").unwrap_or("?")),
    ];
    let mut ok = elapsed <= Duration::from_secs(3600);
    for line in bench.lines() {
        let (Some(name), Some(succ), Some(trials)) = (
            field(line, "benchmark"),
            field(line, "successes"),
            field(line, "trials"),
        ) else {
            continue;
        };
        let succ: usize = succ.parse().unwrap_or(0);
        let trials: usize = trials.parse().unwrap_or(1);
        let min_cost = field(line, "min_cost").unwrap_or("");
        ok &= 2 * succ >= trials && min_cost == "6";
        notes.push(format!(
            "{name} {succ}/{trials} min_cost={min_cost} mean_restarts={}",
            field(line, "mean_restarts").unwrap_or("")
        ));
    }
    if notes.len() < 4 {
        ok = false;
        notes.push("bench summary missing".into());
    }
    notes.push(format!("{:.0}s", elapsed.as_secs_f64()));
    if ok {
        Ok(notes.join(", "))
    } else {
        Err(notes.join(", "))
    }
}

/// Emits, one-hot, the gate of `circuit` whose removal the residual calls for.
struct Oracle {
    vocab: GateVocabulary,
    steps: Vec<(OperatorTable, usize)>,
}

impl GatePolicy for Oracle {
    fn n_qubits(&self) -> usize {
        self.vocab.n_qubits()
    }
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
    fn gate_probabilities(&self, residual: &OperatorTable) -> qsynth::Result<Vec<f64>> {
        let mut p = vec![0.0; self.vocab.len()];
        if let Some((_, k)) = self.steps.iter().find(|(t, _)| t.max_abs_diff(residual) < 1e-9) {
            p[*k] = 1.0;
        }
        Ok(p)
    }
}

fn substitutes() -> Check {
    let mut notes = Vec::new();

    // (a) search-space size.
    let o = run_ok(&["random-baseline", "--benchmark", "HNG", "--budget-seconds", "0.5"])?;
    let space = field(&o, "search_space").unwrap_or("");
    if space != "2176782336" {
        return Err(format!("(a) search space {space}"));
    }
    notes.push(format!(
        "(a) 36^6={space}, est_hours={}",
        field(&o, "estimated_hours").unwrap_or("?")
    ));

    // (b) planted cost-1 target under depth-1 random search.
    let vocab = GateVocabulary::new(4, KindSet::SYNTHESIS).map_err(|e| e.to_string())?;
    let planted = Circuit::from_gates(4, vec![G::cx(0, 1)]).unwrap();
    let target = TargetStates::from_table(circuit_unitary(&planted).unwrap()).unwrap();
    let cfg = SearchConfig {
        max_depth: 1,
        max_restarts: 100_000,
        ..SearchConfig::default()
    };
    let (mut first, mut failures) = (0u64, 0u64);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = run_with_verification(&target, &cfg, || random_search(&target, &vocab, &cfg, &mut rng))
            .map_err(|e| e.to_string())?;
        first += (r.restarts_used == 0) as u64;
        failures += r.restarts_used as u64;
    }
    let two_sided = |cdf: f64, at_least: f64| (2.0 * cdf.min(at_least)).min(1.0);
    let b = Binomial::new(1.0 / 36.0, 200).unwrap();
    let p_first = two_sided(b.cdf(first), if first == 0 { 1.0 } else { b.sf(first - 1) });
    let nb = NegativeBinomial::new(200.0, 1.0 / 36.0).unwrap();
    let p_total = two_sided(nb.cdf(failures), if failures == 0 { 1.0 } else { nb.sf(failures - 1) });
    if !(p_first > 0.001 && p_total > 0.001) {
        return Err(format!("(b) p-values {p_first:.4} / {p_total:.4}"));
    }
    notes.push(format!(
        "(b) first-try {first}/200 p={p_first:.3}, mean restarts {:.1} p={p_total:.3}",
        failures as f64 / 200.0
    ));

    // (c) oracle-guided HNG.
    let hng = hng_sequence();
    let mut residual = circuit_unitary(&hng).unwrap();
    let mut steps = Vec::new();
    for g in hng.gates().iter().rev() {
        steps.push((residual.clone(), vocab.index_of(g).unwrap()));
        residual.apply_inverse(*g);
    }
    let oracle = Oracle {
        vocab: vocab.clone(),
        steps,
    };
    let target = Benchmark::Hng.targets().unwrap();
    let cfg = SearchConfig::for_cost(Some(6));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = run_with_verification(&target, &cfg, || {
        guided_search(&target, &oracle, &vocab, &cfg, &mut rng)
    })
    .map_err(|e| e.to_string())?;
    let cost = r.circuit.as_ref().map(Circuit::quantum_cost);
    if r.restarts_used != 0 || cost != Some(6) {
        return Err(format!("(c) restarts {} cost {cost:?}", r.restarts_used));
    }
    notes.push("(c) oracle HNG in 1 attempt".into());
    Ok(notes.join("; "))
}

/// Circuits written by `synth` with the desk-scale model all pass `verify`.
fn reverification(dir: &Path) -> Check {
    let model = dir.join("desk.aqcw");
    if !model.exists() {
        return Err("desk-scale model missing".into());
    }
    let model = model.to_string_lossy().into_owned();
    let mut checked = 0;
    for b in ["HNG", "PFAG"] {
        for seed in 0..3 {
            let out = dir.join(format!("{b}-{seed}.qc")).to_string_lossy().into_owned();
            let seed = seed.to_string();
            let o = qsynth(&[
                "synth",
                "--model",
                &model,
                "--benchmark",
                b,
                "--seed",
                &seed,
                "--out",
                &out,
            ]);
            match o.status.code() {
                Some(0) => {
                    run_ok(&["verify", "--circuit", &out, "--benchmark", b])?;
                    checked += 1;
                }
                Some(3) => {}
                code => return Err(format!("synth {b} exited with {code:?}")),
            }
        }
    }
    Ok(format!("{checked} synthesized circuits re-verified"))
}

fn determinism(dir: &Path) -> Check {
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>, String), String> {
        let data = dir.join(format!("det-{tag}.aqcd")).to_string_lossy().into_owned();
        let model = dir.join(format!("det-{tag}.aqcw")).to_string_lossy().into_owned();
        run_ok(&[
            "gen-data", "--cost", "6", "--count", "300", "--seed", "11", "--out", &data,
        ])?;
        run_ok(&[
            "train", "--data", &data, "--epochs", "2", "--width", "32", "--layers", "3", "--seed", "11", "--out",
            &model,
        ])?;
        let o = qsynth(&[
            "synth",
            "--model",
            &model,
            "--benchmark",
            "HNG",
            "--max-restarts",
            "20",
            "--seed",
            "11",
        ]);
        let text: String = stdout(&o)
            .lines()
            .map(|l| {
                l.split_whitespace()
                    .filter(|t| !t.starts_with("elapsed_s="))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n");
        let read = |p: &str| std::fs::read(p).map_err(|e| e.to_string());
        Ok((
            read(&data)?,
            read(&model)?,
            format!("exit={:?}\n{text}", o.status.code()),
        ))
    };
    let (a, b) = (run("a")?, run("b")?);
    let same = (a.0 == b.0, a.1 == b.1, a.2 == b.2);
    let detail = format!(
        "dataset identical={}, weights identical={}, search identical={}",
        same.0, same.1, same.2
    );
    if same == (true, true, true) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let checks: Vec<Criterion> = vec![
        ("1 gate algebra exactness", Box::new(gate_algebra)),
        ("2 Bell reproduction", Box::new(bell)),
        ("3 convention pin", Box::new(convention_pin)),
        ("4 reference circuit suite", Box::new(reference_suite)),
        ("5 frontier extraction fidelity", Box::new(frontier_fidelity)),
        ("6 gradient correctness", Box::new(gradient_check)),
        ("7 desk-scale synthesis", Box::new(|| desk_scale(dir.path()))),
        ("8 substitute properties", Box::new(substitutes)),
        (
            "8d re-verification of synthesized circuits",
            Box::new(|| reverification(dir.path())),
        ),
        ("9 determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
