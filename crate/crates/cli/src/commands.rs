use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qsynth::bench::{run_trials, write_reports};
use qsynth::circuit::Circuit;
use qsynth::cvnn::{train, Activation, Network, NetworkConfig, TrainConfig};
use qsynth::dataset::{write_corpus, CorpusConfig, Dataset};
use qsynth::gates::{GateVocabulary, KindSet};
use qsynth::search::{guided_search, random_baseline, run_with_verification, verify_circuit, SearchConfig};
use qsynth::state::circuit_unitary;
use qsynth::target::{bit_string, load_spec, TargetStates};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{
    ActivationArg, BaselineArgs, BenchArgs, Cli, Command, Failure, GenDataArgs, ModelArgs, SearchArgs, SynthArgs,
    TargetArgs, TrainArgs, VerifyArgs,
};

type Outcome = Result<(), Failure>;

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::GenData(a) => gen_data(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Synth(a) => synth(cli, a),
        Command::Bench(a) => bench(cli, a),
        Command::Verify(a) => verify(cli, a),
        Command::RandomBaseline(a) => baseline(cli, a),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check_qubits(cli: &Cli, found: usize, what: &str) -> Outcome {
    match cli.qubits {
        Some(q) if q as usize != found => Err(usage(format!("--qubits {q} does not match the {found}-qubit {what}"))),
        _ => Ok(()),
    }
}

fn activation(m: &ModelArgs) -> Activation {
    match m.activation {
        ActivationArg::Crelu => Activation::SplitCRelu,
        ActivationArg::Modrelu => Activation::ModRelu { bias: m.modrelu_bias },
    }
}

fn gen_data(cli: &Cli, a: &GenDataArgs) -> Outcome {
    let cfg = CorpusConfig {
        n_qubits: cli.qubits.unwrap_or(4) as usize,
        kinds: KindSet::parse_list(&a.kinds)?,
        circuit_cost: a.cost,
        circuit_count: a.count,
        seed: cli.seed,
        dedup: a.dedup.into(),
    };
    let report = write_corpus(&cfg, &a.out)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "circuits={} pairs={} attempts={} duplicates={}",
        report.circuits, report.pairs, report.attempts, report.duplicates_rejected
    );
    Ok(())
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Outcome {
    if !(a.lr > 0.0 && a.lr.is_finite()) {
        return Err(usage(format!("--lr must be positive, got {}", a.lr)));
    }
    let data = Dataset::load(&a.data)?;
    check_qubits(cli, data.n_qubits(), "dataset")?;
    let cfg = NetworkConfig {
        n_qubits: data.n_qubits(),
        vocab_size: data.vocab_size(),
        complex_widths: vec![a.width; a.layers],
        real_hidden: a.hidden.unwrap_or(2 * a.width),
        activation: activation(&a.model),
        seed: cli.seed,
    };
    let mut net = Network::new(&cfg)?;
    let tc = TrainConfig {
        batch_size: a.batch_size,
        epochs: a.epochs,
        learning_rate: a.lr,
        seed: cli.seed,
        relabel_qubits: !a.no_relabel,
    };
    println!("epochs={} batch={}", tc.epochs, tc.batch_size);
    println!("pairs={} parameters={}", data.len(), net.parameter_count());
    let start = Instant::now();
    let log = train(&mut net, &data, &tc, |epoch, loss| {
        println!(
            "epoch {}/{} loss={loss:.6} elapsed_s={:.1}",
            epoch + 1,
            tc.epochs,
            start.elapsed().as_secs_f64()
        );
    })?;
    println!("initial_loss={:.6} final_loss={:.6}", log.initial_loss, log.final_loss);
    net.save(&a.out)?;
    Ok(())
}

/// The target and, for named benchmarks, its expected cost.
fn resolve_target(t: &TargetArgs) -> Result<(String, TargetStates, Option<usize>), Failure> {
    match (t.benchmark, &t.spec) {
        (Some(b), None) => Ok((b.name().to_string(), b.targets()?, Some(b.expected_cost()))),
        (None, Some(path)) => {
            let name = path
                .file_stem()
                .map_or("spec".into(), |s| s.to_string_lossy().into_owned());
            Ok((name, load_spec(path)?, None))
        }
        _ => Err(usage("exactly one of --benchmark and --spec is required")),
    }
}

fn search_config(s: &SearchArgs, expected_cost: Option<usize>) -> Result<SearchConfig, Failure> {
    let mut cfg = SearchConfig::for_cost(expected_cost);
    if let Some(d) = s.max_depth {
        cfg.max_depth = d;
    }
    cfg.max_restarts = s.max_restarts;
    cfg.temperature = s.temperature;
    cfg.tolerance = s.tolerance;
    cfg.guard_inverse = !s.no_guard;
    cfg.allow_global_phase = s.global_phase;
    cfg.validate()?;
    Ok(cfg)
}

fn load_model(path: &Path, m: &ModelArgs, vocab: &GateVocabulary) -> Result<Network, Failure> {
    let net = Network::load(path, activation(m))?;
    if net.n_qubits() != vocab.n_qubits() {
        return Err(usage(format!(
            "model is for {} qubits but the target has {}",
            net.n_qubits(),
            vocab.n_qubits()
        )));
    }
    if net.vocab_size() != vocab.len() {
        return Err(usage(format!(
            "model vocabulary size {} does not match the {} vocabulary of size {}",
            net.vocab_size(),
            vocab.kinds(),
            vocab.len()
        )));
    }
    Ok(net)
}

fn synth(cli: &Cli, a: &SynthArgs) -> Outcome {
    let (name, target, expected) = resolve_target(&a.target)?;
    check_qubits(cli, target.n_qubits(), "target")?;
    let cfg = search_config(&a.search, expected)?;
    let vocab = GateVocabulary::new(target.n_qubits(), KindSet::parse_list(&a.search.kinds)?)?;
    let net = load_model(&a.model, &a.net, &vocab)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let r = run_with_verification(&target, &cfg, || guided_search(&target, &net, &vocab, &cfg, &mut rng))?;
    println!(
        "target={name} outcome={} restarts={} gates_evaluated={} elapsed_s={:.3}",
        r.outcome.as_str(),
        r.restarts_used,
        r.gates_evaluated,
        r.elapsed.as_secs_f64()
    );
    let Some(circuit) = r.circuit else {
        return Err(Failure::Exhausted);
    };
    println!("cost={}", circuit.quantum_cost());
    println!("circuit={}", circuit.to_sequence_string());
    if let Some(out) = &a.out {
        circuit.write(out)?;
    }
    Ok(())
}

fn bench(cli: &Cli, a: &BenchArgs) -> Outcome {
    let mut records = Vec::new();
    for b in &a.benchmarks {
        let target = b.targets()?;
        check_qubits(cli, target.n_qubits(), "benchmark")?;
        let cfg = search_config(&a.search, Some(b.expected_cost()))?;
        let vocab = GateVocabulary::new(target.n_qubits(), KindSet::parse_list(&a.search.kinds)?)?;
        let net = load_model(&a.model, &a.net, &vocab)?;
        let rows = run_trials(b.name(), &target, &net, &vocab, &cfg, a.trials, cli.seed, !a.serial)?;
        records.extend(rows);
    }
    let summaries = write_reports(&a.out_dir, &records)?;
    let blank = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.3}"));
    for s in &summaries {
        println!(
            "benchmark={} trials={} successes={} min_cost={} mean_restarts={} std_restarts={} mean_elapsed_s={} std_elapsed_s={}",
            s.benchmark,
            s.trials,
            s.successes,
            s.min_cost.map_or(String::new(), |c| c.to_string()),
            blank(s.mean_restarts),
            blank(s.std_restarts),
            blank(s.mean_elapsed_s),
            blank(s.std_elapsed_s),
        );
    }
    Ok(())
}

/// A column's content as a bit pattern when it is a basis state.
fn describe_column(col: &[Complex64], n: usize, tol: f64) -> String {
    let hot: Vec<usize> = (0..col.len()).filter(|&i| col[i].norm() > tol).collect();
    if hot.len() == 1 && (col[hot[0]].norm() - 1.0).abs() <= tol {
        let z = col[hot[0]];
        if (z.re - 1.0).abs() <= tol {
            return bit_string(hot[0], n);
        }
        return format!("({:.4}{:+.4}i)|{}>", z.re, z.im, bit_string(hot[0], n));
    }
    hot.iter()
        .map(|&i| format!("({:.4}{:+.4}i)|{}>", col[i].re, col[i].im, bit_string(i, n)))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn verify(cli: &Cli, a: &VerifyArgs) -> Outcome {
    let (name, target, _) = resolve_target(&a.target)?;
    let circuit = Circuit::read(&a.circuit)?;
    check_qubits(cli, target.n_qubits(), "target")?;
    if circuit.n_qubits() != target.n_qubits() {
        return Err(usage(format!(
            "circuit has {} qubits but {name} has {}",
            circuit.n_qubits(),
            target.n_qubits()
        )));
    }
    let mismatches = verify_circuit(&circuit, &target, a.tolerance, false)?;
    let n = target.n_qubits();
    println!("target={name} cost={} gates={}", circuit.quantum_cost(), circuit.len());
    if mismatches.is_empty() {
        println!("ok: all {} basis states match", target.table().dim());
        return Ok(());
    }
    let actual = circuit_unitary(&circuit)?;
    println!(
        "mismatch: {} of {} basis states differ",
        mismatches.len(),
        target.table().dim()
    );
    for m in &mismatches {
        println!(
            "  input {}: expected {} got {}",
            bit_string(m.input, n),
            describe_column(target.table().column(m.input), n, a.tolerance),
            describe_column(actual.column(m.input), n, a.tolerance),
        );
    }
    Err(Failure::Mismatch)
}

fn baseline(cli: &Cli, a: &BaselineArgs) -> Outcome {
    if !(a.budget_seconds > 0.0 && a.budget_seconds.is_finite()) {
        return Err(usage(format!(
            "--budget-seconds must be positive, got {}",
            a.budget_seconds
        )));
    }
    let (name, target, expected) = resolve_target(&a.target)?;
    check_qubits(cli, target.n_qubits(), "target")?;
    let depth = a
        .depth
        .or(expected)
        .ok_or_else(|| usage("--depth is required for --spec targets"))?;
    let vocab = GateVocabulary::new(target.n_qubits(), KindSet::parse_list(&a.kinds)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let report = random_baseline(
        &target,
        &vocab,
        depth,
        Duration::from_secs_f64(a.budget_seconds),
        &mut rng,
    )?;
    let seconds = report.estimated_seconds_to_half();
    println!("target={name} vocab={} depth={depth}", vocab.len());
    println!("search_space={}", report.search_space);
    println!(
        "candidates={} gates_evaluated={} elapsed_s={:.3}",
        report.candidates,
        report.gates_evaluated,
        report.elapsed.as_secs_f64()
    );
    println!(
        "gates_per_second={:.1} candidates_per_second={:.1}",
        report.gates_per_second(),
        report.candidates_per_second()
    );
    println!("estimate: ln(2) * search_space / candidates_per_second");
    println!("estimated_seconds={seconds:.1} estimated_hours={:.2}", seconds / 3600.0);
    match &report.found {
        Some(c) => println!("found cost={} circuit={}", c.quantum_cost(), c.to_sequence_string()),
        None => println!("found none"),
    }
    Ok(())
}
