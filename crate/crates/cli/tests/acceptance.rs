//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use povm_cli::commands::{demo_sum_rule, DEFAULT_SEED};
use povm_cli::{emit_report, parse_experiment_spec, run_suite, OutputFormat};
use povm_core::bornrule::{born_probability, verify_projective_device, Observable};
use povm_core::experiments::{exact_probability, monte_carlo_probability, verify_permutation_identity, ExperimentConfig, Variant};
use povm_core::gleason::{oracle_fn, reconstruct_operator, reduce_two_dim, verify_quadratic_form, QuadraticFormOracle};
use povm_core::linalg::{haar_random_unitary, tensor_product, ComplexMatrix};
use povm_core::qmodel::{HermitianOperator, PovmElement, PureState, UnitaryGate};
use povm_core::rng::{derive_stream, Stream};
use povm_core::{basis_sum_check, envariance_report, Complex64};

const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn stream(label: &str, index: u64) -> Stream {
    derive_stream(SEED, label, index)
}

fn max_entangled_vector(n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        v[k * n + k] = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    }
    v
}

fn envariance() -> Outcome {
    let mut worst_entry: f64 = 0.0;
    let mut worst_fidelity: f64 = 0.0;
    for n in 2..=8 {
        let mut rng = stream("acceptance/envariance", n as u64);
        let psi = max_entangled_vector(n);
        for _ in 0..100 {
            let u = haar_random_unitary(n, &mut rng).unwrap();
            // Direct Kronecker product as the reference.
            let out = tensor_product(&u, &u.conjugate()).apply(&psi).unwrap();
            let direct = out.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let r = envariance_report(n, &UnitaryGate::new(u).unwrap()).unwrap();
            worst_entry = worst_entry.max(direct).max(r.max_entry_deviation);
            worst_fidelity = worst_fidelity.max((r.fidelity_pair - 1.0).abs());
        }
    }
    outcome(
        worst_entry <= 1e-12 && worst_fidelity <= 1e-12,
        format!("max-entry {worst_entry:.2e}, |fidelity-1| {worst_fidelity:.2e} (700 unitaries, N=2..8)"),
    )
}

fn three_experiments() -> Outcome {
    const TRIALS: usize = 100_000;
    let configs: Vec<(usize, u64)> = [2usize, 3, 4].iter().flat_map(|&n| (0..50).map(move |i| (n, i))).collect();
    let results: Vec<(f64, usize, usize)> = configs
        .par_iter()
        .map(|&(n, i)| {
            let mut rng = stream(&format!("acceptance/experiments/{n}"), i);
            let device = if i % 5 == 0 {
                PovmElement::random_rank_one(n, &mut rng).unwrap()
            } else {
                PovmElement::random(n, &mut rng).unwrap()
            };
            let gate = UnitaryGate::haar_random(n, &mut rng).unwrap();
            // Every variant reduces to tr(A)/N.
            let reference = device.matrix().trace().re / n as f64;
            let mut worst: f64 = 0.0;
            let mut exacts = Vec::new();
            let mut within = 0;
            for (k, v) in Variant::ALL.into_iter().enumerate() {
                let cfg = ExperimentConfig::new(device.clone(), gate.clone(), v, TRIALS).unwrap();
                let exact = exact_probability(&cfg).unwrap().exact;
                worst = worst.max((exact - reference).abs());
                exacts.push(exact);
                let mut mc_rng = stream(&format!("acceptance/monte-carlo/{n}/{i}"), k as u64);
                let estimate = monte_carlo_probability(&cfg, &mut mc_rng).unwrap().sampled.unwrap().estimate;
                let se = (exact * (1.0 - exact) / TRIALS as f64).sqrt();
                within += usize::from((estimate - exact).abs() <= 3.0 * se + 1e-15);
            }
            for a in &exacts {
                for b in &exacts {
                    worst = worst.max((a - b).abs());
                }
            }
            (worst, within, exacts.len())
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let within: usize = results.iter().map(|r| r.1).sum();
    let runs: usize = results.iter().map(|r| r.2).sum();
    let rate = within as f64 / runs as f64;
    outcome(
        worst <= 1e-12 && rate >= 0.99,
        format!(
            "exact spread {worst:.2e}; Monte-Carlo within 3 SE in {within}/{runs} runs ({:.2}%)",
            100.0 * rate
        ),
    )
}

fn sum_rule() -> Outcome {
    let mut worst_spread: f64 = 0.0;
    let mut worst_scaled: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for n in 2..=6 {
        let mut rng = stream("acceptance/sum-rule", n as u64);
        for _ in 0..10 {
            let device = PovmElement::random(n, &mut rng).unwrap();
            let gate = UnitaryGate::haar_random(n, &mut rng).unwrap();
            let cfg = ExperimentConfig::new(device.clone(), gate, Variant::A, 1).unwrap();
            let scaled = n as f64 * exact_probability(&cfg).unwrap().exact;
            let trace: f64 = (0..n).map(|k| device.matrix()[(k, k)].re).sum();
            let mut sums = Vec::new();
            for _ in 0..20 {
                let basis = UnitaryGate::haar_random(n, &mut rng).unwrap().image_of_basis();
                sums.push(basis_sum_check(&device, &basis).unwrap());
            }
            let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
            worst_spread = worst_spread.max(max - min);
            for s in sums {
                worst_scaled = worst_scaled.max((s - scaled).abs());
                worst_trace = worst_trace.max((s - trace).abs());
            }
        }
    }
    outcome(
        worst_spread <= 1e-10 && worst_scaled <= 1e-10 && worst_trace <= 1e-10,
        format!("spread {worst_spread:.2e}, vs N*P {worst_scaled:.2e}, vs trace {worst_trace:.2e} (50 devices x 20 bases)"),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

fn permutation_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut all_equal = true;
    for n in 2..=6 {
        let mut rng = stream("acceptance/permutation", n as u64);
        let perms = permutations(n);
        let factorial: f64 = (1..n).map(|k| k as f64).product();
        for _ in 0..100 {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let a: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let rhs = factorial * a.iter().sum::<f64>() * p.iter().sum::<f64>();
            let brute: f64 = perms
                .iter()
                .map(|s| (0..n).map(|k| a[k] * p[s[k]]).sum::<f64>())
                .sum();
            let r = verify_permutation_identity(&a, &p).unwrap();
            all_equal &= r.equal;
            worst = worst.max((r.lhs - rhs).abs()).max((brute - rhs).abs());
        }
    }
    outcome(
        all_equal && worst <= 1e-10,
        format!("max |lhs - (N-1)! Sum(a) Sum(p)| {worst:.2e} (500 cases, N=2..6)"),
    )
}

fn reconstruction() -> Outcome {
    let mut worst_round_trip: f64 = 0.0;
    let mut worst_quadratic: f64 = 0.0;
    let mut weakest_detection = f64::INFINITY;
    for n in 2..=6 {
        let mut rng = stream("acceptance/reconstruct", n as u64);
        for i in 0..100 {
            let device = PovmElement::random(n, &mut rng).unwrap();
            let oracle = QuadraticFormOracle::from_device(&device);
            let a = reconstruct_operator(&oracle).unwrap();
            worst_round_trip = worst_round_trip.max(a.matrix().frobenius_distance(device.matrix()));
            if i < 10 {
                worst_quadratic = worst_quadratic.max(verify_quadratic_form(&oracle, &a, 1000, &mut rng).unwrap());
            }
        }
        // A fourth-order term no quadratic form can reproduce.
        for _ in 0..5 {
            let device = PovmElement::random(n, &mut rng).unwrap();
            let planted = oracle_fn(n, |psi: &PureState| {
                0.9 * device.matrix().quadratic_form(psi.amplitudes()).unwrap().re + 0.1 * psi.amplitudes()[0].norm_sqr().powi(2)
            });
            let a = reconstruct_operator(&planted).unwrap();
            weakest_detection = weakest_detection.min(verify_quadratic_form(&planted, &a, 1000, &mut rng).unwrap());
        }
    }
    outcome(
        worst_round_trip <= 1e-10 && worst_quadratic <= 1e-12 && weakest_detection > 1e-5,
        format!(
            "round trip {worst_round_trip:.2e}, quadratic form {worst_quadratic:.2e}, planted defect seen at {weakest_detection:.2e}"
        ),
    )
}

fn two_dim_reduction() -> Outcome {
    let mut rng = stream("acceptance/reduce", 0);
    let mut worst_true: f64 = 0.0;
    let mut worst_direct: f64 = 0.0;
    for _ in 0..100 {
        let device = PovmElement::random(2, &mut rng).unwrap();
        let oracle = QuadraticFormOracle::from_device(&device);
        let reduced = reduce_two_dim(&oracle).unwrap();
        let direct = reconstruct_operator(&oracle).unwrap();
        worst_true = worst_true.max(reduced.matrix().frobenius_distance(device.matrix()));
        worst_direct = worst_direct.max(reduced.matrix().frobenius_distance(direct.matrix()));
    }
    outcome(
        worst_true <= 1e-10 && worst_direct <= 1e-10,
        format!("vs device {worst_true:.2e}, vs direct {worst_direct:.2e} (100 devices)"),
    )
}

fn projector_from_columns(v: &ComplexMatrix, keep: &[usize]) -> ComplexMatrix {
    let n = v.rows();
    let mut p = ComplexMatrix::zeros(n, n);
    for &k in keep {
        let col = v.column(k);
        p = p.add(&ComplexMatrix::outer(&col, &col)).unwrap();
    }
    p
}

fn born_rule() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut degenerate_cases = 0;
    let mut rejected = 0;
    let mut total = 0;
    for n in 3..=6 {
        let mut rng = stream("acceptance/born", n as u64);
        for case in 0..50 {
            let v = haar_random_unitary(n, &mut rng).unwrap();
            // Even cases draw from a few integer levels, so eigenvalues repeat.
            let eigs: Vec<f64> = loop {
                let e: Vec<f64> = if case % 2 == 0 {
                    (0..n).map(|_| rng.random_range(0..(n / 2).max(2)) as f64).collect()
                } else {
                    (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()
                };
                if e.iter().any(|x| *x != e[0]) {
                    break e;
                }
            };
            let o = Observable::from_eigenbasis(&eigs, v.clone()).unwrap();
            let lambda = eigs[rng.random_range(0..n)];
            let inside: Vec<usize> = (0..n).filter(|&k| eigs[k] == lambda).collect();
            let outside: Vec<usize> = (0..n).filter(|&k| eigs[k] != lambda).collect();
            degenerate_cases += usize::from(inside.len() > 1);
            total += 1;

            let p = HermitianOperator::new(projector_from_columns(&v, &inside)).unwrap();
            let verdict = verify_projective_device(&p, &o, lambda).unwrap();
            let residual = verdict
                .offdiag_mass
                .max(verdict.trace_identity.residual())
                .max(verdict.frobenius_identity.residual());
            worst = worst.max(residual);
            if !verdict.is_projector || residual > 1e-10 {
                failures.push(format!("N={n} case {case}: projector not accepted"));
            }

            let eps = 1e-2 * (1.0 + rng.random::<f64>());
            let phase = Complex64::from_polar(eps, rng.random::<f64>() * std::f64::consts::TAU);
            let a = v.column(inside[rng.random_range(0..inside.len())]);
            let b = v.column(outside[rng.random_range(0..outside.len())]);
            let coupling = ComplexMatrix::outer(&a, &b).scale(phase);
            let defect = coupling.add(&coupling.adjoint()).unwrap();
            let bad = HermitianOperator::new(p.matrix().add(&defect).unwrap()).unwrap();
            let verdict = verify_projective_device(&bad, &o, lambda).unwrap();
            if !verdict.is_projector && (!verdict.eigenvalue_bounds_ok || verdict.offdiag_mass > 1e-10) {
                rejected += 1;
            } else {
                failures.push(format!("N={n} case {case}: perturbed device accepted"));
            }

            let psi = PureState::haar_random(n, &mut rng).unwrap();
            let mut distinct = eigs.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let sum: f64 = distinct.iter().map(|&l| born_probability(&o, l, &psi).unwrap()).sum();
            worst = worst.max((sum - 1.0).abs());
            if (sum - 1.0).abs() > 1e-10 {
                failures.push(format!("N={n} case {case}: Born probabilities sum to {sum}"));
            }
        }
    }
    outcome(
        failures.is_empty() && worst <= 1e-10,
        format!(
            "{total} observables ({degenerate_cases} with degenerate λ), {rejected}/{total} perturbed rejected, worst residual {worst:.2e}{}",
            failures.first().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        ),
    )
}

fn determinism() -> Outcome {
    let specs = [
        r#"{"format_version": 1, "dimension": 3, "seed": 7, "trials": 20000}"#,
        r#"{"format_version": 1, "dimension": 4, "seed": 8, "device": "rank1-random", "gate": "fourier", "trials": 5000}"#,
        r#"{"format_version": 1, "dimension": 2, "seed": 9, "device": "projector:2", "gate": "hadamard", "trials": 5000}"#,
    ];
    let mut identical = true;
    for text in specs {
        let spec = parse_experiment_spec(text).unwrap();
        let a = emit_report(&run_suite(&spec).unwrap(), OutputFormat::Structured);
        let b = emit_report(&run_suite(&spec).unwrap(), OutputFormat::Structured);
        identical &= a == b;
    }
    let golden = include_str!("golden/demo_fig4_n3.json");
    let library = emit_report(&demo_sum_rule(3, DEFAULT_SEED).unwrap(), OutputFormat::Structured);
    let binary = Command::new(env!("CARGO_BIN_EXE_povm"))
        .args(["demo", "fig4", "--n", "3"])
        .output()
        .map(|o| String::from_utf8_lossy(&o.stdout).into_owned())
        .unwrap_or_default();
    let golden_ok = library == golden && binary == golden;
    outcome(
        identical && golden_ok,
        format!("repeat runs identical: {identical}; fig4 n=3 golden match: {golden_ok}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("envariance", envariance),
        ("three-experiment equality", three_experiments),
        ("sum rule", sum_rule),
        ("permutation identity", permutation_identity),
        ("operator reconstruction", reconstruction),
        ("two-dimensional reduction", two_dim_reduction),
        ("Born-rule recovery", born_rule),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        all &= o.passed;
        println!(
            "criterion {} {name}: {} ({}; {:.1}s)",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
