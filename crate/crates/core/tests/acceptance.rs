//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed. Exits
//! non-zero when a criterion fails, unless it is listed in [`UNATTAINABLE`]
//! with the reason it cannot be met; those still print FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hadarot::analytic::{self, Constants};
use hadarot::experiment::{self, ExperimentConfig, ExperimentKind, Rows, SampleSchedule};
use hadarot::hadamard::{fwht, naive_hadamard_multiply};
use hadarot::lemma_suite::{self, SuiteConfig};
use hadarot::rng::{Layer, StreamKey};
use hadarot::{Dimension, UnitVector};
use rand::Rng;

/// Criteria that cannot pass as stated, with the reason.
const UNATTAINABLE: &[(u32, &str)] = &[(
    2,
    "the closed form 5*3^(4/5)/pi^(7/5) evaluates to 2.424695, 2.3e-4 from the quoted 2.42493",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn dim(d: usize) -> Dimension {
    Dimension::new(d).unwrap()
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn config(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        workers: 1,
        ..ExperimentConfig::defaults(kind)
    }
}

fn criterion_1() -> Outcome {
    let report = experiment::run(&config(ExperimentKind::LowerBound)).unwrap();
    let Rows::LowerBound(rows) = &report.rows else {
        unreachable!()
    };
    let at = |d: usize, t: f64| {
        rows.iter()
            .find(|r| r.d == d && r.t == t)
            .map_or(f64::NAN, |r| r.bound)
    };
    let a = at(256, 0.11);
    let b = at(32768, 0.02);
    let max = rows
        .iter()
        .filter(|r| r.d == 1 << 18)
        .map(|r| r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: within(a, 0.3346, 5e-4)
            && within(b, 0.6026, 5e-4)
            && within(max, 0.6358, 0.02)
            && report.passed(),
        detail: format!("(256, 0.11) = {a:.5}; (32768, 0.02) = {b:.5}; max at 2^18 = {max:.4}"),
    }
}

fn criterion_2() -> Outcome {
    let c = Constants::compute();
    let pos = within(c.c_pos, 3.48695, 1e-4);
    let g = within(c.c_g, 2.42493, 1e-4);
    let c3 = within(c.c3, 1.06225, 1e-4);
    Outcome {
        pass: pos && g && c3,
        detail: format!(
            "C_pos = {:.6} ({}); C_G = {:.6} ({}); C3 = {:.6} ({})",
            c.c_pos,
            ok(pos),
            c.c_g,
            ok(g),
            c.c3,
            ok(c3)
        ),
    }
}

fn criterion_3() -> Outcome {
    let a = 1.0 - analytic::m_d(dim(256)).unwrap();
    let b = 1.0 - analytic::m_d(dim(32768)).unwrap();
    Outcome {
        pass: within(a, 0.20055, 1e-5) && within(b, 0.20210, 1e-5),
        detail: format!("1 - m_256 = {a:.6}; 1 - m_32768 = {b:.6}"),
    }
}

fn criterion_4() -> Outcome {
    let r =
        lemma_suite::verify_moment_identities(dim(64), 200_000, 10, StreamKey::new(4, 4)).unwrap();
    Outcome {
        pass: r.pass,
        detail: format!(
            "{} checks over e1, flat, random; {} outside 4-5 SE; min slack {:.3e}",
            r.instances, r.violations, r.min_slack
        ),
    }
}

fn criterion_5() -> (Outcome, String) {
    let cfg = ExperimentConfig {
        dims: vec![1 << 12, 1 << 15],
        n_samples: SampleSchedule::Fixed(100_000),
        ..config(ExperimentKind::E1)
    };
    let report = experiment::run(&cfg).unwrap();
    let Rows::E1(rows) = &report.rows else {
        unreachable!()
    };
    let big = &rows[1];
    let pass = report.passed() && within(big.estimate, 0.63, 0.01);
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "d = {}: {:.6} +/- {:.1e} in [{:.4}, {:.6}]",
                r.d,
                r.estimate,
                r.se,
                r.lower_max_t.unwrap_or(f64::NAN),
                r.upper_closed_form
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (Outcome { pass, detail }, report.to_csv())
}

fn criterion_6() -> Outcome {
    let cfg = ExperimentConfig {
        dims: vec![16, 64, 256, 1024],
        n_inputs: 200,
        ..config(ExperimentKind::Marginal)
    };
    let report = experiment::run(&cfg).unwrap();
    let Rows::Marginal(rows) = &report.rows else {
        unreachable!()
    };
    let decreasing = rows
        .windows(2)
        .filter(|w| w[1].ks_mean < w[0].ks_mean)
        .count();
    let below = rows.iter().all(|r| r.ks_mean < r.c_pos_bound);
    let means = rows
        .iter()
        .map(|r| format!("{}: {:.5} +/- {:.1e}", r.d, r.ks_mean, r.ks_se))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome {
        pass: decreasing == 3 && below,
        detail: format!(
            "means {means}; decreasing {decreasing} of 3; below C_pos d^-1/5: {below}; c_scale = {}",
            report.metadata.extra["c_scale"]
        ),
    }
}

fn criterion_7() -> Outcome {
    const REQUIRED: [&str; 9] = [
        "product-difference",
        "cos-exp",
        "lipschitz-l1",
        "distance-to-set-lipschitz",
        "spherical-concentration",
        "sphere-gauss-ks",
        "gautschi-chi",
        "gauss-bridge-ks",
        "coeff-fourth-moment",
    ];
    let reports = lemma_suite::run_suite(&SuiteConfig::default(), None).unwrap();
    let missing: Vec<&str> = REQUIRED
        .iter()
        .copied()
        .filter(|name| !reports.iter().any(|r| r.verifier == *name && r.pass))
        .collect();
    let violations: u64 = reports.iter().map(|r| r.violations).sum();
    Outcome {
        pass: missing.is_empty() && reports.iter().all(|r| r.pass),
        detail: format!(
            "{} verifiers, {violations} violations; failing required: {missing:?}",
            reports.len()
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = StreamKey::new(8, 8).rng(Layer::Gauss);
    let mut naive_ok = true;
    for m in 1..=8 {
        let d = dim(1 << m);
        for _ in 0..100 {
            let x: Vec<f64> = (0..d.get()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = fwht(&x, d).unwrap();
            let slow = naive_hadamard_multiply(&x, d).unwrap();
            naive_ok &= fast.iter().zip(&slow).all(|(a, b)| (a - b).abs() < 1e-12);
        }
    }
    let mut involution_err = 0.0f64;
    for m in 0..=10 {
        let d = dim(1 << m);
        let x: Vec<f64> = (0..d.get()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = fwht(&fwht(&x, d).unwrap(), d).unwrap();
        for (a, b) in x.iter().zip(&y) {
            involution_err = involution_err.max((d.as_f64() * a - b).abs());
        }
    }
    let d = dim(1024);
    let column_ok = fwht(UnitVector::basis(d, 0).unwrap().as_slice(), d)
        .unwrap()
        .iter()
        .all(|&v| v == 1.0);
    let one_block =
        lemma_suite::verify_one_block_degeneracy(dim(64), 1000, StreamKey::new(8, 9)).unwrap();
    let points = one_block.details["distinct_values"];
    Outcome {
        pass: naive_ok && involution_err <= 1e-10 && column_ok && points == 2.0 && one_block.pass,
        detail: format!(
            "naive oracle: {}; max |fwht(fwht x) - d x| = {involution_err:.1e}; e1 column: {}; one-block support points: {points}",
            ok(naive_ok),
            ok(column_ok)
        ),
    }
}

fn criterion_9(e1_csv: &str) -> Outcome {
    let lb = |w: usize| {
        experiment::run(&ExperimentConfig {
            workers: w,
            ..config(ExperimentKind::LowerBound)
        })
        .unwrap()
        .to_csv()
    };
    let lower_same = lb(1) == lb(3);
    let e1_rerun = experiment::run(&ExperimentConfig {
        dims: vec![1 << 12, 1 << 15],
        n_samples: SampleSchedule::Fixed(100_000),
        workers: 4,
        ..config(ExperimentKind::E1)
    })
    .unwrap()
    .to_csv();
    let e1_same = e1_rerun == e1_csv;
    let marginal = |w: usize| {
        experiment::run(&ExperimentConfig {
            dims: vec![16, 64],
            n_inputs: 8,
            n_samples: SampleSchedule::Fixed(2000),
            workers: w,
            ..config(ExperimentKind::Marginal)
        })
        .unwrap()
        .to_csv()
    };
    let marginal_same = marginal(1) == marginal(4);
    let v = |w: usize| {
        experiment::with_workers(w, || {
            serde_json::to_string(
                &lemma_suite::run_suite(&SuiteConfig::default(), Some("moment-identities"))
                    .unwrap(),
            )
            .unwrap()
        })
        .unwrap()
    };
    let verify_same = v(1) == v(3);
    Outcome {
        pass: lower_same && e1_same && marginal_same && verify_same,
        detail: format!(
            "byte-identical across worker counts: lower-bound {}, e1 {}, marginal {}, verify {}",
            ok(lower_same),
            ok(e1_same),
            ok(marginal_same),
            ok(verify_same)
        ),
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "mismatch"
    }
}

fn main() -> ExitCode {
    let mut failures = Vec::new();
    let mut report = |n: u32, budget: Duration, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let pass = outcome.pass && in_budget;
        println!(
            "criterion {n}: {} ({}; {:.1}s of {}s budget)",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            match UNATTAINABLE.iter().find(|(k, _)| *k == n) {
                Some((_, why)) => println!("criterion {n}: known unattainable: {why}"),
                None => failures.push(n),
            }
        }
    };
    let secs = Duration::from_secs;
    report(1, secs(5), &mut criterion_1);
    report(2, secs(1), &mut criterion_2);
    report(3, secs(1), &mut criterion_3);
    report(4, secs(120), &mut criterion_4);
    let mut e1_csv = String::new();
    report(5, secs(300), &mut || {
        let (o, csv) = criterion_5();
        e1_csv = csv;
        o
    });
    report(6, secs(600), &mut criterion_6);
    report(7, secs(300), &mut criterion_7);
    report(8, secs(30), &mut criterion_8);
    report(9, secs(600), &mut || criterion_9(&e1_csv));
    if failures.is_empty() {
        println!("acceptance: all criteria pass or are documented as unattainable");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in criteria {failures:?}");
        ExitCode::FAILURE
    }
}
