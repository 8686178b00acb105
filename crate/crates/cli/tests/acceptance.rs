//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Seeds and tolerances are fixed here once; a red line is reported as is.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gwrk::formats::to_json;
use gwrk::{run_report, ExperimentConfig, ThreadPool, Verb};
use gwrk_core::bijection::{forest_to_path, path_to_forest};
use gwrk_core::diagnostics::{
    martingale_diagnostic, verify_discrete_rk, verify_excision, verify_law_equality,
    verify_population_convergence, verify_rk_limit, ExperimentReport, ReplicaRunner,
};
use gwrk_core::samplers::{sample_feller, sample_forest, sample_path};
use gwrk_core::stats::Moments;
use gwrk_core::{FellerParams, Forest, Lane, RateParams, RenormParams, Substream};

const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn failed_checks(r: &ExperimentReport) -> String {
    let bad: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:.4e} vs {:.4e}", c.name, c.observed, c.expected))
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join(", "))
    }
}

fn min_p(r: &ExperimentReport) -> f64 {
    r.ks_tests.iter().map(|k| k.p_value).fold(1.0, f64::min)
}

fn same_forest(a: &Forest, b: &Forest) -> bool {
    a.roots() == b.roots()
        && a.nodes().len() == b.nodes().len()
        && a.nodes().iter().zip(b.nodes()).all(|(x, y)| {
            x.parent == y.parent
                && x.children == y.children
                && (x.birth_time - y.birth_time).abs() <= 1e-12
                && (x.death_time - y.death_time).abs() <= 1e-12
        })
}

fn round_trips(pool: &ThreadPool) -> Outcome {
    let start = Instant::now();
    let n = 10_000;
    let bad = pool
        .run(n, |r| {
            let params = RateParams::new(1.0, 1.0, 2.0, 1 + (r % 5) as usize).unwrap();
            let f = sample_forest(&params, &mut Substream::new(SEED, r, Lane::Forest)).unwrap();
            let forest_ok = same_forest(&path_to_forest(&forest_to_path(&f, 2.0).unwrap()).unwrap(), &f);
            let p = sample_path(&params, 2.0, &mut Substream::new(SEED, r, Lane::Path)).unwrap();
            let back = forest_to_path(&path_to_forest(&p).unwrap(), 2.0).unwrap();
            let path_ok = back.extrema().len() == p.extrema().len()
                && back.excursion_count() == p.excursion_count()
                && back
                    .breakpoint_times()
                    .iter()
                    .zip(p.breakpoint_times())
                    .all(|(x, y)| (x - y).abs() <= 1e-12)
                && back.extrema().iter().zip(p.extrema()).all(|(x, y)| (x - y).abs() <= 1e-12);
            u64::from(!forest_ok) + u64::from(!path_ok)
        })
        .iter()
        .sum::<u64>();
    let elapsed = start.elapsed();
    outcome(
        bad == 0 && elapsed < Duration::from_secs(30),
        format!("{n} forests + {n} paths, {bad} mismatches, {:.1} s (limit 30 s)", elapsed.as_secs_f64()),
    )
}

const REGIMES: [(f64, f64, f64); 3] = [(1.2, 1.0, f64::INFINITY), (1.0, 1.0, 4.0), (0.8, 1.0, 2.0)];

fn discrete_rk(pool: &ThreadPool) -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut levels = 0.0;
    for (lambda, mu, a) in REGIMES {
        let params = RateParams::new(lambda, mu, a, 3).unwrap();
        let r = verify_discrete_rk(&params, 1000, SEED, pool).unwrap();
        violations += r.violations.len();
        levels += r.summary("levels checked").unwrap().mean * 1000.0;
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && elapsed < Duration::from_secs(60),
        format!(
            "3 regimes x 1000 paths, {levels} levels compared, {violations} violations, {:.1} s (limit 60 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn law_equality(pool: &ThreadPool) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (lambda, mu, a) in REGIMES {
        let params = RateParams::new(lambda, mu, a, 3).unwrap();
        let r = verify_law_equality(&params, 10_000, SEED, pool).unwrap();
        ok &= r.passed;
        parts.push(format!("({lambda},{mu},{a}) min p {:.3e}{}", min_p(&r), failed_checks(&r)));
    }
    outcome(ok, format!("threshold {:.2e}: {}", 0.001 / 3.0, parts.join("; ")))
}

fn excision(pool: &ThreadPool) -> Outcome {
    let params = RateParams::new(0.8, 1.0, 3.0, 1).unwrap();
    let r = verify_excision(&params, 1.5, 10_000, SEED, pool).unwrap();
    outcome(
        r.passed,
        format!("min p {:.3e} over {} statistics (threshold {:.2e}){}", min_p(&r), r.ks_tests.len(), r.ks_threshold, failed_checks(&r)),
    )
}

fn branching_moments(pool: &ThreadPool) -> Outcome {
    let params = RateParams::new(1.2, 1.0, f64::INFINITY, 10).unwrap();
    let xs = pool.run(10_000, |r| {
        sample_forest(&params, &mut Substream::new(SEED, r, Lane::Forest))
            .unwrap()
            .alive_count(1.0)
            .unwrap() as f64
    });
    let m = Moments::from_samples(&xs).unwrap();
    let expected = 10.0 * (-0.2f64).exp();
    let z = (m.mean - expected) / m.se_mean;
    outcome(z.abs() <= 3.0, format!("mean {:.4} vs {expected:.4}, {z:+.2} SE", m.mean))
}

fn feller_moments(pool: &ThreadPool) -> Outcome {
    let p = FellerParams {
        x: 1.0,
        alpha: 0.0,
        beta: 0.0,
        sigma: 2.0,
    };
    let xs = pool.run(10_000, |r| {
        let path = sample_feller(&p, 1.0, 1e-3, &mut Substream::new(SEED, r, Lane::Feller)).unwrap();
        path.value_at(1.0).unwrap()
    });
    let m = Moments::from_samples(&xs).unwrap();
    let mean_ok = (m.mean - 1.0).abs() <= 3.0 * m.se_mean;
    let var_tol = 3.0 * m.se_variance + 0.05 * 4.0;
    let var_ok = (m.variance - 4.0).abs() <= var_tol;
    outcome(
        mean_ok && var_ok,
        format!(
            "mean {:.4} (1 +- {:.4}), variance {:.4} (4 +- {var_tol:.4})",
            m.mean,
            3.0 * m.se_mean,
            m.variance
        ),
    )
}

fn population_convergence(pool: &ThreadPool) -> Outcome {
    let start = Instant::now();
    let base = RenormParams::new(2.0, 1.0, 0.5, 10, 1.0, f64::INFINITY).unwrap();
    let r = verify_population_convergence(&base, &[10, 100, 500], 1.0, 5000, 1e-4, SEED, pool).unwrap();
    let elapsed = start.elapsed();
    let ds: Vec<String> = r
        .checks
        .iter()
        .filter(|c| c.name.starts_with("KS distance"))
        .map(|c| format!("{:.4}", c.observed))
        .collect();
    let p = r.ks_tests.last().map_or(f64::NAN, |k| k.p_value);
    outcome(
        r.passed && elapsed < Duration::from_secs(600),
        format!(
            "KS distances N=10,100,500: {}; p(N=500) {p:.3e}; {:.0} s (limit 600 s){}",
            ds.join(", "),
            elapsed.as_secs_f64(),
            failed_checks(&r)
        ),
    )
}

fn rk_limit(pool: &ThreadPool) -> Outcome {
    let renorm = RenormParams::new(2.0, 0.0, 0.0, 200, 1.0, 4.0).unwrap();
    let r = verify_rk_limit(&renorm, &[0.25, 0.5, 1.0], 10_000, 1e-4, SEED, pool).unwrap();
    let means: Vec<String> = [0.25, 0.5, 1.0]
        .iter()
        .map(|t| {
            let c = r.check(&format!("variance L({t})")).unwrap();
            let m = r.check(&format!("mean L({t})")).unwrap();
            format!("t={t}: mean {:.3}, var {:.3}/{:.0}", m.observed, c.observed, c.expected)
        })
        .collect();
    outcome(
        r.passed,
        format!("{}; min KS p {:.3e} (threshold {:.2e}){}", means.join("; "), min_p(&r), r.ks_threshold, failed_checks(&r)),
    )
}

fn martingale(pool: &ThreadPool) -> Outcome {
    let renorm = RenormParams::new(2.0, 1.0, 0.5, 200, 1.0, 4.0).unwrap();
    let r = martingale_diagnostic(&renorm, &[0.5, 1.0], 4000, SEED, pool).unwrap();
    let get = |n: &str| r.check(n).unwrap();
    outcome(
        r.passed,
        format!(
            "mean M(0.5) {:.4} (+-{:.4}), mean M(1) {:.4} (+-{:.4}), bracket slope {:.4} vs 1, max jump error {:.1e}{}",
            get("mean M(0.5)").observed,
            get("mean M(0.5)").tolerance,
            get("mean M(1)").observed,
            get("mean M(1)").tolerance,
            get("bracket slope").observed,
            get("jump size relative error").observed,
            failed_checks(&r)
        ),
    )
}

fn determinism() -> Outcome {
    let base = ExperimentConfig {
        seed: 5,
        replicas: 300,
        ..Default::default()
    };
    let configs = [
        ExperimentConfig {
            verb: Some(Verb::VerifyRkDiscrete),
            ceiling: Some(2.0),
            ancestors: 3,
            ..base.clone()
        },
        ExperimentConfig {
            verb: Some(Verb::VerifyLaw),
            ceiling: Some(4.0),
            ..base.clone()
        },
        ExperimentConfig {
            verb: Some(Verb::VerifyChop),
            lambda: 0.8,
            ceiling: Some(3.0),
            excise_at: Some(1.5),
            ..base.clone()
        },
        ExperimentConfig {
            verb: Some(Verb::VerifyMartingale),
            big_n: 20,
            ceiling: Some(4.0),
            alpha: 1.0,
            beta: 0.5,
            replicas: 100,
            ..base.clone()
        },
        ExperimentConfig {
            verb: Some(Verb::VerifyRkLimit),
            big_n: 20,
            ceiling: Some(4.0),
            replicas: 100,
            ..base
        },
    ];
    let mut mismatched = Vec::new();
    for c in &configs {
        let verb = c.verb.unwrap();
        let render = |threads| {
            let c = ExperimentConfig {
                threads: Some(threads),
                ..c.clone()
            };
            to_json(&run_report(verb, &c).unwrap())
        };
        let first = render(1);
        if render(1) != first || render(4) != first {
            mismatched.push(verb.name());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{} verbs rerun on 1 and 4 threads, differing: {:?}", configs.len(), mismatched),
    )
}

fn main() -> ExitCode {
    let pool = ThreadPool::new(None).expect("thread pool");
    println!("acceptance suite, seed {SEED}, {} worker threads", pool.threads());
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("1 bijection round trips", Box::new(|| round_trips(&pool))),
        ("2 discrete Ray-Knight coupling", Box::new(|| discrete_rk(&pool))),
        ("3 law equality of decoded paths and forests", Box::new(|| law_equality(&pool))),
        ("4 excision law", Box::new(|| excision(&pool))),
        ("5 branching first moment", Box::new(|| branching_moments(&pool))),
        ("6 Feller moments", Box::new(|| feller_moments(&pool))),
        ("7 renormalized population convergence", Box::new(|| population_convergence(&pool))),
        ("8 generalized Ray-Knight", Box::new(|| rk_limit(&pool))),
        ("9 martingale diagnostic", Box::new(|| martingale(&pool))),
        ("10 determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (name, f) in &criteria {
        let start = Instant::now();
        let o = f();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        if !o.passed {
            failures += 1;
        }
        println!("[{tag}] {name}: {} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
