//! Verification experiments and their reports.
//!
//! Each experiment draws its replicas through a [`ReplicaRunner`], with
//! replica `r` using the substreams `(seed, r, lane)`, and collects the
//! per-replica outputs in replica order. Reports therefore depend only on
//! the parameters and the seed, never on how replicas were scheduled.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::bijection::path_to_forest;
use crate::error::{invalid, Result};
use crate::paths::{ExplorationPath, Segment};
use crate::rng::{Lane, Substream};
use crate::samplers::{
    population_at, renormalized_local_times, sample_feller, sample_forest, sample_path,
    renormalized_extrema_until, RateParams, RenormParams,
};
use crate::stats::{ks_two_sample, median, Moments};

/// KS rejection level before the Bonferroni split.
pub const KS_LEVEL: f64 = 0.001;

/// Runs `count` independent replicas and returns their results in replica
/// order.
pub trait ReplicaRunner {
    fn run<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync;
}

/// Runs replicas one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ReplicaRunner for Sequential {
    fn run<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        (0..count).map(f).collect()
    }
}

fn run_all<R, T, F>(runner: &R, count: u64, f: F) -> Result<Vec<T>>
where
    R: ReplicaRunner,
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    runner.run(count, f).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum ParamValue {
    Int(u64),
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Param {
    pub name: String,
    pub value: ParamValue,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub statistic: String,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub moments: Moments,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KsRow {
    pub statistic: String,
    pub distance: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Relation {
    /// `|observed - expected| <= tolerance`
    Within,
    /// `observed > expected`
    Above,
    /// `observed < expected`
    Below,
}

/// A declared tolerance and the numbers it was evaluated on.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(name.into(), observed, expected, tolerance, Relation::Within)
    }

    pub fn above(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name.into(), observed, bound, 0.0, Relation::Above)
    }

    pub fn below(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name.into(), observed, bound, 0.0, Relation::Below)
    }

    fn new(name: String, observed: f64, expected: f64, tolerance: f64, relation: Relation) -> Self {
        let passed = match relation {
            Relation::Within => (observed - expected).abs() <= tolerance,
            Relation::Above => observed > expected,
            Relation::Below => observed < expected,
        };
        Self {
            name,
            observed,
            expected,
            tolerance,
            relation,
            passed,
        }
    }
}

/// A pathwise identity that failed on one replica.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub replica: u64,
    pub what: String,
    pub at: f64,
    pub observed: f64,
    pub expected: f64,
    /// Extrema of the offending path.
    pub extrema: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub replicas: u64,
    pub params: Vec<Param>,
    pub summaries: Vec<Summary>,
    pub ks_tests: Vec<KsRow>,
    /// Per-test level after the Bonferroni split over `ks_tests`.
    pub ks_threshold: f64,
    pub checks: Vec<Check>,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self, statistic: &str) -> Option<&Moments> {
        self.summaries
            .iter()
            .find(|s| s.statistic == statistic)
            .map(|s| &s.moments)
    }

    pub fn ks(&self, statistic: &str) -> Option<&KsRow> {
        self.ks_tests.iter().find(|k| k.statistic == statistic)
    }
}

/// Accumulates a report; [`finish`](Self::finish) adds one p-value check per
/// KS test at the Bonferroni-corrected level and settles pass/fail.
#[derive(Debug)]
pub struct ReportBuilder {
    report: ExperimentReport,
}

impl ReportBuilder {
    pub fn new(name: &str, seed: u64, replicas: u64) -> Self {
        Self {
            report: ExperimentReport {
                name: name.to_string(),
                seed,
                replicas,
                params: Vec::new(),
                summaries: Vec::new(),
                ks_tests: Vec::new(),
                ks_threshold: KS_LEVEL,
                checks: Vec::new(),
                violations: Vec::new(),
                passed: false,
            },
        }
    }

    pub fn param(&mut self, name: &str, value: ParamValue) -> &mut Self {
        self.report.params.push(Param {
            name: name.to_string(),
            value,
        });
        self
    }

    /// Numeric parameter; infinities are recorded as text.
    pub fn num(&mut self, name: &str, v: f64) -> &mut Self {
        let value = if v.is_finite() {
            ParamValue::Num(v)
        } else if v > 0.0 {
            ParamValue::Text("inf".to_string())
        } else {
            ParamValue::Text(format!("{v}"))
        };
        self.param(name, value)
    }

    pub fn int(&mut self, name: &str, v: u64) -> &mut Self {
        self.param(name, ParamValue::Int(v))
    }

    pub fn rates(&mut self, p: &RateParams) -> &mut Self {
        self.num("lambda", p.lambda)
            .num("mu", p.mu)
            .num("ceiling", p.ceiling)
            .int("ancestors", p.ancestors as u64)
    }

    pub fn renorm(&mut self, p: &RenormParams) -> &mut Self {
        self.num("sigma", p.sigma)
            .num("alpha", p.alpha)
            .num("beta", p.beta)
            .int("big_n", p.big_n)
            .num("x", p.x)
            .num("ceiling", p.ceiling)
    }

    pub fn summary(&mut self, statistic: &str, xs: &[f64]) -> Result<Moments> {
        let moments = Moments::from_samples(xs)?;
        self.report.summaries.push(Summary {
            statistic: statistic.to_string(),
            moments,
        });
        Ok(moments)
    }

    pub fn ks(&mut self, statistic: &str, a: &[f64], b: &[f64]) -> Result<f64> {
        let t = ks_two_sample(a, b)?;
        self.report.ks_tests.push(KsRow {
            statistic: statistic.to_string(),
            distance: t.distance,
            p_value: t.p_value,
        });
        Ok(t.distance)
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.report.checks.push(c);
        self
    }

    pub fn violation(&mut self, v: Violation) -> &mut Self {
        self.report.violations.push(v);
        self
    }

    pub fn finish(mut self) -> ExperimentReport {
        let r = &mut self.report;
        if !r.ks_tests.is_empty() {
            r.ks_threshold = KS_LEVEL / r.ks_tests.len() as f64;
        }
        for k in &r.ks_tests {
            r.checks.push(Check::above(format!("ks p-value {}", k.statistic), k.p_value, r.ks_threshold));
        }
        r.passed = r.violations.is_empty() && r.checks.iter().all(|c| c.passed);
        self.report
    }
}

/// Compares `local_time` with the alive count of the decoded forest at every
/// midpoint level of a scale-1 path.
pub fn discrete_rk_violations(path: &ExplorationPath, replica: u64) -> Result<Vec<Violation>> {
    if path.local_time_scale() != 1.0 {
        return Err(invalid!("the discrete identity needs local time scale 1"));
    }
    let forest = path_to_forest(path)?;
    let levels = path.default_levels();
    let profile = path.local_time_profile(&levels, path.duration())?;
    let alive = forest.alive_counts(&levels)?;
    let mut out = Vec::new();
    for ((level, lt), alive) in profile.iter().zip(alive) {
        let alive = alive as f64;
        if lt != alive {
            out.push(Violation {
                replica,
                what: "local time vs alive count".to_string(),
                at: level,
                observed: lt,
                expected: alive,
                extrema: path.extrema().to_vec(),
            });
        }
    }
    Ok(out)
}

/// Exact coupling: on each sampled path (slope 2), the local time at every
/// midpoint level equals the number of alive individuals of the decoded
/// forest.
pub fn verify_discrete_rk<R: ReplicaRunner>(
    params: &RateParams,
    replicas: u64,
    seed: u64,
    runner: &R,
) -> Result<ExperimentReport> {
    params.validate()?;
    let per = run_all(runner, replicas, |r| {
        let path = sample_path(params, 2.0, &mut Substream::new(seed, r, Lane::Path))?;
        Ok((path.default_levels().len() as f64, discrete_rk_violations(&path, r)?))
    })?;
    let mut b = ReportBuilder::new("verify-rk-discrete", seed, replicas);
    b.rates(params).num("slope", 2.0);
    let levels: Vec<f64> = per.iter().map(|p| p.0).collect();
    b.summary("levels checked", &levels)?;
    let mut violations = 0usize;
    for (_, vs) in per {
        violations += vs.len();
        for v in vs {
            b.violation(v);
        }
    }
    b.check(Check::within("violations", violations as f64, 0.0, 0.0));
    Ok(b.finish())
}

/// Time at which alive counts are compared in the law-equality test.
pub fn law_probe_time(ceiling: f64) -> f64 {
    if ceiling > 0.5 { 0.5 } else { 0.5 * ceiling }
}

/// Decoded sampled paths against directly simulated forests: KS tests on
/// total size, extinction time and the alive count at the probe time.
pub fn verify_law_equality<R: ReplicaRunner>(
    params: &RateParams,
    replicas: u64,
    seed: u64,
    runner: &R,
) -> Result<ExperimentReport> {
    params.validate()?;
    let t = law_probe_time(params.ceiling);
    let stats = |f: &crate::trees::Forest| -> Result<[f64; 3]> {
        Ok([
            f.total_individuals() as f64,
            f.extinction_time(),
            f.alive_count(t)? as f64,
        ])
    };
    let per = run_all(runner, replicas, |r| {
        let path = sample_path(params, 2.0, &mut Substream::new(seed, r, Lane::Path))?;
        let decoded = stats(&path_to_forest(&path)?)?;
        let direct = stats(&sample_forest(params, &mut Substream::new(seed, r, Lane::Forest))?)?;
        Ok((decoded, direct))
    })?;
    let mut b = ReportBuilder::new("verify-law", seed, replicas);
    b.rates(params).num("probe_time", t);
    let names = ["total_individuals", "extinction_time", "alive_count"];
    for (k, name) in names.iter().enumerate() {
        let dec: Vec<f64> = per.iter().map(|p| p.0[k]).collect();
        let dir: Vec<f64> = per.iter().map(|p| p.1[k]).collect();
        b.summary(&format!("{name} (decoded path)"), &dec)?;
        b.summary(&format!("{name} (direct forest)"), &dir)?;
        b.ks(name, &dec, &dir)?;
    }
    Ok(b.finish())
}

/// Paths sampled under a high ceiling and chopped above `level`, against
/// paths sampled directly with ceiling `level`.
pub fn verify_excision<R: ReplicaRunner>(
    params: &RateParams,
    level: f64,
    replicas: u64,
    seed: u64,
    runner: &R,
) -> Result<ExperimentReport> {
    params.validate()?;
    if !(level > 0.0 && level < params.ceiling) {
        return Err(invalid!(
            "excision level {level} must lie strictly between 0 and the ceiling {}",
            params.ceiling
        ));
    }
    let low = RateParams {
        ceiling: level,
        ..*params
    };
    let probe = 0.5 * level;
    let stats = |p: &ExplorationPath| {
        [
            (p.extrema().len() / 2) as f64,
            p.duration(),
            p.ceiling_hits() as f64,
            p.final_local_time(probe),
        ]
    };
    let per = run_all(runner, replicas, |r| {
        let high = sample_path(params, 2.0, &mut Substream::new(seed, r, Lane::Path))?;
        let chopped = high.excise_above(level)?;
        let direct = sample_path(&low, 2.0, &mut Substream::new(seed, r, Lane::Ceiling))?;
        Ok((stats(&chopped), stats(&direct)))
    })?;
    let mut b = ReportBuilder::new("verify-chop", seed, replicas);
    b.rates(params).num("excision_level", level).num("probe_level", probe);
    let names = ["individuals", "duration", "ceiling_hits", "local_time"];
    for (k, name) in names.iter().enumerate() {
        let ch: Vec<f64> = per.iter().map(|p| p.0[k]).collect();
        let di: Vec<f64> = per.iter().map(|p| p.1[k]).collect();
        b.summary(&format!("{name} (excised)"), &ch)?;
        b.summary(&format!("{name} (direct)"), &di)?;
        b.ks(name, &ch, &di)?;
    }
    Ok(b.finish())
}

/// Relative tolerance on reconstructed jump sizes.
pub const JUMP_TOLERANCE: f64 = 1e-12;

/// Reconstruction of the martingale part of the height process of one
/// renormalized path at increasing evaluation times.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Time spent ascending on `[0, s]` for each evaluation time.
    pub uptimes: Vec<f64>,
    /// Number of extrema before the last evaluation time.
    pub jumps_checked: usize,
    /// Largest relative error of a jump size against `2 / (N sigma^2)`, or
    /// of a reflection against 0, in units of `2 / (N sigma^2)`.
    pub max_jump_error: f64,
}

/// Solves the height decomposition for its martingale part:
///
/// `M_s = H_s + (V_s - 1 - 2 R0_s + 2 Ra_s) / (N sigma^2)
///        - (4 alpha / sigma^2) down_s + (4 beta / sigma^2) up_s`,
///
/// where `V` is the slope sign, `R0` and `Ra` count the visits to 0 and to
/// the ceiling in `(0, s]`, and `up`, `down` are the times spent ascending
/// and descending. The level-0 local time is taken to start at 0 at time 0.
pub fn reconstruct_martingale(
    path: &ExplorationPath,
    renorm: &RenormParams,
    times: &[f64],
) -> Result<MartingaleTrace> {
    martingale_from_extrema(path.extrema(), path.slope(), path.ceiling(), renorm, times)
}

/// [`reconstruct_martingale`] on any prefix `0, h_1, h_2, ...` of a path with
/// the given slope and ceiling.
pub fn martingale_from_extrema(
    extrema: &[f64],
    slope: f64,
    a: f64,
    renorm: &RenormParams,
    times: &[f64],
) -> Result<MartingaleTrace> {
    if times.windows(2).any(|w| w[0] >= w[1]) || times.first().is_some_and(|&t| t <= 0.0) {
        return Err(invalid!("evaluation times must be positive and increasing"));
    }
    let ns2 = renorm.big_n as f64 * renorm.sigma * renorm.sigma;
    let unit = 1.0 / ns2;
    let c_down = 4.0 * renorm.alpha / (renorm.sigma * renorm.sigma);
    let c_up = 4.0 * renorm.beta / (renorm.sigma * renorm.sigma);

    let value = |h: f64, up: f64, down: f64, k: i64| h - c_down * down + c_up * up + k as f64 * unit;

    let mut trace = MartingaleTrace {
        times: times.to_vec(),
        values: Vec::with_capacity(times.len()),
        uptimes: Vec::with_capacity(times.len()),
        jumps_checked: 0,
        max_jump_error: 0.0,
    };
    let (mut up, mut down) = (0.0, 0.0);
    let (mut r0, mut ra) = (0i64, 0i64);
    let mut next = 0;
    let mut t = 0.0;
    for w in extrema.windows(2) {
        let t0 = t;
        t += (w[1] - w[0]).abs() / slope;
        let seg = Segment {
            t0,
            t1: t,
            h0: w[0],
            h1: w[1],
        };
        let v: i64 = if seg.is_ascending() { 1 } else { -1 };
        let k = |r0: i64, ra: i64, v: i64| v - 1 - 2 * r0 + 2 * ra;
        while next < times.len() && times[next] < seg.t1 {
            let dt = times[next] - seg.t0;
            let h = seg.h0 + v as f64 * slope * dt;
            let (u, d) = if v > 0 { (up + dt, down) } else { (up, down + dt) };
            trace.values.push(value(h, u, d, k(r0, ra, v)));
            trace.uptimes.push(u);
            next += 1;
        }
        if next == times.len() {
            break;
        }
        let dt = seg.t1 - seg.t0;
        if v > 0 {
            up += dt;
        } else {
            down += dt;
        }
        // jump at the extremum ending this segment
        let before = value(seg.h1, up, down, k(r0, ra, v));
        let (expected, nv) = if seg.h1 == 0.0 {
            r0 += 1;
            (0.0, 1)
        } else if seg.h1 == a {
            ra += 1;
            (0.0, -1)
        } else {
            (2.0 * unit, -v)
        };
        let after = value(seg.h1, up, down, k(r0, ra, nv));
        let err = ((after - before).abs() - expected).abs() / (2.0 * unit);
        trace.max_jump_error = trace.max_jump_error.max(err);
        trace.jumps_checked += 1;
    }
    if trace.values.len() != times.len() {
        return Err(invalid!("path ends before the last evaluation time"));
    }
    Ok(trace)
}

/// Martingale diagnostic on renormalized paths run up to `max(times)`:
/// the mean of `M_s` vanishes, `E[M_s^2] / s` matches the bracket slope
/// `4 / sigma^2` within 10%, and every jump has size `2 / (N sigma^2)`.
pub fn martingale_diagnostic<R: ReplicaRunner>(
    renorm: &RenormParams,
    times: &[f64],
    replicas: u64,
    seed: u64,
    runner: &R,
) -> Result<ExperimentReport> {
    renorm.validate()?;
    let horizon = times.last().copied().ok_or_else(|| invalid!("no evaluation times"))?;
    let per = run_all(runner, replicas, |r| {
        let e = renormalized_extrema_until(renorm, horizon, &mut Substream::new(seed, r, Lane::Path))?;
        martingale_from_extrema(&e, renorm.slope(), renorm.ceiling, renorm, times)
    })?;
    let mut b = ReportBuilder::new("verify-martingale", seed, replicas);
    b.renorm(renorm).num("horizon", horizon);
    for (j, &s) in times.iter().enumerate() {
        let ms: Vec<f64> = per.iter().map(|t| t.values[j]).collect();
        let m = b.summary(&format!("M({s})"), &ms)?;
        b.check(Check::within(format!("mean M({s})"), m.mean, 0.0, 3.0 * m.se_mean));
    }
    let sq: Vec<f64> = per
        .iter()
        .map(|t| {
            let v = t.values[times.len() - 1];
            v * v / horizon
        })
        .collect();
    let m = b.summary(&format!("M({horizon})^2 / {horizon}"), &sq)?;
    let slope = renorm.mass_factor();
    b.check(Check::within("bracket slope", m.mean, slope, 0.1 * slope));
    let fractions: Vec<f64> = per.iter().map(|t| t.uptimes[times.len() - 1] / horizon).collect();
    b.summary(&format!("ascending time fraction on [0, {horizon}]"), &fractions)?;
    let worst = per.iter().map(|t| t.max_jump_error).fold(0.0, f64::max);
    let jumps: u64 = per.iter().map(|t| t.jumps_checked as u64).sum();
    b.int("jumps_checked", jumps);
    b.check(Check::within("jump size relative error", worst, 0.0, JUMP_TOLERANCE));
    Ok(b.finish())
}

/// Median over replicas of `|up_s / s - 1/2|`, the deviation of the
/// ascending time fraction on `[0, s]` from one half.
pub fn time_fraction_deviation<R: ReplicaRunner>(
    renorm: &RenormParams,
    s: f64,
    replicas: u64,
    seed: u64,
    runner: &R,
) -> Result<f64> {
    renorm.validate()?;
    let devs = run_all(runner, replicas, |r| {
        let e = renormalized_extrema_until(renorm, s, &mut Substream::new(seed, r, Lane::Path))?;
        let trace = martingale_from_extrema(&e, renorm.slope(), renorm.ceiling, renorm, &[s])?;
        Ok((trace.uptimes[0] / s - 0.5).abs())
    })?;
    median(&devs)
}

/// Median time-fraction deviations for increasing `N`, checked to decrease.
pub fn verify_time_fraction<R: ReplicaRunner>(
    base: &RenormParams,
    big_ns: &[u64],
    s: f64,
    replicas: u64,
    seed: u64,
    runner: &R,
) -> Result<ExperimentReport> {
    let mut b = ReportBuilder::new("time-fraction", seed, replicas);
    b.renorm(base).num("s", s);
    let mut prev = f64::INFINITY;
    for &n in big_ns {
        let p = RenormParams { big_n: n, ..*base };
        let d = time_fraction_deviation(&p, s, replicas, seed, runner)?;
        b.check(Check::below(format!("median deviation N={n}"), d, prev));
        prev = d;
    }
    Ok(b.finish())
}

/// Generalized Ray–Knight comparison. For each level `t`, the final local
/// time of renormalized paths is compared with `(4 / sigma^2) X_t` for the
/// Feller diffusion (moments and KS) and with `(4 / sigma^2) Z_t / N` for the
/// population at the same `N` (KS). Also checks that the local time at 0
/// equals `(4 / sigma^2) [Nx] / N` on every replica.
pub fn verify_rk_limit<R: ReplicaRunner>(
    renorm: &RenormParams,
    levels: &[f64],
    replicas: u64,
    dt: f64,
    seed: u64,
    runner: &R,
) -> Result<ExperimentReport> {
    renorm.validate()?;
    if levels.is_empty() {
        return Err(invalid!("no levels"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) || levels[0] <= 0.0 {
        return Err(invalid!("levels must be positive and increasing"));
    }
    let top = levels[levels.len() - 1];
    if top >= renorm.ceiling {
        return Err(invalid!("level {top} is not below the ceiling {}", renorm.ceiling));
    }
    let mass = renorm.mass_factor();
    let big_n = renorm.big_n as f64;
    let feller = renorm.feller();
    let per = run_all(runner, replicas, |r| {
        let (l0, lt) = renormalized_local_times(renorm, levels, &mut Substream::new(seed, r, Lane::Path))?;
        let path = sample_feller(&feller, top, dt, &mut Substream::new(seed, r, Lane::Feller))?;
        let fx = levels
            .iter()
            .map(|&t| path.value_at(t).map(|v| mass * v))
            .collect::<Result<Vec<_>>>()?;
        let pop = population_at(renorm, levels, &mut Substream::new(seed, r, Lane::Population))?;
        let px: Vec<f64> = pop.into_iter().map(|z| mass * z as f64 / big_n).collect();
        Ok((l0, lt, fx, px))
    })?;

    let mut b = ReportBuilder::new("verify-rk-limit", seed, replicas);
    b.renorm(renorm).num("dt", dt);
    let zero_expected = mass * renorm.initial_count() as f64 / big_n;
    let zero_err = per
        .iter()
        .map(|p| (p.0 - zero_expected).abs() / zero_expected)
        .fold(0.0, f64::max);
    b.check(Check::within("local time at 0 relative error", zero_err, 0.0, 1e-12));
    for (k, &t) in levels.iter().enumerate() {
        let l: Vec<f64> = per.iter().map(|p| p.1[k]).collect();
        let f: Vec<f64> = per.iter().map(|p| p.2[k]).collect();
        let z: Vec<f64> = per.iter().map(|p| p.3[k]).collect();
        let ml = b.summary(&format!("local time L({t})"), &l)?;
        b.summary(&format!("Feller 4/sigma^2 X({t})"), &f)?;
        b.summary(&format!("population 4/sigma^2 Z({t})/N"), &z)?;
        let mean = mass * feller.mean(t);
        let var = mass * mass * feller.variance(t);
        b.check(Check::within(format!("mean L({t})"), ml.mean, mean, 3.0 * ml.se_mean));
        b.check(Check::within(
            format!("variance L({t})"),
            ml.variance,
            var,
            3.0 * ml.se_variance + VARIANCE_SLACK * var,
        ));
        b.ks(&format!("L({t}) vs Feller"), &l, &f)?;
        b.ks(&format!("L({t}) vs population"), &l, &z)?;
    }
    Ok(b.finish())
}

/// Relative slack on variance comparisons against diffusion values, on top
/// of three standard errors.
pub const VARIANCE_SLACK: f64 = 0.05;

/// Convergence of the rescaled population to the Feller diffusion at time
/// `t`: KS distances for each `N` in `big_ns` against one shared Feller
/// sample, checked to decrease strictly, plus a KS test at the largest `N`.
pub fn verify_population_convergence<R: ReplicaRunner>(
    base: &RenormParams,
    big_ns: &[u64],
    t: f64,
    replicas: u64,
    dt: f64,
    seed: u64,
    runner: &R,
) -> Result<ExperimentReport> {
    base.validate()?;
    let feller = base.feller();
    let fx = run_all(runner, replicas, |r| {
        sample_feller(&feller, t, dt, &mut Substream::new(seed, r, Lane::Feller))?.value_at(t)
    })?;
    let mut b = ReportBuilder::new("population-convergence", seed, replicas);
    b.renorm(base).num("t", t).num("dt", dt);
    b.summary(&format!("Feller X({t})"), &fx)?;
    let mut prev = f64::INFINITY;
    for (k, &n) in big_ns.iter().enumerate() {
        let p = RenormParams { big_n: n, ..*base };
        p.validate()?;
        let offset = k as u64 * replicas;
        let xs = run_all(runner, replicas, |r| {
            let z = population_at(&p, &[t], &mut Substream::new(seed, offset + r, Lane::Population))?;
            Ok(z[0] as f64 / n as f64)
        })?;
        b.summary(&format!("X^N({t}) N={n}"), &xs)?;
        let d = ks_two_sample(&xs, &fx)?;
        b.check(Check::below(format!("KS distance N={n}"), d.distance, prev));
        prev = d.distance;
        if k + 1 == big_ns.len() {
            b.ks(&format!("X^N({t}) N={n} vs Feller"), &xs, &fx)?;
        }
    }
    Ok(b.finish())
}
