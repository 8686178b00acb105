//! Random generation: reflected exploration paths, killed Galton–Watson
//! forests, renormalized birth–death populations and the Feller diffusion.
//!
//! Every sampler is a pure function of its parameters and a [`Substream`].
//! The streaming variants (`*_local_times`, `population_at`) consume random
//! numbers in exactly the same order as their materializing counterparts, so
//! they return the same values the full objects would yield.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::paths::ExplorationPath;
use crate::rng::Substream;
use crate::trees::{Forest, NodeSpec, PopulationTrajectory};

/// Default bound on sampled nodes, path extrema or population events. The
/// streaming samplers, which keep no per-event state, allow this many per
/// initial individual instead.
pub const DEFAULT_LIMIT: usize = 10_000_000;

fn streaming_limit(initial: u64) -> usize {
    DEFAULT_LIMIT.saturating_mul(initial.max(1) as usize)
}

/// Rates of the binary Galton–Watson process and its exploration path.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateParams {
    /// Death rate; lifetimes are exponential with mean `1 / lambda`.
    pub lambda: f64,
    /// Birth rate of each living individual.
    pub mu: f64,
    /// Killing / reflection level, `f64::INFINITY` for none.
    pub ceiling: f64,
    pub ancestors: usize,
}

impl RateParams {
    pub fn new(lambda: f64, mu: f64, ceiling: f64, ancestors: usize) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            ceiling,
            ancestors,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(invalid!("lambda must be positive and finite, got {}", self.lambda));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(invalid!("mu must be positive and finite, got {}", self.mu));
        }
        if self.ceiling.is_nan() || self.ceiling <= 0.0 {
            return Err(invalid!("ceiling must be positive, got {}", self.ceiling));
        }
        if self.ancestors == 0 {
            return Err(invalid!("at least one ancestor is required"));
        }
        if self.ceiling.is_infinite() && self.mu > self.lambda {
            return Err(invalid!(
                "supercritical rates (mu {} > lambda {}) need a finite ceiling",
                self.mu,
                self.lambda
            ));
        }
        Ok(())
    }
}

/// Parameters of the population with `[Nx]` ancestors, birth rate
/// `sigma^2 N / 2 + alpha` and death rate `sigma^2 N / 2 + beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RenormParams {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub big_n: u64,
    pub x: f64,
    /// Killing / reflection level, `f64::INFINITY` for none. Paths need a
    /// finite one when `alpha > beta`.
    pub ceiling: f64,
}

impl RenormParams {
    pub fn new(sigma: f64, alpha: f64, beta: f64, big_n: u64, x: f64, ceiling: f64) -> Result<Self> {
        let p = Self {
            sigma,
            alpha,
            beta,
            big_n,
            x,
            ceiling,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(invalid!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0 && self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid!("alpha and beta must be nonnegative"));
        }
        if self.big_n == 0 {
            return Err(invalid!("N must be at least 1"));
        }
        if !(self.x.is_finite() && self.x > 0.0) {
            return Err(invalid!("x must be positive, got {}", self.x));
        }
        if self.initial_count() == 0 {
            return Err(invalid!("[N x] = 0 ancestors for N = {}, x = {}", self.big_n, self.x));
        }
        if self.ceiling.is_nan() || self.ceiling <= 0.0 {
            return Err(invalid!("ceiling must be positive, got {}", self.ceiling));
        }
        Ok(())
    }

    pub fn mu_n(&self) -> f64 {
        0.5 * self.sigma * self.sigma * self.big_n as f64 + self.alpha
    }

    pub fn lambda_n(&self) -> f64 {
        0.5 * self.sigma * self.sigma * self.big_n as f64 + self.beta
    }

    /// Slope `2N` of the renormalized exploration path.
    pub fn slope(&self) -> f64 {
        2.0 * self.big_n as f64
    }

    /// `[N x]`; products within rounding error of an integer count as that
    /// integer, so that e.g. `N = 100, x = 0.29` gives 29.
    pub fn initial_count(&self) -> u64 {
        let v = self.big_n as f64 * self.x;
        let r = libm::round(v);
        if (v - r).abs() <= 1e-9 * r.max(1.0) {
            r as u64
        } else {
            libm::floor(v) as u64
        }
    }

    /// Weight `4 / (N sigma^2)` of one crossing pair.
    pub fn pair_scale(&self) -> f64 {
        4.0 / (self.big_n as f64 * self.sigma * self.sigma)
    }

    /// `4 / sigma^2`, the factor between local time and population mass.
    pub fn mass_factor(&self) -> f64 {
        4.0 / (self.sigma * self.sigma)
    }

    pub fn rate_params(&self) -> RateParams {
        RateParams {
            lambda: self.lambda_n(),
            mu: self.mu_n(),
            ceiling: self.ceiling,
            ancestors: self.initial_count() as usize,
        }
    }

    pub fn feller(&self) -> FellerParams {
        FellerParams {
            x: self.x,
            alpha: self.alpha,
            beta: self.beta,
            sigma: self.sigma,
        }
    }
}

/// Parameters of `dX = (alpha - beta) X dt + sigma sqrt(X) dB`, `X_0 = x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FellerParams {
    pub x: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl FellerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.x >= 0.0) {
            return Err(invalid!("x must be nonnegative, got {}", self.x));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(invalid!("alpha and beta must be finite"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(invalid!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }

    pub fn growth(&self) -> f64 {
        self.alpha - self.beta
    }

    /// `E[X_t] = x e^{(alpha - beta) t}`.
    pub fn mean(&self, t: f64) -> f64 {
        self.x * libm::exp(self.growth() * t)
    }

    /// `Var[X_t]`, from `d/dt Var = 2 r Var + sigma^2 E[X]`.
    pub fn variance(&self, t: f64) -> f64 {
        let r = self.growth();
        let s2 = self.sigma * self.sigma;
        if r.abs() < 1e-12 {
            s2 * self.x * t
        } else {
            let e = libm::exp(r * t);
            s2 * self.x * e * (e - 1.0) / r
        }
    }
}

/// Euler–Maruyama trajectory on a uniform grid, `values[k] = X_{k dt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FellerPath {
    pub params: FellerParams,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl FellerPath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| k as f64 * self.dt)
    }

    /// Value at a grid time.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let k = grid_index(t, self.dt)?;
        self.values
            .get(k)
            .copied()
            .ok_or_else(|| invalid!("time {t} beyond the simulated horizon"))
    }
}

fn grid_index(t: f64, dt: f64) -> Result<usize> {
    let k = libm::round(t / dt);
    if !(k >= 0.0 && (k * dt - t).abs() <= 1e-9 * t.abs().max(dt)) {
        return Err(invalid!("time {t} is not a multiple of dt = {dt}"));
    }
    Ok(k as usize)
}

enum Stop {
    Excursions(usize),
    /// First extremum at or after the given time, possibly mid-excursion.
    Horizon(f64),
}

/// Core zig-zag construction. Ascends by `Exp(lambda)` capped at the
/// ceiling, descends by `Exp(mu)` capped at 0, and reports every extremum
/// after the initial 0. Returns the number of excursions produced.
#[allow(clippy::too_many_arguments)]
fn zigzag<F: FnMut(f64)>(
    lambda: f64,
    mu: f64,
    ceiling: f64,
    slope: f64,
    stop: Stop,
    stream: &mut Substream,
    limit: usize,
    mut emit: F,
) -> Result<usize> {
    let mut emitted = 0usize;
    let mut excursions = 0usize;
    let mut time = 0.0;
    loop {
        let mut h = 0.0;
        loop {
            let peak = (h + stream.exp(lambda)).min(ceiling);
            let low = (peak - stream.exp(mu)).max(0.0);
            emit(peak);
            emit(low);
            time += (2.0 * peak - h - low) / slope;
            emitted += 2;
            if emitted > limit {
                return Err(Error::ResourceLimit {
                    what: "path extrema",
                    limit,
                });
            }
            if let Stop::Horizon(t) = stop {
                if time >= t {
                    return Ok(excursions);
                }
            }
            if low == 0.0 {
                break;
            }
            h = low;
        }
        excursions += 1;
        if let Stop::Excursions(m) = stop {
            if excursions >= m {
                return Ok(excursions);
            }
        }
    }
}

/// Samples an exploration path under the reflected zig-zag law with slope
/// `slope`, stopped at the `ancestors`-th return to 0.
pub fn sample_path(params: &RateParams, slope: f64, stream: &mut Substream) -> Result<ExplorationPath> {
    sample_path_with_limit(params, slope, stream, DEFAULT_LIMIT)
}

pub fn sample_path_with_limit(
    params: &RateParams,
    slope: f64,
    stream: &mut Substream,
    limit: usize,
) -> Result<ExplorationPath> {
    params.validate()?;
    if !(slope.is_finite() && slope > 0.0) {
        return Err(invalid!("slope must be positive, got {slope}"));
    }
    let mut extrema = alloc::vec![0.0];
    let m = zigzag(
        params.lambda,
        params.mu,
        params.ceiling,
        slope,
        Stop::Excursions(params.ancestors),
        stream,
        limit,
        |h| extrema.push(h),
    )?;
    Ok(ExplorationPath::from_parts(slope, params.ceiling, extrema, m, 1.0))
}

/// Renormalized exploration path: slope `2N`, rates `(lambda_N, mu_N)`,
/// stopped at the `[Nx]`-th return to 0, pair weight `4 / (N sigma^2)`.
pub fn sample_renormalized_path(renorm: &RenormParams, stream: &mut Substream) -> Result<ExplorationPath> {
    renorm.validate()?;
    let path = sample_path(&renorm.rate_params(), renorm.slope(), stream)?;
    path.with_local_time_scale(renorm.pair_scale())
}

/// Extrema `0, h_1, h_2, ...` of a renormalized path, cut at the first
/// extremum at or after time `horizon`. This is a prefix of the path, not a
/// canonical path: it usually ends mid-excursion.
pub fn renormalized_extrema_until(renorm: &RenormParams, horizon: f64, stream: &mut Substream) -> Result<Vec<f64>> {
    renorm.validate()?;
    renorm.rate_params().validate()?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(invalid!("horizon must be finite and nonnegative, got {horizon}"));
    }
    let mut extrema = alloc::vec![0.0];
    zigzag(
        renorm.lambda_n(),
        renorm.mu_n(),
        renorm.ceiling,
        renorm.slope(),
        Stop::Horizon(horizon),
        stream,
        DEFAULT_LIMIT,
        |h| extrema.push(h),
    )?;
    Ok(extrema)
}

/// Final local times `L_tau(t)` of a renormalized path at each of `levels`,
/// together with `L_tau(0)`, computed on the fly without storing the path.
/// Identical to `sample_renormalized_path(..).final_local_time(t)`.
pub fn renormalized_local_times(
    renorm: &RenormParams,
    levels: &[f64],
    stream: &mut Substream,
) -> Result<(f64, Vec<f64>)> {
    renorm.validate()?;
    renorm.rate_params().validate()?;
    let mut counts = alloc::vec![0u64; levels.len()];
    let mut zero = 0u64;
    let mut prev = 0.0f64;
    zigzag(
        renorm.lambda_n(),
        renorm.mu_n(),
        renorm.ceiling,
        renorm.slope(),
        Stop::Excursions(renorm.initial_count() as usize),
        stream,
        streaming_limit(renorm.initial_count()),
        |h| {
            let (lo, hi) = if h > prev { (prev, h) } else { (h, prev) };
            if lo == 0.0 {
                zero += 1;
            }
            for (c, &l) in counts.iter_mut().zip(levels) {
                if lo <= l && l < hi {
                    *c += 1;
                }
            }
            prev = h;
        },
    )?;
    let scale = renorm.pair_scale();
    let to_lt = |c: u64| scale * c as f64 / 2.0;
    Ok((to_lt(zero), counts.into_iter().map(to_lt).collect()))
}

/// Direct simulation of the killed Galton–Watson forest: every individual
/// lives `Exp(lambda)` (truncated at the ceiling) and gives birth at the
/// points of a rate-`mu` Poisson process during her life.
pub fn sample_forest(params: &RateParams, stream: &mut Substream) -> Result<Forest> {
    sample_forest_with_limit(params, stream, DEFAULT_LIMIT)
}

pub fn sample_forest_with_limit(params: &RateParams, stream: &mut Substream, limit: usize) -> Result<Forest> {
    params.validate()?;
    let a = params.ceiling;
    let mut specs: Vec<NodeSpec> = Vec::with_capacity(params.ancestors);
    for _ in 0..params.ancestors {
        specs.push(NodeSpec {
            parent: None,
            birth_time: 0.0,
            death_time: stream.exp(params.lambda).min(a),
        });
    }
    let mut pending: Vec<usize> = (0..params.ancestors).rev().collect();
    while let Some(i) = pending.pop() {
        let NodeSpec {
            birth_time,
            death_time,
            ..
        } = specs[i];
        let mut t = birth_time + stream.exp(params.mu);
        while t < death_time {
            if specs.len() >= limit {
                return Err(Error::ResourceLimit {
                    what: "forest nodes",
                    limit,
                });
            }
            specs.push(NodeSpec {
                parent: Some(i),
                birth_time: t,
                death_time: (t + stream.exp(params.lambda)).min(a),
            });
            pending.push(specs.len() - 1);
            t += stream.exp(params.mu);
        }
    }
    Forest::from_specs(&specs, a)
}

/// Gillespie simulation of the birth–death chain with per-capita rates
/// `(mu_N, lambda_N)` from `[Nx]` individuals, reporting `(time, count)`
/// after each event up to `horizon`.
fn gillespie<F: FnMut(f64, u64)>(
    renorm: &RenormParams,
    horizon: f64,
    stream: &mut Substream,
    limit: usize,
    mut on_event: F,
) -> Result<()> {
    renorm.validate()?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(invalid!("horizon must be finite and nonnegative, got {horizon}"));
    }
    let total = renorm.mu_n() + renorm.lambda_n();
    let p_birth = renorm.mu_n() / total;
    let mut z = renorm.initial_count();
    let mut t = 0.0;
    let mut events = 0usize;
    while z > 0 {
        t += stream.exp(total * z as f64);
        if t > horizon {
            break;
        }
        if stream.bernoulli(p_birth) {
            z += 1;
        } else {
            z -= 1;
        }
        events += 1;
        if events > limit {
            return Err(Error::ResourceLimit {
                what: "population events",
                limit,
            });
        }
        on_event(t, z);
    }
    Ok(())
}

/// Population trajectory `Z^{[Nx]}` on `[0, horizon]`. Use
/// [`PopulationTrajectory::rescaled_at`] with `N` for `X^{N,x}`.
pub fn sample_population(
    renorm: &RenormParams,
    horizon: f64,
    stream: &mut Substream,
) -> Result<PopulationTrajectory> {
    let mut times = Vec::new();
    let mut counts = Vec::new();
    gillespie(renorm, horizon, stream, DEFAULT_LIMIT, |t, z| {
        times.push(t);
        counts.push(z);
    })?;
    Ok(PopulationTrajectory::from_parts(renorm.initial_count(), times, counts))
}

/// `Z^{[Nx]}_t` at increasing observation times, without storing the
/// trajectory. Matches `sample_population(..).value_at(t)`.
pub fn population_at(renorm: &RenormParams, times: &[f64], stream: &mut Substream) -> Result<Vec<u64>> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid!("observation times must be nondecreasing"));
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut z = renorm.initial_count();
    gillespie(renorm, horizon, stream, streaming_limit(z), |t, new_z| {
        while out.len() < times.len() && times[out.len()] < t {
            out.push(z);
        }
        z = new_z;
    })?;
    out.resize(times.len(), z);
    Ok(out)
}

/// Full-truncation Euler–Maruyama scheme for the Feller diffusion. Once the
/// path hits 0 it stays there: with linear drift nothing can revive it.
pub fn sample_feller(params: &FellerParams, horizon: f64, dt: f64, stream: &mut Substream) -> Result<FellerPath> {
    params.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid!("dt must be positive, got {dt}"));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(invalid!("horizon must be finite and nonnegative, got {horizon}"));
    }
    let steps = grid_index(horizon, dt)?;
    let drift = params.growth() * dt;
    let vol = params.sigma * libm::sqrt(dt);
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = params.x;
    values.push(x);
    for _ in 0..steps {
        if x > 0.0 {
            x = (x + drift * x + vol * libm::sqrt(x) * stream.normal()).max(0.0);
        }
        values.push(x);
    }
    Ok(FellerPath {
        params: *params,
        dt,
        values,
    })
}
