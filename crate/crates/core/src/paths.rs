//! Exploration paths and their exact geometry.
//!
//! A path is stored canonically as the alternating sequence of its local
//! extrema heights `0, M_1, m_1, M_2, m_2, ..., 0` together with the common
//! absolute slope `p`. Breakpoint times are never stored: the k-th segment
//! lasts `|h_{k+1} - h_k| / p`. All level-indexed quantities (crossing counts,
//! local time, occupation integrals) are computed segment by segment from the
//! extrema, so they are exact up to floating-point rounding of the inputs.
//!
//! Level conventions follow right-continuity in the level: a segment covers
//! the half-open height band `[low, high)`. Consequently a local minimum sitting
//! exactly at a level contributes one down- and one up-crossing, and a local
//! maximum exactly at a level contributes none.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Relative slack allowed when a caller passes `up_to` equal to the duration
/// computed by a different summation order.
const DURATION_SLACK: f64 = 1e-12;

/// Canonical piecewise-linear exploration path with slopes `±p`, reflected
/// below `ceiling` and stopped at its `excursion_count`-th return to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationPath {
    slope: f64,
    ceiling: f64,
    extrema: Vec<f64>,
    excursions: usize,
    local_time_scale: f64,
}

/// One linear piece of a path, possibly truncated at a stopping time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub h0: f64,
    pub h1: f64,
}

impl Segment {
    pub fn is_ascending(&self) -> bool {
        self.h1 > self.h0
    }

    /// The half-open height band `[low, high)` swept by the segment.
    pub fn band(&self) -> (f64, f64) {
        if self.h1 > self.h0 {
            (self.h0, self.h1)
        } else {
            (self.h1, self.h0)
        }
    }

    fn covers(&self, level: f64) -> bool {
        let (lo, hi) = self.band();
        lo <= level && level < hi
    }
}

impl ExplorationPath {
    /// Builds a path from its extrema, checking every structural invariant:
    /// strict alternation of maxima and minima, heights inside `[0, ceiling]`,
    /// a final zero, and pairwise distinct nonzero minima inside each excursion.
    pub fn new(slope: f64, ceiling: f64, extrema: Vec<f64>) -> Result<Self> {
        if !(slope.is_finite() && slope > 0.0) {
            return Err(invalid!("slope must be positive and finite, got {slope}"));
        }
        if ceiling.is_nan() || ceiling <= 0.0 {
            return Err(invalid!("ceiling must be positive, got {ceiling}"));
        }
        if extrema.len() < 3 || extrema.len().is_multiple_of(2) {
            return Err(invalid!(
                "extrema must alternate 0, max, min, ..., 0 (odd length >= 3), got {} values",
                extrema.len()
            ));
        }
        if extrema[0] != 0.0 || *extrema.last().unwrap() != 0.0 {
            return Err(invalid!("path must start and end at height 0"));
        }
        for (i, &h) in extrema.iter().enumerate() {
            if !h.is_finite() || h < 0.0 || h > ceiling {
                return Err(invalid!(
                    "extremum {i} = {h} outside [0, {ceiling}]"
                ));
            }
        }
        for i in (1..extrema.len()).step_by(2) {
            if !(extrema[i] > extrema[i - 1] && extrema[i] > extrema[i + 1]) {
                return Err(invalid!(
                    "extremum {i} = {} is not a strict local maximum",
                    extrema[i]
                ));
            }
        }
        let mut excursions = 0;
        let mut minima: Vec<f64> = Vec::new();
        for i in (2..extrema.len()).step_by(2) {
            let h = extrema[i];
            if h == 0.0 {
                excursions += 1;
                minima.sort_unstable_by(f64::total_cmp);
                if let Some(w) = minima.windows(2).find(|w| w[0] == w[1]) {
                    return Err(invalid!(
                        "excursion {excursions} has two local minima at height {}",
                        w[0]
                    ));
                }
                minima.clear();
            } else {
                minima.push(h);
            }
        }
        Ok(Self {
            slope,
            ceiling,
            extrema,
            excursions,
            local_time_scale: 1.0,
        })
    }

    /// Internal constructor for paths whose invariants hold by construction.
    pub(crate) fn from_parts(
        slope: f64,
        ceiling: f64,
        extrema: Vec<f64>,
        excursions: usize,
        local_time_scale: f64,
    ) -> Self {
        debug_assert!(extrema.len() >= 3 && extrema.len() % 2 == 1);
        debug_assert_eq!(extrema.iter().skip(1).step_by(2).count(), (extrema.len() - 1) / 2);
        Self {
            slope,
            ceiling,
            extrema,
            excursions,
            local_time_scale,
        }
    }

    /// Sets the weight of one crossing pair in [`local_time`](Self::local_time).
    pub fn with_local_time_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid!("local time scale must be positive, got {scale}"));
        }
        self.local_time_scale = scale;
        Ok(self)
    }

    /// Concatenates paths excursion-wise. Slopes, ceilings and scales must agree.
    pub fn concat(parts: &[ExplorationPath]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| invalid!("cannot concatenate zero paths"))?;
        let mut extrema = Vec::with_capacity(parts.iter().map(|p| p.extrema.len()).sum());
        extrema.push(0.0);
        for p in parts {
            if p.slope != first.slope
                || p.ceiling != first.ceiling
                || p.local_time_scale != first.local_time_scale
            {
                return Err(invalid!("concatenated paths must share slope, ceiling and scale"));
            }
            extrema.extend_from_slice(&p.extrema[1..]);
        }
        Ok(Self::from_parts(
            first.slope,
            first.ceiling,
            extrema,
            parts.iter().map(|p| p.excursions).sum(),
            first.local_time_scale,
        ))
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Reflection level; `f64::INFINITY` when the path is not reflected.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn extrema(&self) -> &[f64] {
        &self.extrema
    }

    pub fn excursion_count(&self) -> usize {
        self.excursions
    }

    pub fn local_time_scale(&self) -> f64 {
        self.local_time_scale
    }

    pub fn max_height(&self) -> f64 {
        self.extrema.iter().copied().fold(0.0, f64::max)
    }

    /// Number of local maxima sitting exactly on the ceiling.
    pub fn ceiling_hits(&self) -> usize {
        self.extrema
            .iter()
            .skip(1)
            .step_by(2)
            .filter(|&&h| h == self.ceiling)
            .count()
    }

    /// Breakpoint times `t_0 = 0, t_1, ...`, one per extremum.
    pub fn breakpoint_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::with_capacity(self.extrema.len());
        out.push(0.0);
        for w in self.extrema.windows(2) {
            t += (w[1] - w[0]).abs() / self.slope;
            out.push(t);
        }
        out
    }

    /// Total duration, i.e. the time of the last return to 0.
    pub fn duration(&self) -> f64 {
        self.extrema
            .windows(2)
            .fold(0.0, |t, w| t + (w[1] - w[0]).abs() / self.slope)
    }

    /// All segments in time order.
    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let mut t = 0.0;
        self.extrema.windows(2).map(move |w| {
            let t0 = t;
            t += (w[1] - w[0]).abs() / self.slope;
            Segment {
                t0,
                t1: t,
                h0: w[0],
                h1: w[1],
            }
        })
    }

    /// Segments restricted to `[0, up_to]`; the last one may be truncated.
    pub fn segments_until(&self, up_to: f64) -> Result<Vec<Segment>> {
        let total = self.duration();
        if !(up_to >= 0.0 && up_to <= total * (1.0 + DURATION_SLACK)) {
            return Err(invalid!("time {up_to} outside [0, {total}]"));
        }
        let full = up_to >= total;
        let mut out = Vec::new();
        for seg in self.segments() {
            if full || seg.t1 <= up_to {
                out.push(seg);
                continue;
            }
            if seg.t0 < up_to {
                let dh = (up_to - seg.t0) * self.slope;
                let h1 = if seg.is_ascending() {
                    seg.h0 + dh
                } else {
                    seg.h0 - dh
                };
                out.push(Segment {
                    t0: seg.t0,
                    t1: up_to,
                    h0: seg.h0,
                    h1,
                });
            }
            break;
        }
        Ok(out)
    }

    /// Up- and down-crossings of `level` during `[0, up_to]`.
    pub fn crossing_count(&self, level: f64, up_to: f64) -> Result<(u64, u64)> {
        check_level(level)?;
        let mut up = 0;
        let mut down = 0;
        for seg in self.segments_until(up_to)? {
            if seg.covers(level) {
                if seg.is_ascending() {
                    up += 1;
                } else {
                    down += 1;
                }
            }
        }
        Ok((up, down))
    }

    /// Local time at `level` accumulated by `up_to`: the number of crossing
    /// pairs times [`local_time_scale`](Self::local_time_scale). Mid-excursion
    /// an unmatched crossing counts as half a pair, which is exactly the
    /// occupation density of the band.
    pub fn local_time(&self, level: f64, up_to: f64) -> Result<f64> {
        let (up, down) = self.crossing_count(level, up_to)?;
        Ok(self.local_time_scale * (up + down) as f64 / 2.0)
    }

    /// Local time at `level` over the whole path, without time bookkeeping.
    pub fn final_local_time(&self, level: f64) -> f64 {
        let n = self
            .extrema
            .windows(2)
            .filter(|w| {
                let (lo, hi) = if w[1] > w[0] { (w[0], w[1]) } else { (w[1], w[0]) };
                lo <= level && level < hi
            })
            .count();
        self.local_time_scale * n as f64 / 2.0
    }

    /// Midpoints between consecutive distinct extremum heights. Every such
    /// level is crossed strictly, away from all breakpoints.
    pub fn default_levels(&self) -> Vec<f64> {
        let mut hs = self.extrema.clone();
        hs.sort_unstable_by(f64::total_cmp);
        hs.dedup();
        hs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Local time evaluated on an increasing grid of levels in one sweep.
    pub fn local_time_profile(&self, levels: &[f64], up_to: f64) -> Result<LocalTimeProfile> {
        for &l in levels {
            check_level(l)?;
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("profile levels must be strictly increasing"));
        }
        let mut diff = alloc::vec![0i64; levels.len() + 1];
        let mut ceiling_crossings = 0u64;
        for seg in self.segments_until(up_to)? {
            let (lo, hi) = seg.band();
            let i = levels.partition_point(|&l| l < lo);
            let j = levels.partition_point(|&l| l < hi);
            diff[i] += 1;
            diff[j] -= 1;
            // the band touches the ceiling from below
            if hi == self.ceiling && lo < hi {
                ceiling_crossings += 1;
            }
        }
        let mut running = 0i64;
        let scale = self.local_time_scale;
        let values = diff[..levels.len()]
            .iter()
            .map(|d| {
                running += d;
                scale * running as f64 / 2.0
            })
            .collect();
        Ok(LocalTimeProfile {
            levels: levels.to_vec(),
            values,
            scale,
            ceiling_value: scale * ceiling_crossings as f64 / 2.0,
        })
    }

    /// `∫_0^up_to g(H_r) dr`, computed exactly segment by segment.
    pub fn occupation_integral(&self, g: &StepFunction, up_to: f64) -> Result<f64> {
        Ok(self
            .segments_until(up_to)?
            .iter()
            .map(|seg| {
                let (lo, hi) = seg.band();
                g.integral_over(lo, hi) / self.slope
            })
            .sum())
    }

    /// `∫ g(t) L_up_to(t) dt`, integrating the local-time profile band by band
    /// between consecutive critical heights. Independent of the segment sweep
    /// used by [`occupation_integral`](Self::occupation_integral); the two are
    /// related by `occupation_integral * p * scale / 2 == local_time_integral`.
    pub fn local_time_integral(&self, g: &StepFunction, up_to: f64) -> Result<f64> {
        let segs = self.segments_until(up_to)?;
        let mut cuts: Vec<f64> = segs.iter().flat_map(|s| [s.h0, s.h1]).collect();
        let top = cuts.iter().copied().fold(0.0, f64::max);
        cuts.extend(g.breaks().iter().copied().filter(|&b| b > 0.0 && b < top));
        cuts.sort_unstable_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let weight = g.integral_over(w[0], w[1]);
            if weight != 0.0 {
                total += weight * self.local_time(mid, up_to)?;
            }
        }
        Ok(total)
    }

    /// Time at which the level-0 pair count first reaches `threshold`, i.e. the
    /// `threshold`-th return to 0.
    pub fn tau(&self, threshold: usize) -> Result<f64> {
        if threshold > self.excursions {
            return Err(invalid!(
                "threshold {threshold} exceeds the {} excursions of the path",
                self.excursions
            ));
        }
        if threshold == 0 {
            return Ok(0.0);
        }
        let mut seen = 0;
        let mut t = 0.0;
        for w in self.extrema.windows(2) {
            t += (w[1] - w[0]).abs() / self.slope;
            if w[1] == 0.0 {
                seen += 1;
                if seen == threshold {
                    return Ok(t);
                }
            }
        }
        unreachable!("excursion count is consistent with the extrema")
    }

    /// Deletes every sub-excursion above `level` and glues the remaining
    /// pieces back together in time. Each deleted excursion leaves a local
    /// maximum exactly at `level`, which becomes the new ceiling. When `level`
    /// is at or above the current ceiling the path is returned unchanged.
    pub fn excise_above(&self, level: f64) -> Result<ExplorationPath> {
        if level.is_nan() || level <= 0.0 {
            return Err(invalid!("excision level must be positive, got {level}"));
        }
        if level >= self.ceiling {
            return Ok(self.clone());
        }
        if self.extrema.contains(&level) {
            return Err(invalid!(
                "excision level {level} coincides with an extremum height"
            ));
        }
        let mut out = Vec::with_capacity(self.extrema.len());
        let mut above = false;
        for &h in &self.extrema {
            if above {
                if h < level {
                    out.push(h);
                    above = false;
                }
            } else if h > level {
                out.push(level);
                above = true;
            } else {
                out.push(h);
            }
        }
        Ok(Self::from_parts(
            self.slope,
            level,
            out,
            self.excursions,
            self.local_time_scale,
        ))
    }
}

fn check_level(level: f64) -> Result<()> {
    if level.is_finite() && level >= 0.0 {
        Ok(())
    } else {
        Err(invalid!("level must be finite and nonnegative, got {level}"))
    }
}

/// Local time evaluated on a grid of levels.
///
/// `ceiling_value` is the left limit `L(a-)` at the ceiling, reported apart
/// from the grid because the profile itself is right-continuous and vanishes
/// from the ceiling upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeProfile {
    levels: Vec<f64>,
    values: Vec<f64>,
    scale: f64,
    ceiling_value: f64,
}

impl LocalTimeProfile {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn ceiling_value(&self) -> f64 {
        self.ceiling_value
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.levels.iter().copied().zip(self.values.iter().copied())
    }
}

/// Piecewise-constant function on levels: `values[i]` on
/// `[breaks[i], breaks[i+1])`, zero outside `[breaks[0], breaks[last])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || values.len() + 1 != breaks.len() {
            return Err(invalid!(
                "step function needs n+1 breaks for n values, got {} and {}",
                breaks.len(),
                values.len()
            ));
        }
        if breaks.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid!("step function entries must be finite"));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("step function breaks must be strictly increasing"));
        }
        Ok(Self { breaks, values })
    }

    /// `value` on `[lo, hi)`.
    pub fn indicator(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::new(alloc::vec![lo, hi], alloc::vec![value])
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.breaks[0] {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b <= x);
        self.values.get(i - 1).copied().unwrap_or(0.0)
    }

    /// `∫_lo^hi g(t) dt` for `lo <= hi`.
    pub fn integral_over(&self, lo: f64, hi: f64) -> f64 {
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| {
                let overlap = hi.min(w[1]) - lo.max(w[0]);
                if overlap > 0.0 {
                    v * overlap
                } else {
                    0.0
                }
            })
            .sum()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Extrema `[0, 3, 1, 2.5, 0]` with slope 2.
    pub fn p_star() -> ExplorationPath {
        ExplorationPath::new(2.0, f64::INFINITY, alloc::vec![0.0, 3.0, 1.0, 2.5, 0.0]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::p_star;
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_malformed_extrema() {
        let inf = f64::INFINITY;
        assert!(ExplorationPath::new(2.0, inf, vec![0.0, 1.0]).is_err());
        assert!(ExplorationPath::new(2.0, inf, vec![0.0, 1.0, 2.0, 3.0, 0.0]).is_err());
        assert!(ExplorationPath::new(2.0, inf, vec![0.0, 1.0, 0.5]).is_err());
        assert!(ExplorationPath::new(2.0, 2.0, vec![0.0, 3.0, 0.0]).is_err());
        assert!(ExplorationPath::new(0.0, inf, vec![0.0, 1.0, 0.0]).is_err());
        // tied minima inside one excursion
        let tied = vec![0.0, 3.0, 1.0, 2.0, 1.0, 2.0, 0.0];
        assert!(ExplorationPath::new(2.0, inf, tied).is_err());
        // the same minimum height in two different excursions is fine
        let ok = vec![0.0, 3.0, 1.0, 2.0, 0.0, 3.0, 1.0, 2.0, 0.0];
        assert_eq!(ExplorationPath::new(2.0, inf, ok).unwrap().excursion_count(), 2);
    }

    #[test]
    fn times_are_derived_from_heights() {
        let p = p_star();
        assert_eq!(p.breakpoint_times(), vec![0.0, 1.5, 2.5, 3.25, 4.5]);
        assert_eq!(p.duration(), 4.5);
    }

    #[test]
    fn crossing_counts_on_p_star() {
        let p = p_star();
        let end = p.duration();
        assert_eq!(p.crossing_count(2.0, end).unwrap(), (2, 2));
        assert_eq!(p.crossing_count(2.7, end).unwrap(), (1, 1));
        assert_eq!(p.crossing_count(3.5, end).unwrap(), (0, 0));
        // a minimum exactly on the level counts twice, a maximum not at all
        assert_eq!(p.crossing_count(1.0, end).unwrap(), (2, 2));
        assert_eq!(p.crossing_count(3.0, end).unwrap(), (0, 0));
        assert!(p.crossing_count(-1.0, end).is_err());
        assert!(p.crossing_count(1.0, end + 1.0).is_err());
    }

    #[test]
    fn local_time_on_p_star() {
        let p = p_star();
        let end = p.duration();
        assert_eq!(p.local_time(2.0, end).unwrap(), 2.0);
        assert_eq!(p.local_time(0.0, end).unwrap(), 1.0);
        assert_eq!(p.local_time(0.5, end).unwrap(), 1.0);
        assert_eq!(p.final_local_time(2.0), 2.0);
        // halfway up the first ascent: one unmatched crossing
        assert_eq!(p.local_time(0.5, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn profile_matches_pointwise_local_time() {
        let p = p_star();
        let levels = p.default_levels();
        assert_eq!(levels, vec![0.5, 1.75, 2.75]);
        let prof = p.local_time_profile(&levels, p.duration()).unwrap();
        assert_eq!(prof.values(), &[1.0, 2.0, 1.0]);
        assert_eq!(prof.ceiling_value(), 0.0);
        for t in [0.3, 1.0, 2.2, 3.7] {
            let partial = p.local_time_profile(&levels, t).unwrap();
            for (l, v) in partial.iter() {
                assert_eq!(v, p.local_time(l, t).unwrap());
            }
        }
        assert!(p.local_time_profile(&[1.0, 0.5], 1.0).is_err());
    }

    #[test]
    fn ceiling_value_counts_visits() {
        let p = ExplorationPath::new(2.0, 2.0, vec![0.0, 2.0, 1.0, 2.0, 0.0]).unwrap();
        let prof = p.local_time_profile(&[1.5, 2.5], p.duration()).unwrap();
        assert_eq!(prof.values(), &[2.0, 0.0]);
        assert_eq!(prof.ceiling_value(), 2.0);
        assert_eq!(p.ceiling_hits(), 2);
    }

    #[test]
    fn occupation_integrals_on_p_star() {
        let p = p_star();
        let end = p.duration();
        let one = StepFunction::indicator(0.0, 3.0, 1.0).unwrap();
        assert_eq!(p.occupation_integral(&one, end).unwrap(), 4.5);
        let band = StepFunction::indicator(1.0, 2.5, 1.0).unwrap();
        assert_eq!(p.occupation_integral(&band, end).unwrap(), 3.0);
        let zero = StepFunction::indicator(0.0, 3.0, 0.0).unwrap();
        assert_eq!(p.occupation_integral(&zero, end).unwrap(), 0.0);
        assert_eq!(p.local_time_integral(&band, end).unwrap(), 3.0);
        assert_eq!(p.local_time_integral(&one, end).unwrap(), 4.5);
    }

    #[test]
    fn tau_on_p_star_and_its_double() {
        let p = p_star();
        assert_eq!(p.tau(1).unwrap(), 4.5);
        assert_eq!(p.tau(0).unwrap(), 0.0);
        assert!(p.tau(2).is_err());
        let pp = ExplorationPath::concat(&[p.clone(), p]).unwrap();
        assert_eq!(pp.excursion_count(), 2);
        assert_eq!(pp.tau(1).unwrap(), 4.5);
        assert_eq!(pp.tau(2).unwrap(), 9.0);
    }

    #[test]
    fn excision_on_p_star() {
        let p = p_star();
        let cut = p.excise_above(2.0).unwrap();
        assert_eq!(cut.extrema(), &[0.0, 2.0, 1.0, 2.0, 0.0]);
        assert_eq!(cut.ceiling(), 2.0);
        assert_eq!(p.excise_above(4.0).unwrap().extrema(), p.extrema());
        assert_eq!(p.excise_above(2.2).unwrap().excise_above(2.0).unwrap(), cut);
        assert!(p.excise_above(2.5).is_err());
        assert!(p.excise_above(0.0).is_err());
    }

    #[test]
    fn step_function_eval() {
        let g = StepFunction::new(vec![0.0, 1.0, 2.0], vec![3.0, 5.0]).unwrap();
        assert_eq!(g.eval(-0.1), 0.0);
        assert_eq!(g.eval(0.0), 3.0);
        assert_eq!(g.eval(1.0), 5.0);
        assert_eq!(g.eval(2.0), 0.0);
        assert_eq!(g.integral_over(0.5, 1.5), 4.0);
        assert!(StepFunction::new(vec![1.0, 0.0], vec![1.0]).is_err());
    }
}
