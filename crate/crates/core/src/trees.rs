//! Continuous-time binary forests with absolute birth and death times.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// One individual. Times are absolute (tree time), not ages.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth_time: f64,
    pub death_time: f64,
    /// Children ids, ordered by birth time.
    pub children: Vec<usize>,
}

/// A forest of `m >= 1` binary trees, all ancestors born at time 0, possibly
/// killed at a finite `ceiling`.
///
/// Node ids are dense and assigned in birth order: the `m` roots first (in
/// tree order), then every other individual by increasing birth time, ties
/// across trees broken by tree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    nodes: Vec<TreeNode>,
    roots: Vec<usize>,
    ceiling: f64,
}

/// Raw description of an individual used to assemble a [`Forest`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub parent: Option<usize>,
    pub birth_time: f64,
    pub death_time: f64,
}

impl Forest {
    /// Validates and canonicalizes a forest given as a flat list of nodes whose
    /// `parent` fields index into the same list (in any order).
    pub fn from_specs(specs: &[NodeSpec], ceiling: f64) -> Result<Self> {
        if ceiling.is_nan() || ceiling <= 0.0 {
            return Err(invalid!("ceiling must be positive, got {ceiling}"));
        }
        let n = specs.len();
        let mut children: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (i, s) in specs.iter().enumerate() {
            if !(s.birth_time.is_finite() && s.death_time.is_finite()) {
                return Err(invalid!("node {i} has non-finite times"));
            }
            if !(s.birth_time >= 0.0 && s.death_time > s.birth_time) {
                return Err(invalid!(
                    "node {i} must satisfy 0 <= birth < death, got {} -> {}",
                    s.birth_time,
                    s.death_time
                ));
            }
            if s.death_time > ceiling {
                return Err(invalid!(
                    "node {i} dies at {} after the ceiling {ceiling}",
                    s.death_time
                ));
            }
            match s.parent {
                None => {
                    if s.birth_time != 0.0 {
                        return Err(invalid!("root {i} must be born at time 0"));
                    }
                    roots.push(i);
                }
                Some(p) => {
                    let parent = specs
                        .get(p)
                        .ok_or_else(|| invalid!("node {i} has unknown parent {p}"))?;
                    if !(s.birth_time > parent.birth_time && s.birth_time < parent.death_time) {
                        return Err(invalid!(
                            "node {i} born at {} outside the lifetime of its parent {p}",
                            s.birth_time
                        ));
                    }
                    children[p].push(i);
                }
            }
        }
        if roots.is_empty() {
            return Err(invalid!("a forest needs at least one root"));
        }
        for (p, kids) in children.iter_mut().enumerate() {
            kids.sort_by(|&a, &b| specs[a].birth_time.total_cmp(&specs[b].birth_time));
            if kids
                .windows(2)
                .any(|w| specs[w[0]].birth_time == specs[w[1]].birth_time)
            {
                return Err(invalid!("node {p} has two children born at the same instant"));
            }
        }

        // Walk each tree to assign tree membership; this also rejects cycles.
        let mut tree_of = alloc::vec![usize::MAX; n];
        let mut stack = Vec::new();
        for (t, &r) in roots.iter().enumerate() {
            stack.push(r);
            while let Some(v) = stack.pop() {
                tree_of[v] = t;
                stack.extend_from_slice(&children[v]);
            }
        }
        if let Some(i) = tree_of.iter().position(|&t| t == usize::MAX) {
            return Err(invalid!("node {i} is not connected to any root"));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let ka = (specs[a].parent.is_some(), specs[a].birth_time, tree_of[a]);
            let kb = (specs[b].parent.is_some(), specs[b].birth_time, tree_of[b]);
            ka.0.cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
                .then(a.cmp(&b))
        });
        let mut new_id = alloc::vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            new_id[old] = new;
        }
        let nodes = order
            .iter()
            .enumerate()
            .map(|(id, &old)| TreeNode {
                id,
                parent: specs[old].parent.map(|p| new_id[p]),
                birth_time: specs[old].birth_time,
                death_time: specs[old].death_time,
                children: children[old].iter().map(|&c| new_id[c]).collect(),
            })
            .collect();
        let roots = (0..roots.len()).collect();
        Ok(Self {
            nodes,
            roots,
            ceiling,
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    /// Killing time; `f64::INFINITY` when individuals are never killed.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn tree_count(&self) -> usize {
        self.roots.len()
    }

    pub fn total_individuals(&self) -> usize {
        self.nodes.len()
    }

    pub fn extinction_time(&self) -> f64 {
        self.nodes.iter().map(|n| n.death_time).fold(0.0, f64::max)
    }

    /// Individuals killed at the ceiling.
    pub fn killed_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.death_time == self.ceiling)
            .count()
    }

    /// Number of individuals with `birth <= t < death`.
    ///
    /// `t` must not coincide with a birth or death (root births at 0 aside),
    /// where the count is convention-dependent.
    pub fn alive_count(&self, t: f64) -> Result<usize> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(invalid!("time must be finite and nonnegative, got {t}"));
        }
        let mut alive = 0;
        for n in &self.nodes {
            if t == n.death_time || (n.parent.is_some() && t == n.birth_time) {
                return Err(invalid!("time {t} coincides with an event of node {}", n.id));
            }
            if n.birth_time <= t && t < n.death_time {
                alive += 1;
            }
        }
        Ok(alive)
    }

    /// [`alive_count`](Self::alive_count) at many times at once, in
    /// `O((n + k) log n)`.
    pub fn alive_counts(&self, times: &[f64]) -> Result<Vec<usize>> {
        let mut births: Vec<f64> = self
            .nodes
            .iter()
            .filter(|n| n.parent.is_some())
            .map(|n| n.birth_time)
            .collect();
        let mut deaths: Vec<f64> = self.nodes.iter().map(|n| n.death_time).collect();
        births.sort_unstable_by(f64::total_cmp);
        deaths.sort_unstable_by(f64::total_cmp);
        let roots = self.roots.len();
        times
            .iter()
            .map(|&t| {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(invalid!("time must be finite and nonnegative, got {t}"));
                }
                let b = births.partition_point(|&x| x <= t);
                let d = deaths.partition_point(|&x| x <= t);
                let hits = |v: &[f64], k: usize| k > 0 && v[k - 1] == t;
                if hits(&births, b) || hits(&deaths, d) {
                    return Err(invalid!("time {t} coincides with a birth or death"));
                }
                Ok(roots + b - d)
            })
            .collect()
    }

    /// Event-sorted population count process. Simultaneous deaths at the
    /// ceiling are not jumps; they are recorded once as the kill time.
    pub fn trajectory(&self) -> Result<PopulationTrajectory> {
        let mut events: Vec<(f64, i8)> = Vec::with_capacity(2 * self.nodes.len());
        for n in &self.nodes {
            if n.parent.is_some() {
                events.push((n.birth_time, 1));
            }
            if n.death_time != self.ceiling {
                events.push((n.death_time, -1));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = events.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(invalid!("two events share the time {}", w[0].0));
        }
        let initial = self.roots.len() as u64;
        let mut count = initial as i64;
        let mut jump_times = Vec::with_capacity(events.len());
        let mut counts = Vec::with_capacity(events.len());
        for (t, d) in events {
            count += d as i64;
            jump_times.push(t);
            counts.push(count as u64);
        }
        let kill_time = (self.killed_count() > 0).then_some(self.ceiling);
        Ok(PopulationTrajectory {
            initial_count: initial,
            jump_times,
            counts,
            kill_time,
        })
    }
}

/// Càdlàg integer step function `t -> Z_t` with unit jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrajectory {
    initial_count: u64,
    jump_times: Vec<f64>,
    /// Value right after each jump.
    counts: Vec<u64>,
    /// Time from which the whole remaining population is dead at once.
    kill_time: Option<f64>,
}

impl PopulationTrajectory {
    pub fn new(initial_count: u64, jump_times: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if jump_times.len() != counts.len() {
            return Err(invalid!("jump times and counts differ in length"));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid!("jump times must be strictly increasing"));
        }
        let mut prev = initial_count;
        for (i, &c) in counts.iter().enumerate() {
            if c.abs_diff(prev) != 1 {
                return Err(invalid!("jump {i} changes the count by more than one"));
            }
            if prev == 0 {
                return Err(invalid!("jump {i} leaves the absorbing state 0"));
            }
            prev = c;
        }
        Ok(Self {
            initial_count,
            jump_times,
            counts,
            kill_time: None,
        })
    }

    pub(crate) fn from_parts(initial_count: u64, jump_times: Vec<f64>, counts: Vec<u64>) -> Self {
        Self {
            initial_count,
            jump_times,
            counts,
            kill_time: None,
        }
    }

    pub fn kill_time(&self) -> Option<f64> {
        self.kill_time
    }

    pub fn initial_count(&self) -> u64 {
        self.initial_count
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `(time, +1 | -1)` per jump.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, i8)> + '_ {
        let prev = core::iter::once(self.initial_count).chain(self.counts.iter().copied());
        self.jump_times
            .iter()
            .zip(self.counts.iter().zip(prev))
            .map(|(&t, (&c, p))| (t, if c > p { 1 } else { -1 }))
    }

    /// Right-continuous value at `t`.
    pub fn value_at(&self, t: f64) -> u64 {
        if self.kill_time.is_some_and(|k| t >= k) {
            return 0;
        }
        match self.jump_times.partition_point(|&s| s <= t) {
            0 => self.initial_count,
            k => self.counts[k - 1],
        }
    }

    /// `value_at(t) / scale`, e.g. `Z_t / N`.
    pub fn rescaled_at(&self, t: f64, scale: f64) -> f64 {
        self.value_at(t) as f64 / scale
    }

    pub fn birth_count(&self) -> usize {
        self.jumps().filter(|&(_, d)| d > 0).count()
    }
}
