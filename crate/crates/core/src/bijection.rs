//! The bijection between canonical exploration paths and binary forests.
//!
//! Inside one excursion, the leftmost local maximum is the death time of the
//! ancestor and the lowest nonzero local minimum is the birth time of her
//! first offspring. Cutting the excursion at that minimum leaves two lobes:
//! the right one explores the first offspring and her progeny, the left one
//! the ancestor with her remaining progeny. Repeating on each lobe until no
//! interior minimum is left decodes the whole tree. Maxima sitting on the
//! ceiling decode to individuals killed at the ceiling.
//!
//! Both directions run in near-linear time with explicit work stacks, so
//! deep trees cannot overflow the call stack.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::paths::ExplorationPath;
use crate::trees::{Forest, NodeSpec};

/// Decodes a path into the forest it explores, one tree per excursion.
///
/// Recursively cutting at the lowest minimum is the same as building the
/// min-rooted Cartesian tree of the interior minima: the right subtree of a
/// minimum explores the child born there, the left subtree goes back to her
/// parent. A monotone stack builds it in linear time.
pub fn path_to_forest(path: &ExplorationPath) -> Result<Forest> {
    const NONE: usize = usize::MAX;
    let e = path.extrema();
    let mut specs: Vec<NodeSpec> = Vec::with_capacity(e.len() / 2);
    let mut mins: Vec<usize> = Vec::new();
    let (mut left, mut right): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
    let mut stack: Vec<usize> = Vec::new();
    // (Cartesian node, parent individual)
    let mut work: Vec<(usize, usize)> = Vec::new();

    let mut start = 0;
    for end in (2..e.len()).step_by(2) {
        if e[end] != 0.0 {
            continue;
        }
        let root = specs.len();
        specs.push(NodeSpec {
            parent: None,
            birth_time: 0.0,
            death_time: e[start + 1],
        });
        mins.clear();
        mins.extend((start + 2..end).step_by(2));
        left.clear();
        left.resize(mins.len(), NONE);
        right.clear();
        right.resize(mins.len(), NONE);
        stack.clear();
        for j in 0..mins.len() {
            let h = e[mins[j]];
            let mut last = NONE;
            while let Some(&top) = stack.last() {
                if e[mins[top]] > h {
                    last = top;
                    stack.pop();
                } else {
                    break;
                }
            }
            if let Some(&top) = stack.last() {
                if e[mins[top]] == h {
                    return Err(invalid!("two local minima at height {h} in one excursion"));
                }
                right[top] = j;
            }
            left[j] = last;
            stack.push(j);
        }
        if let Some(&top) = stack.first() {
            work.push((top, root));
        }
        while let Some((j, parent)) = work.pop() {
            let k = mins[j];
            let child = specs.len();
            specs.push(NodeSpec {
                parent: Some(parent),
                birth_time: e[k],
                death_time: e[k + 1],
            });
            if right[j] != NONE {
                work.push((right[j], child));
            }
            if left[j] != NONE {
                work.push((left[j], parent));
            }
        }
        start = end;
    }
    Forest::from_specs(&specs, path.ceiling())
}

/// Encodes a forest as its canonical exploration path with slope `slope`.
///
/// For each individual the path climbs to her death time, then for each of
/// her children from the latest born to the earliest descends to the child's
/// birth time and explores the child's subtree. Trees are concatenated in
/// root order.
pub fn forest_to_path(forest: &Forest, slope: f64) -> Result<ExplorationPath> {
    enum Step {
        Visit(usize),
        Descend(f64),
    }
    let mut extrema = Vec::with_capacity(2 * forest.total_individuals() + 1);
    extrema.push(0.0);
    let mut stack = Vec::new();
    for &root in forest.roots() {
        stack.push(Step::Visit(root));
        while let Some(step) = stack.pop() {
            match step {
                Step::Descend(h) => extrema.push(h),
                Step::Visit(id) => {
                    let node = forest.node(id);
                    extrema.push(node.death_time);
                    for &c in &node.children {
                        stack.push(Step::Visit(c));
                        stack.push(Step::Descend(forest.node(c).birth_time));
                    }
                }
            }
        }
        extrema.push(0.0);
    }
    let path = ExplorationPath::new(slope, forest.ceiling(), extrema)?;
    if path.excursion_count() != forest.tree_count() {
        return Err(invalid!("forest births do not encode a canonical path"));
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::fixtures::p_star;
    use crate::trees::fixtures::{doubled_t_star, t_star};
    use alloc::vec;

    #[test]
    fn p_star_decodes_to_t_star() {
        assert_eq!(path_to_forest(&p_star()).unwrap(), t_star());
    }

    #[test]
    fn t_star_encodes_to_p_star() {
        assert_eq!(forest_to_path(&t_star(), 2.0).unwrap(), p_star());
    }

    #[test]
    fn single_triangle_is_a_lone_ancestor() {
        let p = ExplorationPath::new(2.0, f64::INFINITY, vec![0.0, 0.8, 0.0]).unwrap();
        let f = path_to_forest(&p).unwrap();
        assert_eq!(f.total_individuals(), 1);
        assert_eq!(f.node(0).death_time, 0.8);
        assert_eq!(forest_to_path(&f, 2.0).unwrap(), p);
    }

    #[test]
    fn excursions_map_to_separate_trees() {
        let two = ExplorationPath::concat(&[p_star(), p_star()]).unwrap();
        let f = path_to_forest(&two).unwrap();
        assert_eq!(f, doubled_t_star());
        assert_eq!(forest_to_path(&f, 2.0).unwrap(), two);

        let tri = ExplorationPath::new(2.0, 5.0, vec![0.0, 1.0, 0.0, 2.0, 0.0, 0.5, 0.0]).unwrap();
        let f = path_to_forest(&tri).unwrap();
        assert_eq!(f.tree_count(), 3);
        let deaths: Vec<_> = f.nodes().iter().map(|n| n.death_time).collect();
        assert_eq!(deaths, vec![1.0, 2.0, 0.5]);
    }

    #[test]
    fn deeper_tree_round_trips() {
        // Ancestor on [0, 4) with births at 0.5 and 2. The child born at 2
        // lives until 3 and has her own child on [2.5, 2.8); the child born
        // at 0.5 dies at 1.5.
        let e = vec![0.0, 4.0, 2.0, 3.0, 2.5, 2.8, 0.5, 1.5, 0.0];
        let p = ExplorationPath::new(2.0, f64::INFINITY, e).unwrap();
        let f = path_to_forest(&p).unwrap();
        let summary: Vec<_> = f
            .nodes()
            .iter()
            .map(|n| (n.parent, n.birth_time, n.death_time))
            .collect();
        assert_eq!(
            summary,
            vec![
                (None, 0.0, 4.0),
                (Some(0), 0.5, 1.5),
                (Some(0), 2.0, 3.0),
                (Some(2), 2.5, 2.8),
            ]
        );
        assert_eq!(forest_to_path(&f, 2.0).unwrap(), p);
    }

    #[test]
    fn ceiling_maxima_become_killed_individuals() {
        let p = ExplorationPath::new(2.0, 2.0, vec![0.0, 2.0, 1.0, 2.0, 0.0]).unwrap();
        let f = path_to_forest(&p).unwrap();
        assert_eq!(f.killed_count(), p.ceiling_hits());
        assert_eq!(f.ceiling(), 2.0);
    }
}
