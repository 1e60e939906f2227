//! Structural and metric invariant checking against exact distances.
//!
//! The checker runs harness-side with true distances, which the search
//! algorithms themselves never see. Three invariants define a cover tree:
//! level sets are nested (free in this representation), every non-root node
//! lies within `2^(top_level + 1)` of its parent, and distinct members of a
//! level are more than `2^level` apart. The memory property — exactly one
//! explicit record per point — is checked structurally.

use std::fmt;

use super::tree::CoverTree;

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Structure(String),
    Covering {
        node: usize,
        parent: usize,
        distance: f64,
        bound: f64,
    },
    Separation {
        a: usize,
        b: usize,
        level: i32,
        distance: f64,
    },
    Memory(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Structure(msg) => write!(f, "structure: {msg}"),
            Violation::Covering {
                node,
                parent,
                distance,
                bound,
            } => write!(
                f,
                "covering: d({node}, parent {parent}) = {distance} exceeds {bound}"
            ),
            Violation::Separation {
                a,
                b,
                level,
                distance,
            } => write!(
                f,
                "separation: d({a}, {b}) = {distance} is not above 2^{level}"
            ),
            Violation::Memory(msg) => write!(f, "memory: {msg}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InvariantReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Verifies the cover-tree invariants with exact distances supplied by the
/// caller. Never errors; every problem found is reported as a violation.
pub fn check_invariants(tree: &CoverTree, dist: &dyn Fn(usize, usize) -> f64) -> InvariantReport {
    let mut violations = Vec::new();

    if tree.is_empty() {
        return InvariantReport {
            ok: true,
            violations,
        };
    }

    structural_checks(tree, &mut violations);

    // Covering tree: every non-root node within 2^(top_level + 1) of its
    // parent, with the parent explicit strictly above.
    for (p, node) in tree.nodes() {
        if let Some(parent) = node.parent {
            let bound = 2f64.powi(node.top_level + 1);
            let d = dist(p, parent);
            if d > bound + TOL {
                violations.push(Violation::Covering {
                    node: p,
                    parent,
                    distance: d,
                    bound,
                });
            }
        }
    }

    // Separation: for any distinct pair, the binding level is the highest
    // level where both are members, min(top_level_a, top_level_b).
    let points: Vec<(usize, i32)> = tree.nodes().map(|(p, n)| (p, n.top_level)).collect();
    for (ai, &(a, a_level)) in points.iter().enumerate() {
        for &(b, b_level) in points.iter().skip(ai + 1) {
            let level = a_level.min(b_level);
            let bound = 2f64.powi(level);
            let d = dist(a, b);
            if d <= bound - TOL {
                violations.push(Violation::Separation {
                    a,
                    b,
                    level,
                    distance: d,
                });
            }
        }
    }

    InvariantReport {
        ok: violations.is_empty(),
        violations,
    }
}

fn structural_checks(tree: &CoverTree, violations: &mut Vec<Violation>) {
    let root = match tree.root() {
        Some(r) => r,
        None => {
            violations.push(Violation::Structure("nonempty tree without a root".into()));
            return;
        }
    };
    match tree.node(root) {
        None => violations.push(Violation::Structure(format!("root {root} has no record"))),
        Some(node) => {
            if node.parent.is_some() {
                violations.push(Violation::Structure(format!("root {root} has a parent")));
            }
            if node.top_level != tree.i_top() {
                violations.push(Violation::Structure(format!(
                    "root level {} disagrees with i_top {}",
                    node.top_level,
                    tree.i_top()
                )));
            }
        }
    }

    let min_level = tree.nodes().map(|(_, n)| n.top_level).min().unwrap();
    if min_level != tree.i_bottom() {
        violations.push(Violation::Structure(format!(
            "lowest explicit level {} disagrees with i_bottom {}",
            min_level,
            tree.i_bottom()
        )));
    }

    for (p, node) in tree.nodes() {
        match node.parent {
            None => {
                if p != root {
                    violations.push(Violation::Structure(format!(
                        "node {p} has no parent but is not the root"
                    )));
                }
            }
            Some(parent) => match tree.node(parent) {
                None => violations.push(Violation::Structure(format!(
                    "node {p} references missing parent {parent}"
                ))),
                Some(parent_node) => {
                    if parent_node.top_level < node.top_level + 1 {
                        violations.push(Violation::Structure(format!(
                            "parent {parent} of {p} is explicit at {} but must be at least {}",
                            parent_node.top_level,
                            node.top_level + 1
                        )));
                    }
                }
            },
        }
        // Parent chains must reach the root without cycles.
        let mut seen = 0usize;
        let mut cursor = p;
        loop {
            match tree.node(cursor).and_then(|n| n.parent) {
                None => break,
                Some(up) => {
                    cursor = up;
                    seen += 1;
                    if seen > tree.len() {
                        violations.push(Violation::Structure(format!(
                            "parent chain from {p} does not terminate"
                        )));
                        break;
                    }
                }
            }
        }
    }

    // Memory: one explicit record per point means each non-root node appears
    // in exactly one children list, at its own level, under its own parent.
    let mut appearances: std::collections::BTreeMap<usize, usize> = Default::default();
    for (p, _) in tree.nodes() {
        for (level, child) in tree.explicit_children(p) {
            *appearances.entry(child).or_default() += 1;
            match tree.node(child) {
                None => violations.push(Violation::Memory(format!(
                    "children list of {p} names unknown point {child}"
                ))),
                Some(node) => {
                    if node.parent != Some(p) || node.top_level != level {
                        violations.push(Violation::Memory(format!(
                            "children list of {p} at level {level} disagrees with the record of {child}"
                        )));
                    }
                }
            }
        }
    }
    for (p, node) in tree.nodes() {
        let expected = usize::from(node.parent.is_some());
        let got = appearances.get(&p).copied().unwrap_or(0);
        if got != expected {
            violations.push(Violation::Memory(format!(
                "point {p} appears {got} times in children lists, expected {expected}"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_dist(scale: f64) -> impl Fn(usize, usize) -> f64 {
        move |a: usize, b: usize| (a as f64 - b as f64).abs() * scale
    }

    /// Points at coordinates {0, 5, 8}: root 0 at level 3, node 1 (coord 5)
    /// at level 2, node 2 (coord 8) under node 1 at level 1.
    fn valid_tree() -> CoverTree {
        let mut tree = CoverTree::singleton(0);
        tree.raise_root(3);
        tree.add_node(1, 2, 0);
        tree.add_node(2, 1, 1);
        tree
    }

    fn coords() -> impl Fn(usize, usize) -> f64 {
        let xs = [0.0f64, 5.0, 8.0];
        move |a: usize, b: usize| (xs[a] - xs[b]).abs()
    }

    #[test]
    fn valid_tree_passes() {
        let report = check_invariants(&valid_tree(), &coords());
        assert!(report.ok, "violations: {:?}", report.violations);
    }

    #[test]
    fn empty_tree_passes() {
        assert!(check_invariants(&CoverTree::new(), &line_dist(1.0)).ok);
    }

    #[test]
    fn covering_violation_detected() {
        // Stretch the metric so node 2 ends up farther than 2^2 from its
        // parent.
        let xs = [0.0f64, 5.0, 15.0];
        let dist = move |a: usize, b: usize| (xs[a] - xs[b]).abs();
        let report = check_invariants(&valid_tree(), &dist);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Covering { node: 2, .. })));
    }

    #[test]
    fn separation_violation_detected() {
        let xs = [0.0f64, 3.0, 8.0];
        let dist = move |a: usize, b: usize| (xs[a] - xs[b]).abs();
        // d(0, 1) = 3 <= 2^2 at shared level 2.
        let report = check_invariants(&valid_tree(), &dist);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Separation { a: 0, b: 1, .. })));
    }

    #[test]
    fn duplicate_child_record_is_memory_violation() {
        let mut tree = valid_tree();
        // Second children-list appearance for node 2, under the root.
        tree.raw_children_mut().entry((0, 1)).or_default().push(2);
        let report = check_invariants(&tree, &coords());
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Memory(_))));
    }

    #[test]
    fn tampered_parent_level_is_structural() {
        let mut tree = valid_tree();
        tree.raw_node_mut(2).top_level = 2;
        tree.recompute_bounds();
        let report = check_invariants(&tree, &coords());
        assert!(!report.ok);
    }
}
