use std::collections::HashMap;

use super::tree::{Test, Tree, TreeNode};
use crate::dataio::{Column, Dataset};
use crate::entities::EntitySet;
use crate::query::{Literal, Origin, Query, Rule};

/// Accumulated constraint on one attribute along a tree path.
#[derive(Debug, Clone)]
enum Bound {
    /// `gt < x <= le`; either side may be open.
    Range { gt: Option<f64>, le: Option<f64> },
    /// Allowed level codes.
    Levels(Vec<u32>),
}

/// Per-attribute constraints in order of first appearance along the path.
#[derive(Debug, Clone, Default)]
struct Path {
    bounds: Vec<(usize, Bound)>,
}

impl Path {
    fn push(&mut self, test: &Test, left: bool, column: &Column) {
        let attr = test.attribute();
        let pos = self.bounds.iter().position(|(a, _)| *a == attr);
        let current = pos.map(|i| self.bounds[i].1.clone());
        let next = match (*test, current) {
            (Test::Numeric { threshold, .. }, cur) => {
                let (mut gt, mut le) = match cur {
                    Some(Bound::Range { gt, le }) => (gt, le),
                    _ => (None, None),
                };
                if left {
                    le = Some(le.map_or(threshold, |v: f64| v.min(threshold)));
                } else {
                    gt = Some(gt.map_or(threshold, |v: f64| v.max(threshold)));
                }
                Bound::Range { gt, le }
            }
            (Test::Level { code, .. }, cur) => {
                let mut levels = match cur {
                    Some(Bound::Levels(l)) => l,
                    _ => match column {
                        Column::Categorical { levels, .. } => (0..levels.len() as u32).collect(),
                        Column::Numeric(_) => Vec::new(),
                    },
                };
                if left {
                    levels.retain(|&c| c == code);
                } else {
                    levels.retain(|&c| c != code);
                }
                Bound::Levels(levels)
            }
        };
        match pos {
            Some(i) => self.bounds[i].1 = next,
            None => self.bounds.push((attr, next)),
        }
    }
}

/// Sorted distinct observed values of a numeric column.
fn domain(column: &Column) -> Vec<f64> {
    let mut v: Vec<f64> = (0..column.len()).filter_map(|r| column.numeric(r)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Converts a path into closed-interval literals snapped to observed values.
///
/// Returns `None` when some constraint admits no observed value.
fn literals(path: &Path, view: usize, dataset: &Dataset, domains: &mut HashMap<usize, Vec<f64>>) -> Option<Vec<Literal>> {
    let attrs = &dataset.views[view].attributes;
    let mut out = Vec::with_capacity(path.bounds.len());
    for (attr, bound) in &path.bounds {
        match bound {
            Bound::Range { gt, le } => {
                let dom = domains
                    .entry(*attr)
                    .or_insert_with(|| domain(&attrs[*attr].column));
                let lo = match gt {
                    Some(g) => *dom.iter().find(|&&x| x > *g)?,
                    None => *dom.first()?,
                };
                let hi = match le {
                    Some(l) => *dom.iter().rev().find(|&&x| x <= *l)?,
                    None => *dom.last()?,
                };
                if lo > hi {
                    return None;
                }
                out.push(Literal::interval(*attr, lo, hi));
            }
            Bound::Levels(codes) => {
                if codes.is_empty() {
                    return None;
                }
                out.push(Literal::levels(*attr, codes.clone()));
            }
        }
    }
    Some(out)
}

fn collect_paths(node: &TreeNode, columns: &[&Column], path: &mut Path, out: &mut Vec<Path>) {
    out.push(path.clone());
    match node {
        TreeNode::Leaf { .. } => {}
        TreeNode::Split {
            test, left, right, ..
        } => {
            let column = columns[test.attribute()];
            for (child, is_left) in [(left, true), (right, false)] {
                let mut p = path.clone();
                p.push(test, is_left, column);
                collect_paths(child, columns, &mut p, out);
            }
        }
    }
}

/// One conjunctive rule per non-root node of every tree (leaves included),
/// with supports evaluated on `dataset`.
///
/// Repeated constraints on one attribute are merged into a single literal; paths
/// with more than `max_rule_len` literals lose their deepest ones. Rules with
/// identical supports are deduplicated, keeping the shorter (then earlier) one.
/// A tree that is a single leaf contributes no rule.
pub fn extract_rules(
    trees: &[Tree],
    dataset: &Dataset,
    view: usize,
    max_rule_len: usize,
    origin: Origin,
    iteration: usize,
) -> Vec<Rule> {
    let columns: Vec<&Column> = dataset.views[view].attributes.iter().map(|a| &a.column).collect();
    let mut domains = HashMap::new();
    let mut rules: Vec<Rule> = Vec::new();
    let mut by_support: HashMap<EntitySet, usize> = HashMap::new();
    for tree in trees {
        let mut paths = Vec::new();
        collect_paths(&tree.root, &columns, &mut Path::default(), &mut paths);
        for mut path in paths {
            path.bounds.truncate(max_rule_len.max(1));
            if path.bounds.is_empty() {
                continue;
            }
            let Some(lits) = literals(&path, view, dataset, &mut domains) else {
                continue;
            };
            let query = Query::conjunction(view, lits);
            let support = query.support(dataset);
            let rule = Rule::new(query, support, origin, iteration);
            match by_support.get(&rule.support) {
                Some(&i) => {
                    if rule.len() < rules[i].len() {
                        rules[i] = rule;
                    }
                }
                None => {
                    by_support.insert(rule.support.clone(), rules.len());
                    rules.push(rule);
                }
            }
        }
    }
    rules
}
