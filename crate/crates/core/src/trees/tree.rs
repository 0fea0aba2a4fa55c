use std::fmt::Write as _;

use rand::Rng as _;

use crate::dataio::Column;
use crate::entities::EntitySet;
use crate::rng::Rng;

/// Scores closer than this are treated as ties and resolved by candidate order.
const TIE_EPS: f64 = 1e-9;

/// Dense row-major matrix of real-valued targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrix {
    n_rows: usize,
    n_targets: usize,
    data: Vec<f64>,
}

impl TargetMatrix {
    pub fn new(n_rows: usize, n_targets: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_rows * n_targets, "target matrix shape mismatch");
        assert!(data.iter().all(|v| v.is_finite()), "targets must be finite");
        TargetMatrix {
            n_rows,
            n_targets,
            data,
        }
    }

    /// One 0/1 membership column per set.
    pub fn from_supports<'a>(n_rows: usize, sets: impl IntoIterator<Item = &'a EntitySet>) -> Self {
        let sets: Vec<&EntitySet> = sets.into_iter().collect();
        let s = sets.len();
        let mut data = vec![0.0; n_rows * s];
        for (t, set) in sets.iter().enumerate() {
            for r in set.iter() {
                data[r * s + t] = 1.0;
            }
        }
        TargetMatrix::new(n_rows, s, data)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn get(&self, row: usize, target: usize) -> f64 {
        self.data[row * self.n_targets + target]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_targets..(row + 1) * self.n_targets]
    }

    pub fn column(&self, target: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, target)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Test {
    /// Left branch takes `x <= threshold`.
    Numeric { attribute: usize, threshold: f64 },
    /// Left branch takes the single level `code`.
    Level { attribute: usize, code: u32 },
}

impl Test {
    pub fn attribute(&self) -> usize {
        match *self {
            Test::Numeric { attribute, .. } | Test::Level { attribute, .. } => attribute,
        }
    }

    /// `Some(true)` for the left branch, `None` when the value is missing.
    pub fn goes_left(&self, column: &Column, row: usize) -> Option<bool> {
        match *self {
            Test::Numeric { threshold, .. } => column.numeric(row).map(|x| x <= threshold),
            Test::Level { code, .. } => column.code(row).map(|c| c == code),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        means: Vec<f64>,
        count: usize,
    },
    Split {
        test: Test,
        /// Branch taken by rows with a missing value: the one with more training rows.
        missing_left: bool,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub root: TreeNode,
    /// Target columns (of the training matrix) this tree predicts.
    pub targets: Vec<usize>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => go(left) + go(right),
            }
        }
        go(&self.root)
    }

    pub fn depth(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }

    /// Index of the leaf (in depth-first, left-first order) that `row` reaches.
    pub fn leaf_index(&self, columns: &[&Column], row: usize) -> usize {
        fn count(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => count(left) + count(right),
            }
        }
        let mut node = &self.root;
        let mut offset = 0;
        loop {
            match node {
                TreeNode::Leaf { .. } => return offset,
                TreeNode::Split {
                    test,
                    missing_left,
                    left,
                    right,
                } => {
                    let go_left = test
                        .goes_left(columns[test.attribute()], row)
                        .unwrap_or(*missing_left);
                    if go_left {
                        node = left;
                    } else {
                        offset += count(left);
                        node = right;
                    }
                }
            }
        }
    }

    /// Indented text rendering for debugging.
    pub fn dump(&self, names: &[&str]) -> String {
        fn go(n: &TreeNode, names: &[&str], depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match n {
                TreeNode::Leaf { means, count } => {
                    let _ = writeln!(out, "{pad}leaf n={count} means={means:?}");
                }
                TreeNode::Split {
                    test, left, right, ..
                } => {
                    let name = names.get(test.attribute()).copied().unwrap_or("?");
                    let cond = match test {
                        Test::Numeric { threshold, .. } => format!("{name} <= {threshold}"),
                        Test::Level { code, .. } => format!("{name} = #{code}"),
                    };
                    let _ = writeln!(out, "{pad}if {cond}");
                    go(left, names, depth + 1, out);
                    let _ = writeln!(out, "{pad}else");
                    go(right, names, depth + 1, out);
                }
            }
        }
        let mut out = String::new();
        go(&self.root, names, 0, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// When no single split reduces variance, score splits by the best
    /// reduction reachable one level further down.
    pub lookahead: bool,
}

impl TreeParams {
    pub fn new(max_depth: usize, min_leaf: usize) -> Self {
        TreeParams {
            max_depth,
            min_leaf: min_leaf.max(1),
            lookahead: false,
        }
    }

    pub fn with_lookahead(self) -> Self {
        TreeParams {
            lookahead: true,
            ..self
        }
    }
}

/// Thresholds per attribute examined by the lookahead search.
const LOOKAHEAD_CANDIDATES: usize = 16;

/// How candidate splits are chosen at a node.
pub enum Splitter<'r> {
    /// Every attribute-value pair is tested.
    Exhaustive,
    /// `k` randomly sampled attribute-value pairs are tested.
    Random { k: usize, rng: &'r mut Rng },
}

/// A candidate split with its variance reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSplit {
    pub test: Test,
    pub score: f64,
}

/// Training problem shared by every node of one tree.
pub struct Problem<'a> {
    pub columns: &'a [&'a Column],
    pub targets: &'a TargetMatrix,
    pub target_cols: &'a [usize],
    /// Attributes the tree may split on, ascending.
    pub attributes: &'a [usize],
}

impl Problem<'_> {
    fn sums(&self, rows: &[usize]) -> Vec<f64> {
        let mut s = vec![0.0; self.target_cols.len()];
        for &r in rows {
            let row = self.targets.row(r);
            for (acc, &t) in s.iter_mut().zip(self.target_cols) {
                *acc += row[t];
            }
        }
        s
    }

    fn is_constant(&self, rows: &[usize]) -> bool {
        let Some(&first) = rows.first() else {
            return true;
        };
        let f = self.targets.row(first);
        rows.iter().all(|&r| {
            let row = self.targets.row(r);
            self.target_cols.iter().all(|&t| row[t] == f[t])
        })
    }
}

fn sq_over(sums: &[f64], n: usize) -> f64 {
    sums.iter().map(|s| s * s).sum::<f64>() / n as f64
}

/// Variance reduction `Σ_t [Var(node) − (n_L/n)·Var(L) − (n_R/n)·Var(R)]`
/// from per-target sums; rows with a missing split value are excluded.
fn reduction(left: &[f64], n_left: usize, total: &[f64], n: usize) -> f64 {
    let right: Vec<f64> = total.iter().zip(left).map(|(t, l)| t - l).collect();
    (sq_over(left, n_left) + sq_over(&right, n - n_left) - sq_over(total, n)) / n as f64
}

/// Candidate thresholds of a numeric attribute at a node: midpoints of adjacent distinct values.
fn numeric_candidates(column: &Column, rows: &[usize]) -> Vec<f64> {
    let mut vals: Vec<f64> = rows.iter().filter_map(|&r| column.numeric(r)).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals.windows(2).map(|w| midpoint(w[0], w[1])).collect()
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against rounding onto the upper value
    if m >= b {
        a
    } else {
        m
    }
}

fn level_candidates(column: &Column, rows: &[usize]) -> Vec<u32> {
    let mut codes: Vec<u32> = rows.iter().filter_map(|&r| column.code(r)).collect();
    codes.sort_unstable();
    codes.dedup();
    if codes.len() < 2 {
        return Vec::new();
    }
    codes
}

/// Scores every threshold of one attribute in a single sorted sweep.
fn scan_attribute(p: &Problem, attribute: usize, rows: &[usize], min_leaf: usize) -> Vec<ScoredSplit> {
    let column = p.columns[attribute];
    let mut out = Vec::new();
    match column {
        Column::Numeric(_) => {
            let mut present: Vec<(f64, usize)> = rows
                .iter()
                .filter_map(|&r| column.numeric(r).map(|x| (x, r)))
                .collect();
            present.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let n = present.len();
            if n < 2 {
                return out;
            }
            let idx: Vec<usize> = present.iter().map(|&(_, r)| r).collect();
            let total = p.sums(&idx);
            let mut left = vec![0.0; total.len()];
            for i in 0..n - 1 {
                let row = p.targets.row(present[i].1);
                for (acc, &t) in left.iter_mut().zip(p.target_cols) {
                    *acc += row[t];
                }
                let (a, b) = (present[i].0, present[i + 1].0);
                if a == b {
                    continue;
                }
                let n_left = i + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                out.push(ScoredSplit {
                    test: Test::Numeric {
                        attribute,
                        threshold: midpoint(a, b),
                    },
                    score: reduction(&left, n_left, &total, n),
                });
            }
        }
        Column::Categorical { .. } => {
            for code in level_candidates(column, rows) {
                if let Some(s) = score_split(p, Test::Level { attribute, code }, rows, min_leaf) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Scores a single split directly; `None` if a side would hold fewer than `min_leaf` rows.
pub fn score_split(p: &Problem, test: Test, rows: &[usize], min_leaf: usize) -> Option<ScoredSplit> {
    let column = p.columns[test.attribute()];
    let mut left_rows = Vec::new();
    let mut present = Vec::new();
    for &r in rows {
        if let Some(l) = test.goes_left(column, r) {
            present.push(r);
            if l {
                left_rows.push(r);
            }
        }
    }
    let (n, n_left) = (present.len(), left_rows.len());
    if n_left < min_leaf || n - n_left < min_leaf {
        return None;
    }
    let total = p.sums(&present);
    let left = p.sums(&left_rows);
    Some(ScoredSplit {
        test,
        score: reduction(&left, n_left, &total, n),
    })
}

/// Keeps the earlier candidate unless the later one is better beyond the tie tolerance.
fn better(best: Option<ScoredSplit>, cand: ScoredSplit) -> Option<ScoredSplit> {
    match best {
        Some(b) if cand.score <= b.score + TIE_EPS => Some(b),
        _ => Some(cand),
    }
}

fn candidate_key(t: &Test) -> (usize, f64) {
    match *t {
        Test::Numeric {
            attribute,
            threshold,
        } => (attribute, threshold),
        Test::Level { attribute, code } => (attribute, code as f64),
    }
}

/// Best exhaustive split, ties resolved by (attribute, threshold) order.
pub fn best_split(p: &Problem, rows: &[usize], min_leaf: usize) -> Option<ScoredSplit> {
    let mut best = None;
    for &a in p.attributes {
        for s in scan_attribute(p, a, rows, min_leaf) {
            best = better(best, s);
        }
    }
    best
}

fn random_split(p: &Problem, rows: &[usize], min_leaf: usize, k: usize, rng: &mut Rng) -> Option<ScoredSplit> {
    enum Cands {
        Num(Vec<f64>),
        Lev(Vec<u32>),
    }
    let per_attr: Vec<(usize, Cands)> = p
        .attributes
        .iter()
        .filter_map(|&a| {
            let c = p.columns[a];
            let cands = match c {
                Column::Numeric(_) => Cands::Num(numeric_candidates(c, rows)),
                Column::Categorical { .. } => Cands::Lev(level_candidates(c, rows)),
            };
            let len = match &cands {
                Cands::Num(v) => v.len(),
                Cands::Lev(v) => v.len(),
            };
            (len > 0).then_some((a, cands))
        })
        .collect();
    let total: usize = per_attr
        .iter()
        .map(|(_, c)| match c {
            Cands::Num(v) => v.len(),
            Cands::Lev(v) => v.len(),
        })
        .sum();
    if total == 0 {
        return None;
    }
    if k >= total {
        return best_split(p, rows, min_leaf);
    }
    let mut picked: Vec<ScoredSplit> = Vec::with_capacity(k);
    for _ in 0..k {
        let (a, cands) = &per_attr[rng.gen_range(0..per_attr.len())];
        let test = match cands {
            Cands::Num(v) => Test::Numeric {
                attribute: *a,
                threshold: v[rng.gen_range(0..v.len())],
            },
            Cands::Lev(v) => Test::Level {
                attribute: *a,
                code: v[rng.gen_range(0..v.len())],
            },
        };
        if let Some(s) = score_split(p, test, rows, min_leaf) {
            picked.push(s);
        }
    }
    picked.sort_by(|x, y| {
        let (ax, tx) = candidate_key(&x.test);
        let (ay, ty) = candidate_key(&y.test);
        ax.cmp(&ay).then(tx.total_cmp(&ty))
    });
    picked.into_iter().fold(None, better)
}

/// Grows one tree on `rows` of the problem.
pub fn grow(p: &Problem, rows: Vec<usize>, params: TreeParams, splitter: &mut Splitter) -> Tree {
    Tree {
        root: grow_node(p, rows, params, splitter, 0),
        targets: p.target_cols.to_vec(),
    }
}

fn leaf(p: &Problem, rows: &[usize]) -> TreeNode {
    let n = rows.len().max(1) as f64;
    TreeNode::Leaf {
        means: p.sums(rows).into_iter().map(|s| s / n).collect(),
        count: rows.len(),
    }
}

fn grow_node(p: &Problem, rows: Vec<usize>, params: TreeParams, splitter: &mut Splitter, depth: usize) -> TreeNode {
    if depth >= params.max_depth || rows.len() < 2 * params.min_leaf || p.is_constant(&rows) {
        return leaf(p, &rows);
    }
    let split = match splitter {
        Splitter::Exhaustive => best_split(p, &rows, params.min_leaf),
        Splitter::Random { k, rng } => random_split(p, &rows, params.min_leaf, *k, rng),
    };
    let mut split = split.filter(|s| s.score > TIE_EPS);
    if split.is_none() && params.lookahead && depth + 1 < params.max_depth {
        split = lookahead_split(p, &rows, params.min_leaf);
    }
    let Some(split) = split else {
        return leaf(p, &rows);
    };
    let (left, right, missing_left) = partition(p, split.test, rows);
    TreeNode::Split {
        test: split.test,
        missing_left,
        left: Box::new(grow_node(p, left, params, splitter, depth + 1)),
        right: Box::new(grow_node(p, right, params, splitter, depth + 1)),
    }
}

/// Splits `rows` by `test`, sending missing values to the larger side.
fn partition(p: &Problem, test: Test, rows: Vec<usize>) -> (Vec<usize>, Vec<usize>, bool) {
    let column = p.columns[test.attribute()];
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut missing = Vec::new();
    for r in rows {
        match test.goes_left(column, r) {
            Some(true) => left.push(r),
            Some(false) => right.push(r),
            None => missing.push(r),
        }
    }
    let missing_left = left.len() >= right.len();
    if missing_left {
        left.extend(missing);
        left.sort_unstable();
    } else {
        right.extend(missing);
        right.sort_unstable();
    }
    (left, right, missing_left)
}

/// Best split by two-level variance reduction, over evenly spaced thresholds
/// of each attribute. Needed when single splits are uninformative, as on
/// permuted data where every univariate split keeps target means unchanged.
fn lookahead_split(p: &Problem, rows: &[usize], min_leaf: usize) -> Option<ScoredSplit> {
    let n = rows.len() as f64;
    let child_gain = |child: &[usize]| -> f64 {
        if child.len() < 2 * min_leaf {
            return 0.0;
        }
        best_split(p, child, min_leaf).map_or(0.0, |s| s.score.max(0.0) * child.len() as f64)
    };
    let mut best: Option<ScoredSplit> = None;
    for &a in p.attributes {
        let cands = scan_attribute(p, a, rows, min_leaf);
        let step = cands.len().div_ceil(LOOKAHEAD_CANDIDATES).max(1);
        for c in cands.into_iter().step_by(step) {
            let (l, r, _) = partition(p, c.test, rows.to_vec());
            let total = c.score.max(0.0) * n + child_gain(&l) + child_gain(&r);
            best = better(best, ScoredSplit { test: c.test, score: total / n });
        }
    }
    best.filter(|s| s.score > TIE_EPS)
}
