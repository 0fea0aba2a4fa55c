//! Redescription and redescription-set quality measures.
//!
//! All `*_sc` scores live in `[0, 1]` with 0 the best outcome. Set scores are
//! means of per-redescription scores; the underlined variants pad sets smaller
//! than the expected output size with worst-case redescriptions (score 1).

use std::collections::BTreeSet;

use statrs::function::factorial::ln_factorial;

use crate::entities::EntitySet;
use crate::query::{AttrId, Redescription};

/// Smallest p-value distinguished by [`p_score`].
pub const MIN_PVALUE: f64 = 1e-17;

/// Jaccard index of several sets: `|∩| / |∪|`; 0 when every set is empty.
pub fn jaccard(sets: &[&EntitySet]) -> f64 {
    assert!(sets.len() >= 2, "jaccard needs at least two sets");
    let mut inter = sets[0].clone();
    let mut union = sets[0].clone();
    for s in &sets[1..] {
        inter.intersect_with(s);
        union.union_with(s);
    }
    let u = union.len();
    if u == 0 {
        0.0
    } else {
        inter.len() as f64 / u as f64
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Binomial upper tail `P(X >= support_size)` with `X ~ Bin(n, Π |q_i|/n)`.
///
/// Terms are summed in log space from whichever side of the mean is the
/// shorter tail, so small p-values keep their relative precision.
pub fn p_value(n_entities: usize, query_support_sizes: &[usize], support_size: usize) -> f64 {
    if n_entities == 0 || support_size == 0 {
        return 1.0;
    }
    let n = n_entities as u64;
    let s = support_size as u64;
    if s > n {
        return 0.0;
    }
    let prob: f64 = query_support_sizes
        .iter()
        .map(|&k| k as f64 / n as f64)
        .product();
    if prob <= 0.0 {
        return 0.0;
    }
    if prob >= 1.0 {
        return 1.0;
    }
    let ln_p = prob.ln();
    let ln_q = (-prob).ln_1p();
    let term = |k: u64| ln_choose(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q;
    let mean = n as f64 * prob;
    let p = if s as f64 > mean {
        let terms: Vec<f64> = (s..=n).map(term).collect();
        log_sum_exp(&terms).exp()
    } else {
        let terms: Vec<f64> = (0..s).map(term).collect();
        1.0 - log_sum_exp(&terms).exp()
    };
    p.clamp(0.0, 1.0)
}

/// Normalized significance score `log10(p)/17 + 1`, with p clamped to `[1e-17, 1]`.
pub fn p_score(p: f64) -> f64 {
    let p = if p.is_nan() { 1.0 } else { p.clamp(MIN_PVALUE, 1.0) };
    (p.log10() / 17.0 + 1.0).clamp(0.0, 1.0)
}

/// Query complexity `min(|attr(R)| / k_c, 1)` over the attribute-occurrence multiset.
pub fn complexity(attr_occurrences: usize, k_c: usize) -> f64 {
    assert!(k_c >= 1, "k_c must be positive");
    if attr_occurrences >= k_c {
        1.0
    } else {
        attr_occurrences as f64 / k_c as f64
    }
}

fn set_jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn attribute_jaccard(r1: &Redescription, r2: &Redescription) -> f64 {
    set_jaccard(&r1.attrs(), &r2.attrs())
}

pub fn attrs_jaccard(a: &BTreeSet<AttrId>, b: &BTreeSet<AttrId>) -> f64 {
    set_jaccard(a, b)
}

pub fn entity_jaccard(r1: &Redescription, r2: &Redescription) -> f64 {
    r1.support().jaccard(r2.support())
}

fn average_against(i: usize, n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    (0..n).filter(|&j| j != i).map(&mut f).sum::<f64>() / (n - 1) as f64
}

/// Mean attribute Jaccard of `set[i]` against the other members; 0 for a singleton set.
pub fn avg_aj(i: usize, set: &[Redescription]) -> f64 {
    let attrs: Vec<_> = set.iter().map(Redescription::attrs).collect();
    average_against(i, set.len(), |j| set_jaccard(&attrs[i], &attrs[j]))
}

/// Mean entity Jaccard of `set[i]` against the other members; 0 for a singleton set.
pub fn avg_ej(i: usize, set: &[Redescription]) -> f64 {
    average_against(i, set.len(), |j| entity_jaccard(&set[i], &set[j]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedescriptionStats {
    pub jaccard: f64,
    pub pvalue: f64,
    pub support_size: usize,
    pub aaj: f64,
    pub aej: f64,
    pub comp: f64,
}

impl RedescriptionStats {
    /// Scores in (J, p, AAJ, AEJ, comp) order, each in `[0, 1]`, lower is better.
    pub fn scores(&self) -> [f64; 5] {
        [1.0 - self.jaccard, p_score(self.pvalue), self.aaj, self.aej, self.comp]
    }
}

/// Per-redescription statistics, with redundancy measured within `set`.
pub fn redescription_stats(set: &[Redescription], k_c: usize) -> Vec<RedescriptionStats> {
    let n = set.len();
    let attrs: Vec<_> = set.iter().map(Redescription::attrs).collect();
    let mut att = vec![0.0; n];
    let mut ent = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let a = set_jaccard(&attrs[i], &attrs[j]);
            let e = entity_jaccard(&set[i], &set[j]);
            att[i] += a;
            att[j] += a;
            ent[i] += e;
            ent[j] += e;
        }
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    set.iter()
        .enumerate()
        .map(|(i, r)| RedescriptionStats {
            jaccard: r.jaccard(),
            pvalue: r.pvalue(),
            support_size: r.support().len(),
            aaj: att[i] / denom,
            aej: ent[i] / denom,
            comp: complexity(r.attr_occurrences(), k_c),
        })
        .collect()
}

/// The five set-level scores plus their weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureScores {
    pub j_sc: f64,
    pub p_sc: f64,
    pub aaj_sc: f64,
    pub aej_sc: f64,
    pub comp_sc: f64,
    pub total_sc: f64,
}

impl MeasureScores {
    pub fn from_components(c: [f64; 5], weights: &[f64; 5]) -> Self {
        MeasureScores {
            j_sc: c[0],
            p_sc: c[1],
            aaj_sc: c[2],
            aej_sc: c[3],
            comp_sc: c[4],
            total_sc: total_score(&c, weights),
        }
    }

    pub fn components(&self) -> [f64; 5] {
        [self.j_sc, self.p_sc, self.aaj_sc, self.aej_sc, self.comp_sc]
    }
}

pub fn total_score(components: &[f64; 5], weights: &[f64; 5]) -> f64 {
    components.iter().zip(weights).map(|(c, w)| c * w).sum()
}

/// Padded mean: `(sum + (expected - size)) / expected` when the set is no
/// larger than expected, the plain mean otherwise.
pub fn underlined(score_sum: f64, size: usize, expected: usize) -> f64 {
    assert!(expected >= 1, "expected output size must be positive");
    if size <= expected {
        (score_sum + (expected - size) as f64) / expected as f64
    } else {
        score_sum / size as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetScores {
    pub size: usize,
    /// Plain means; `None` for an empty set.
    pub plain: Option<MeasureScores>,
    pub underlined: MeasureScores,
    /// Mean accuracy of the set; `None` for an empty set.
    pub avg_jaccard: Option<f64>,
    pub underlined_avg_jaccard: f64,
    pub entity_coverage: f64,
    pub attribute_coverage: f64,
}

/// Scores a redescription set under one weight row.
///
/// `n_entities` and `n_attributes` are the dataset totals used by the coverage measures.
pub fn set_scores(
    set: &[Redescription],
    weights: &[f64; 5],
    expected_out: usize,
    k_c: usize,
    n_entities: usize,
    n_attributes: usize,
) -> SetScores {
    let stats = redescription_stats(set, k_c);
    set_scores_from_stats(set, &stats, weights, expected_out, n_entities, n_attributes)
}

pub fn set_scores_from_stats(
    set: &[Redescription],
    stats: &[RedescriptionStats],
    weights: &[f64; 5],
    expected_out: usize,
    n_entities: usize,
    n_attributes: usize,
) -> SetScores {
    let size = stats.len();
    let mut sums = [0.0; 5];
    for s in stats {
        for (acc, v) in sums.iter_mut().zip(s.scores()) {
            *acc += v;
        }
    }
    let plain = (size > 0).then(|| {
        MeasureScores::from_components(sums.map(|x| x / size as f64), weights)
    });
    let padded = sums.map(|x| underlined(x, size, expected_out));
    let underlined_scores = MeasureScores::from_components(padded, weights);

    let mut covered = EntitySet::empty(n_entities);
    let mut attrs = BTreeSet::new();
    for r in set {
        covered.union_with(r.support());
        attrs.extend(r.attrs());
    }
    SetScores {
        size,
        plain,
        underlined: underlined_scores,
        avg_jaccard: plain.map(|p| 1.0 - p.j_sc),
        underlined_avg_jaccard: 1.0 - underlined_scores.j_sc,
        entity_coverage: if n_entities == 0 {
            0.0
        } else {
            covered.len() as f64 / n_entities as f64
        },
        attribute_coverage: if n_attributes == 0 {
            0.0
        } else {
            attrs.len() as f64 / n_attributes as f64
        },
    }
}
