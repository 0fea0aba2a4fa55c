use std::collections::BTreeSet;

use crate::metrics::{attrs_jaccard, complexity, p_score};
use crate::query::{AttrId, Redescription};

/// Greedy forward selection of at most `r` redescriptions under one weight row.
///
/// Starts from the best individually scored redescription, then repeatedly
/// adds the candidate that minimizes the selected set's weighted total score
/// (redundancy measured within the selected set). Selection stops at `r`
/// members or when the best addition no longer lowers the padded total with
/// `r` as the expected set size. Returns indices into `input` in selection order.
pub fn grsc_indices(input: &[Redescription], weights: &[f64; 5], r: usize, k_c: usize) -> Vec<usize> {
    let n = input.len();
    if n == 0 || r == 0 {
        return Vec::new();
    }
    if n <= r {
        return (0..n).collect();
    }
    let attrs: Vec<BTreeSet<AttrId>> = input.iter().map(Redescription::attrs).collect();
    // accuracy, significance and complexity do not depend on the rest of the set
    let base: Vec<f64> = input
        .iter()
        .map(|x| {
            weights[0] * (1.0 - x.jaccard())
                + weights[1] * p_score(x.pvalue())
                + weights[4] * complexity(x.attr_occurrences(), k_c)
        })
        .collect();
    let mut selected: Vec<usize> = Vec::with_capacity(r);
    let mut in_set = vec![false; n];
    // per candidate: Σ attJ / Σ elemJ against the selected members
    let mut cand_a = vec![0.0; n];
    let mut cand_e = vec![0.0; n];
    let (mut sum_base, mut pair_a, mut pair_e) = (0.0, 0.0, 0.0);

    let total = |m: usize, sb: f64, pa: f64, pe: f64| -> f64 {
        if m == 0 {
            return 1.0;
        }
        let red = if m > 1 {
            (weights[2] * 2.0 * pa + weights[3] * 2.0 * pe) / (m - 1) as f64
        } else {
            0.0
        };
        (sb + red) / m as f64
    };
    let padded = |m: usize, plain: f64| -> f64 { (m as f64 * plain + (r - m) as f64) / r as f64 };

    let mut current = 1.0;
    while selected.len() < r {
        let m = selected.len() + 1;
        let mut best: Option<(usize, f64)> = None;
        for c in 0..n {
            if in_set[c] {
                continue;
            }
            let t = total(m, sum_base + base[c], pair_a + cand_a[c], pair_e + cand_e[c]);
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((c, t));
            }
        }
        let Some((c, t)) = best else { break };
        let next = padded(m, t);
        if !selected.is_empty() && next >= current {
            break;
        }
        current = next;
        selected.push(c);
        in_set[c] = true;
        sum_base += base[c];
        pair_a += cand_a[c];
        pair_e += cand_e[c];
        for o in 0..n {
            if !in_set[o] {
                cand_a[o] += attrs_jaccard(&attrs[o], &attrs[c]);
                cand_e[o] += input[o].support().jaccard(input[c].support());
            }
        }
    }
    selected
}

/// One selected set per weight row.
pub fn grsc(input: &[Redescription], weight_rows: &[[f64; 5]], r: usize, k_c: usize) -> Vec<Vec<Redescription>> {
    weight_rows
        .iter()
        .map(|w| {
            grsc_indices(input, w, r, k_c)
                .into_iter()
                .map(|i| input[i].clone())
                .collect()
        })
        .collect()
}
