/// Exact one-sided Wilcoxon signed-rank test.
///
/// Tests whether the differences `d` tend to be positive: returns
/// `P(W+ >= observed)` under the null hypothesis that every sign is equally
/// likely. Zero differences are dropped and ties get mid-ranks. With no
/// nonzero difference the result is 1.
pub fn signed_rank_greater(d: &[f64]) -> f64 {
    let mut nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    if nz.is_empty() {
        return 1.0;
    }
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    // doubled mid-ranks keep every rank an integer
    let n = nz.len();
    let mut ranks2 = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean, doubled: (i + 1) + (j + 1)
        for r in &mut ranks2[i..=j] {
            *r = i + j + 2;
        }
        i = j + 1;
    }
    let observed: usize = nz.iter().zip(&ranks2).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let total: usize = ranks2.iter().sum();
    // counts[s] = number of sign patterns whose positive doubled ranks sum to s
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &ranks2 {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let tail: f64 = counts[observed..].iter().sum();
    tail / 2f64.powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_gives_the_smallest_tail() {
        let d: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
        assert_eq!(signed_rank_greater(&d), 1.0 / 1024.0);
    }

    #[test]
    fn all_zero_is_one() {
        assert_eq!(signed_rank_greater(&[0.0; 5]), 1.0);
    }

    #[test]
    fn matches_brute_force_with_ties() {
        let d = [0.5, -0.5, 1.0, 2.0, -2.0, 0.25, 3.0];
        // brute force over all sign patterns with the same mid-ranks
        let mut abs: Vec<f64> = d.iter().map(|x: &f64| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let rank = |v: f64| {
            let pos: Vec<usize> = (0..abs.len()).filter(|&i| abs[i] == v).collect();
            pos.iter().map(|&i| (i + 1) as f64).sum::<f64>() / pos.len() as f64
        };
        let ranks: Vec<f64> = d.iter().map(|x| rank(x.abs())).collect();
        let obs: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
        let n = d.len();
        let mut hits = 0;
        for mask in 0u32..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w >= obs - 1e-12 {
                hits += 1;
            }
        }
        let expected = hits as f64 / (1u32 << n) as f64;
        assert!((signed_rank_greater(&d) - expected).abs() < 1e-15);
    }
}
