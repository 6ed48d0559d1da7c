//! Small statistics helpers used by reports and checks.

use crate::hardware::NUM_DELAYS;

/// Average ranks, ties sharing the mean of the ranks they span.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation; `NaN` if either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    pearson(&ranks(x), &ranks(y))
}

/// Pearson chi-square statistic of `draws` against a uniform distribution
/// over the 128 delay indices.
pub fn delay_chi_square(draws: impl IntoIterator<Item = u8>) -> f64 {
    let mut bins = [0u64; NUM_DELAYS];
    let mut n = 0u64;
    for d in draws {
        bins[d as usize] += 1;
        n += 1;
    }
    let expected = n as f64 / NUM_DELAYS as f64;
    bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum()
}
