//! Small descriptive statistics used by the replication drivers.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Root mean square of `xs`.
pub fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Quantile with linear interpolation between order statistics
/// (position `(n-1) q`).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    quantile_sorted(&sorted(xs), q)
}

pub fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    assert!(!s.is_empty(), "quantile of an empty slice");
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    s[lo] + frac * (s[hi] - s[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Anderson-Darling test of normality with estimated mean and variance.
/// Returns `(A*^2, p-value)`, using the small-sample adjustment and the
/// D'Agostino-Stephens p-value approximation.
pub fn anderson_darling_normal(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 8 {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(xs);
    let sd = std_dev(xs);
    if sd <= 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let z = sorted(xs);
    let norm = Normal::standard();
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let lo = norm.cdf((z[i] - m) / sd).clamp(1e-300, 1.0 - 1e-16);
        let hi = norm.cdf((z[n - 1 - i] - m) / sd).clamp(1e-300, 1.0 - 1e-16);
        s += (2 * i + 1) as f64 * (lo.ln() + (1.0 - hi).ln());
    }
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    (a, p.clamp(0.0, 1.0))
}

/// Sign counts of paired differences `a_i - b_i`: (a below b, a above b, ties).
pub fn paired_sign_counts(a: &[f64], b: &[f64]) -> (usize, usize, usize) {
    let mut below = 0;
    let mut above = 0;
    let mut ties = 0;
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Less) => below += 1,
            Some(std::cmp::Ordering::Greater) => above += 1,
            _ => ties += 1,
        }
    }
    (below, above, ties)
}

/// Wilcoxon signed-rank statistic `W+` (sum of ranks of positive
/// differences `a_i - b_i`, zeros dropped, average ranks for ties) with its
/// normal-approximation two-sided p-value.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let mut w_plus = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for d in &diffs[i..=j] {
            if *d > 0.0 {
                w_plus += rank;
            }
        }
        i = j + 1;
    }
    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return (w_plus, 1.0);
    }
    let z = (w_plus - mu) / var.sqrt();
    let p = 2.0 * (1.0 - Normal::standard().cdf(z.abs()));
    (w_plus, p.min(1.0))
}
