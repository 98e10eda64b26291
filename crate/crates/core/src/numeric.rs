//! Small numeric helpers shared across modules.

pub use statrs::function::gamma::ln_gamma;

/// `ln C(p, k)`; `-inf` when `k > p`.
pub fn ln_choose(p: usize, k: usize) -> f64 {
    if k > p {
        return f64::NEG_INFINITY;
    }
    ln_gamma(p as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((p - k) as f64 + 1.0)
}

/// Exact `C(p, k)` saturating at `u128::MAX`.
pub fn choose(p: usize, k: usize) -> u128 {
    if k > p {
        return 0;
    }
    let k = k.min(p - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (p - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((p - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `Σ_{s ≤ cap} C(p, s)`, saturating.
pub fn count_subsets_up_to(p: usize, cap: usize) -> u128 {
    (0..=cap.min(p)).fold(0u128, |acc, s| acc.saturating_add(choose(p, s)))
}

/// `ln Σ exp(v)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Median of finite values (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = mean(values);
    if values.len() < 2 {
        return (m, f64::NAN);
    }
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
