//! Small statistics toolkit: replica means, KS tests, least squares, jackknife.

/// Mean and standard error of the mean (0 for fewer than two values).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sq = effective_n.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov–Smirnov test against the CDF `cdf`: (D, p-value).
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    (d, ks_p_value(d, n))
}

/// Two-sample Kolmogorov–Smirnov test: (D, p-value).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    (d, ks_p_value(d, na * nb / (na + nb)))
}

/// Ordinary least squares fit y = intercept + slope·x.
#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Weighted least squares with weights 1/σ_i² when `sigma` is given (the
/// parameter SEs then come from the weights), plain OLS otherwise.
pub fn linear_fit(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> LinearFit {
    let n = x.len();
    assert!(n >= 2 && y.len() == n, "need at least two paired points");
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|s| 1.0 / (s * s).max(1e-300)).collect(),
        None => vec![1.0; n],
    };
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let scale = if sigma.is_some() {
        1.0
    } else if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        rss / (n - 2) as f64
    } else {
        0.0
    };
    LinearFit {
        slope,
        intercept,
        slope_se: (scale * sw / det).sqrt(),
        intercept_se: (scale * sxx / det).sqrt(),
    }
}

/// Leave-one-out jackknife of a statistic over replicas: (estimate on all
/// replicas, jackknife standard error).
pub fn jackknife<F>(n: usize, stat: F) -> (f64, f64)
where
    F: Fn(Option<usize>) -> f64,
{
    let full = stat(None);
    if n < 2 {
        return (full, 0.0);
    }
    let loo: Vec<f64> = (0..n).map(|i| stat(Some(i))).collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (full, var.sqrt())
}
