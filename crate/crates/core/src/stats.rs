//! Small statistical helpers shared by the estimators and their tests.

use serde::Serialize;

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1);
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_vs_cdf(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a_sorted: &[f64], b_sorted: &[f64]) -> f64 {
    let (na, nb) = (a_sorted.len() as f64, b_sorted.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a_sorted.len() && j < b_sorted.len() {
        let x = a_sorted[i].min(b_sorted[j]);
        while i < a_sorted.len() && a_sorted[i] <= x {
            i += 1;
        }
        while j < b_sorted.len() && b_sorted[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Total-variation distance between two empirical laws on the nonnegative
/// integers, given as count histograms.
pub fn tv_distance(a: &[u64], b: &[u64]) -> f64 {
    let ta = a.iter().sum::<u64>() as f64;
    let tb = b.iter().sum::<u64>() as f64;
    assert!(ta > 0.0 && tb > 0.0);
    let len = a.len().max(b.len());
    let mut tv = 0.0;
    for k in 0..len {
        let pa = a.get(k).copied().unwrap_or(0) as f64 / ta;
        let pb = b.get(k).copied().unwrap_or(0) as f64 / tb;
        tv += (pa - pb).abs();
    }
    tv / 2.0
}

/// Histogram of nonnegative integers.
pub fn histogram(values: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        let idx = v as usize;
        if idx >= h.len() {
            h.resize(idx + 1, 0);
        }
        h[idx] += 1;
    }
    h
}

/// Ordinary least squares `y = intercept + slope x` with the usual standard
/// error on the slope.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 2, "need two points for a line");
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LinearFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ks_identical_samples_is_zero() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_two_sample_hand_value() {
        let a = [1.0, 1.0, 4.0, 4.0];
        let b = [1.0, 1.0, 1.0, 4.0];
        assert_relative_eq!(ks_two_sample(&a, &b), 0.25);
    }

    #[test]
    fn ks_vs_cdf_uniform() {
        let xs = [0.25, 0.5, 0.75];
        // sup over |F - empirical| at breakpoints: 1/4 vs {0, 1/3}, etc.
        let d = ks_vs_cdf(&xs, |x| x.clamp(0.0, 1.0));
        assert_relative_eq!(d, 0.25);
    }

    #[test]
    fn tv_hand_values() {
        assert_eq!(tv_distance(&[5, 5], &[5, 5]), 0.0);
        assert_relative_eq!(tv_distance(&[10, 0], &[0, 10]), 1.0);
        assert_relative_eq!(tv_distance(&[3, 1], &[1, 3]), 0.5);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&xs, &ys);
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 1.0, epsilon = 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }
}
