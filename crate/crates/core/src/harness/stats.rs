use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LocalOrder {
    Finite(f64),
    /// The finer error is zero: the scheme is exact at this resolution.
    Exact,
}

impl fmt::Display for LocalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v:.6}"),
            Self::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    /// `log₂(e_r / e_{r+1})` for each adjacent pair.
    pub local: Vec<LocalOrder>,
    /// Least-squares slope of `log e` against `log h`; `None` if any error
    /// is zero or fewer than two errors were given.
    pub slope: Option<f64>,
}

/// Orders from errors at spacings `h, h/2, h/4, …`.
pub fn fit_order(errors: &[f64]) -> Result<OrderFit> {
    if let Some(&bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::InvalidErrorValue(bad));
    }
    let mut local = Vec::with_capacity(errors.len().saturating_sub(1));
    for pair in errors.windows(2) {
        local.push(match (pair[0], pair[1]) {
            (_, 0.0) => LocalOrder::Exact,
            (0.0, _) => return Err(Error::InvalidErrorValue(0.0)),
            (a, b) => LocalOrder::Finite((a / b).log2()),
        });
    }
    let slope = if errors.len() >= 2 && errors.iter().all(|&e| e > 0.0) {
        // x = log₂ h = −r (up to a constant), y = log₂ e.
        let n = errors.len() as f64;
        let xs: Vec<f64> = (0..errors.len()).map(|r| -(r as f64)).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(OrderFit { local, slope })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub paths: usize,
    pub rms: f64,
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    /// Delta-method standard error of the rms.
    pub rms_stderr: f64,
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mc_stats(errors: &[f64]) -> Result<ErrorSummary> {
    if errors.is_empty() {
        return Err(Error::Config("no per-path errors to summarize".into()));
    }
    if let Some(&bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::InvalidErrorValue(bad));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mean_square = squares.iter().sum::<f64>() / n;
    let rms = mean_square.sqrt();
    let rms_stderr = if errors.len() > 1 && rms > 0.0 {
        let var = squares.iter().map(|s| (s - mean_square).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt() / (2.0 * rms)
    } else {
        0.0
    };
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ErrorSummary {
        paths: errors.len(),
        rms,
        mean,
        median: quantile(&sorted, 0.5),
        q10: quantile(&sorted, 0.1),
        q90: quantile(&sorted, 0.9),
        rms_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(o: &LocalOrder) -> f64 {
        match o {
            LocalOrder::Finite(v) => *v,
            LocalOrder::Exact => panic!("exact"),
        }
    }

    #[test]
    fn geometric_errors() {
        let fit = fit_order(&[1e-2, 2.5e-3, 6.25e-4]).unwrap();
        assert_eq!(fit.local.len(), 2);
        for o in &fit.local {
            assert!((finite(o) - 2.0).abs() < 1e-12);
        }
        assert!((fit.slope.unwrap() - 2.0).abs() < 1e-12);

        let fit = fit_order(&[1e-2, 6.25e-4]).unwrap();
        assert!((finite(&fit.local[0]) - 4.0).abs() < 1e-12);

        let fit = fit_order(&[3e-3, 3e-3, 3e-3]).unwrap();
        assert!(fit.local.iter().all(|o| finite(o) == 0.0));
        assert_eq!(fit.slope, Some(0.0));
    }

    #[test]
    fn zero_errors_are_exact() {
        let fit = fit_order(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(fit.local, vec![LocalOrder::Exact, LocalOrder::Exact]);
        assert_eq!(fit.slope, None);
        assert!(fit_order(&[0.0, 1e-3]).is_err());
    }

    #[test]
    fn rejects_invalid_errors() {
        assert!(matches!(fit_order(&[1e-2, -1e-3]), Err(Error::InvalidErrorValue(_))));
        assert!(fit_order(&[f64::NAN, 1.0]).is_err());
        assert!(mc_stats(&[1.0, -1.0]).is_err());
        assert!(mc_stats(&[]).is_err());
    }

    #[test]
    fn summary_examples() {
        let s = mc_stats(&[0.25]).unwrap();
        assert_eq!((s.rms, s.mean, s.median, s.q90, s.rms_stderr), (0.25, 0.25, 0.25, 0.25, 0.0));

        let s = mc_stats(&[3.0, 4.0]).unwrap();
        assert!((s.rms - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((s.rms - 3.5355).abs() < 1e-4);
        assert_eq!(s.mean, 3.5);
        assert_eq!(s.median, 3.5);

        let s = mc_stats(&[0.0; 5]).unwrap();
        assert_eq!((s.rms, s.mean, s.median, s.q10, s.q90, s.rms_stderr), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn quantiles_interpolate() {
        let errors: Vec<f64> = (1..=11).map(|v| v as f64).collect();
        let s = mc_stats(&errors).unwrap();
        assert_eq!(s.median, 6.0);
        assert_eq!(s.q10, 2.0);
        assert_eq!(s.q90, 10.0);
    }

    #[test]
    fn delta_method_stderr_against_brute_force() {
        // Brute force: bootstrap-free check via the exact variance of the
        // mean of squares for a two-point distribution.
        let errors = [1.0, 3.0, 1.0, 3.0];
        let s = mc_stats(&errors).unwrap();
        let m2 = 5.0f64;
        let var_sq = [(1.0 - m2).powi(2), (9.0 - m2).powi(2), (1.0 - m2).powi(2), (9.0 - m2).powi(2)]
            .iter()
            .sum::<f64>()
            / 3.0;
        let expected = (var_sq / 4.0).sqrt() / (2.0 * m2.sqrt());
        assert!((s.rms_stderr - expected).abs() < 1e-15);
    }
}
