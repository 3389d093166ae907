use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FitError {
    #[error("need at least two pairs with positive error and step, got {0}")]
    TooFewPoints(usize),
    #[error("all steps are equal")]
    DegenerateSteps,
}

/// Least-squares fit of `log error = p log h + log N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    /// `log N`.
    pub intercept: f64,
    /// Largest absolute residual of the log-log regression.
    pub max_residual: f64,
    pub used: usize,
    /// Steps whose error was zero or negative and did not enter the fit.
    pub excluded: Vec<f64>,
}

pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit, FitError> {
    let (kept, dropped): (Vec<_>, Vec<_>) =
        pairs.iter().copied().partition(|&(h, e)| h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite());
    if kept.len() < 2 {
        return Err(FitError::TooFewPoints(kept.len()));
    }
    let n = kept.len() as f64;
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::DegenerateSteps);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let max_residual = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - rate * x).abs()).fold(0.0, f64::max);
    Ok(RateFit { rate, intercept, max_residual, used: kept.len(), excluded: dropped.iter().map(|p| p.0).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_slope() {
        let fit = fit_rate(&[(0.1, 0.01), (0.05, 0.0025)]).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
    }

    #[test]
    fn exact_power_laws() {
        for p in [2.0 / 3.0, 1.0, 2.0] {
            let pairs: Vec<(f64, f64)> =
                [0.1, 0.05, 0.025, 0.0125].iter().map(|&h| (h, 3.0 * f64::powf(h, p))).collect();
            let fit = fit_rate(&pairs).unwrap();
            assert!((fit.rate - p).abs() < 1e-12);
            assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
            assert!(fit.max_residual <= 1e-12);
        }
    }

    #[test]
    fn noisy_two_thirds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let pairs: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
                .iter()
                .map(|&h| (h, 0.7 * f64::powf(h, 2.0 / 3.0) * (1.0 + rng.random_range(-0.05..0.05))))
                .collect();
            let r = fit_rate(&pairs).unwrap().rate;
            assert!((0.55..=0.80).contains(&r), "{r}");
        }
    }

    #[test]
    fn zero_errors_are_excluded() {
        let fit = fit_rate(&[(0.1, 0.01), (0.05, 0.0), (0.025, 0.000625)]).unwrap();
        assert_eq!(fit.excluded, vec![0.05]);
        assert_eq!(fit.used, 2);
        assert!((fit.rate - 2.0).abs() < 1e-12);
        assert_eq!(fit_rate(&[(0.1, 0.0), (0.05, 0.0)]), Err(FitError::TooFewPoints(0)));
        assert_eq!(fit_rate(&[(0.1, 1.0), (0.1, 2.0)]), Err(FitError::DegenerateSteps));
    }
}
