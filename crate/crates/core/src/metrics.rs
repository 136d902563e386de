//! Error metrics over a checkpoint of pair estimates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    pub s_true: f64,
    pub s_hat: f64,
    pub j_true: f64,
    pub j_hat: f64,
}

/// Estimates for every tracked pair at stream position `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub records: Vec<PairRecord>,
}

impl Checkpoint {
    pub fn new(t: u64, records: Vec<PairRecord>) -> Self {
        Self { t, records }
    }

    /// Pairs left out of AAPE because they no longer share any item.
    pub fn excluded_pairs(&self) -> usize {
        self.records.iter().filter(|r| r.s_true == 0.0).count()
    }

    /// Average absolute percentage error of the common-item estimates.
    pub fn aape(&self) -> Result<f64> {
        let (sum, n) = self
            .records
            .iter()
            .filter(|r| r.s_true != 0.0)
            .fold((0.0, 0usize), |(sum, n), r| {
                (sum + ((r.s_true - r.s_hat) / r.s_true).abs(), n + 1)
            });
        if n == 0 {
            return Err(Error::UndefinedMetric("AAPE over zero pairs"));
        }
        Ok(sum / n as f64)
    }

    /// Root mean square error of the Jaccard estimates.
    pub fn armse(&self) -> Result<f64> {
        if self.records.is_empty() {
            return Err(Error::UndefinedMetric("ARMSE over zero pairs"));
        }
        let sq: f64 = self.records.iter().map(|r| (r.j_hat - r.j_true).powi(2)).sum();
        Ok((sq / self.records.len() as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(s_true: f64, s_hat: f64, j_true: f64, j_hat: f64) -> PairRecord {
        PairRecord {
            s_true,
            s_hat,
            j_true,
            j_hat,
        }
    }

    #[test]
    fn exact_estimates_score_zero() {
        let cp = Checkpoint::new(1, vec![rec(3.0, 3.0, 0.5, 0.5), rec(1.0, 1.0, 0.1, 0.1)]);
        assert_eq!(cp.aape().unwrap(), 0.0);
        assert_eq!(cp.armse().unwrap(), 0.0);
    }

    #[test]
    fn single_pair() {
        let cp = Checkpoint::new(1, vec![rec(2.0, 3.0, 0.4, 0.6)]);
        assert_eq!(cp.aape().unwrap(), 0.5);
        assert!((cp.armse().unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_truth_is_excluded_from_aape_only() {
        let cp = Checkpoint::new(1, vec![rec(0.0, 5.0, 0.0, 0.3), rec(4.0, 2.0, 0.2, 0.2)]);
        assert_eq!(cp.excluded_pairs(), 1);
        assert_eq!(cp.aape().unwrap(), 0.5);
        assert!((cp.armse().unwrap() - (0.09f64 / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_checkpoints_are_undefined() {
        let cp = Checkpoint::new(1, vec![]);
        assert!(cp.aape().is_err());
        assert!(cp.armse().is_err());
        let only_zero = Checkpoint::new(1, vec![rec(0.0, 1.0, 0.0, 0.0)]);
        assert!(only_zero.aape().is_err());
        assert_eq!(only_zero.armse().unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn rms_is_between_mean_and_max(
            errs in proptest::collection::vec((1.0f64..100.0, -50.0f64..150.0, 0.0f64..1.0, -0.5f64..1.5), 1..50)
        ) {
            let records: Vec<_> = errs.iter().map(|&(s, sh, j, jh)| rec(s, sh, j, jh)).collect();
            let cp = Checkpoint::new(7, records.clone());
            let abs: Vec<f64> = records.iter().map(|r| (r.j_hat - r.j_true).abs()).collect();
            let mean = abs.iter().sum::<f64>() / abs.len() as f64;
            let max = abs.iter().cloned().fold(0.0, f64::max);
            let rmse = cp.armse().unwrap();
            prop_assert!(rmse >= 0.0 && cp.aape().unwrap() >= 0.0);
            prop_assert!(mean <= rmse + 1e-12);
            prop_assert!(rmse <= max + 1e-12);
        }
    }
}
