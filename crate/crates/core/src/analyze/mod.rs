//! Post-processing of attributions: contributor/offset roles, the
//! decomposition integrity check, heatmap data, and variability statistics
//! for comparing background selections.

mod heatmap;
mod stability;
mod stats;

pub use heatmap::{heatmap_export, write_heatmap_csv, HeatmapData};
pub use stability::{
    stability_benchmark, stability_from_backgrounds, write_table_csv, BenchmarkConfig,
    MethodComparison, Magnitude, SelectionSummary, StabilityReport, VariabilitySummary,
};
pub use stats::{bartlett_test, bartlett_test_groups, reduction_pct, variability, variability_with, BartlettResult, Variability};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::Attribution;

/// Attributions smaller than this (scaled units) are treated as noise.
pub const NEGLIGIBLE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Pushed the prediction away from the actual value.
    Contributor,
    /// Pulled the prediction toward the actual value.
    Offset,
    Negligible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorizedAttribution {
    pub attribution: Attribution,
    pub actual: f64,
    pub predicted: f64,
    pub roles: Vec<Role>,
}

impl CategorizedAttribution {
    pub fn count(&self, role: Role) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }
}

pub fn categorize(a: &Attribution, actual: f64, predicted: f64, epsilon: f64) -> Result<CategorizedAttribution> {
    if actual == predicted {
        return Err(Error::Input(
            "actual equals predicted, so contributors and offsets are undefined".into(),
        ));
    }
    let under_predicted = actual > predicted;
    let roles = a
        .phi
        .iter()
        .map(|&phi| {
            if phi.abs() <= epsilon {
                Role::Negligible
            } else if (phi < 0.0) == under_predicted {
                Role::Contributor
            } else {
                Role::Offset
            }
        })
        .collect();
    Ok(CategorizedAttribution {
        attribution: a.clone(),
        actual,
        predicted,
        roles,
    })
}

/// `phi0 + Σφ`, checked against the recorded model output.
pub fn reconstruct_prediction(a: &Attribution) -> Result<f64> {
    let reconstructed = a.phi0 + a.phi.iter().sum::<f64>();
    let diff = (reconstructed - a.f_x).abs();
    let tolerance = a.method.efficiency_tolerance();
    if !(diff <= tolerance) {
        return Err(Error::Integrity {
            reconstructed,
            expected: a.f_x,
            diff,
            tolerance,
        });
    }
    Ok(reconstructed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::Method;
    use proptest::prelude::*;

    fn attribution(phi: Vec<f64>, method: Method) -> Attribution {
        let f_x = 0.25 + phi.iter().sum::<f64>();
        Attribution {
            phi,
            phi0: 0.25,
            f_x,
            method,
            n_evals: 0,
            seed: None,
            std_err: None,
            horizon: 0,
        }
    }

    #[test]
    fn under_prediction_roles() {
        let a = attribution(vec![-0.4, 0.3, 0.0, -1e-7], Method::Kernel);
        let c = categorize(&a, 4.75, 1.60, NEGLIGIBLE_EPSILON).unwrap();
        assert_eq!(c.roles, vec![Role::Contributor, Role::Offset, Role::Negligible, Role::Negligible]);
    }

    #[test]
    fn zero_attribution_is_negligible() {
        let a = attribution(vec![0.0; 5], Method::Exact);
        let c = categorize(&a, 1.0, 0.0, NEGLIGIBLE_EPSILON).unwrap();
        assert_eq!(c.count(Role::Negligible), 5);
    }

    #[test]
    fn equal_actual_and_prediction_is_rejected() {
        let a = attribution(vec![0.1], Method::Exact);
        assert!(categorize(&a, 2.0, 2.0, NEGLIGIBLE_EPSILON).is_err());
    }

    #[test]
    fn integrity() {
        let a = attribution(vec![0.1, -0.2, 0.7], Method::Exact);
        assert!((reconstruct_prediction(&a).unwrap() - a.f_x).abs() <= 1e-9);
        let mut broken = a.clone();
        broken.phi[2] = 0.0;
        assert!(matches!(reconstruct_prediction(&broken), Err(Error::Integrity { .. })));
    }

    proptest! {
        #[test]
        fn swapping_actual_and_predicted_swaps_labels(
            phi in proptest::collection::vec(-1.0f64..1.0, 1..50),
            actual in -5.0f64..5.0,
            gap in 0.01f64..3.0,
        ) {
            let a = attribution(phi, Method::Kernel);
            let under = categorize(&a, actual, actual - gap, NEGLIGIBLE_EPSILON).unwrap();
            let over = categorize(&a, actual - gap, actual, NEGLIGIBLE_EPSILON).unwrap();
            for (u, o) in under.roles.iter().zip(&over.roles) {
                let expected = match u {
                    Role::Contributor => Role::Offset,
                    Role::Offset => Role::Contributor,
                    Role::Negligible => Role::Negligible,
                };
                prop_assert_eq!(*o, expected);
            }
        }
    }
}
