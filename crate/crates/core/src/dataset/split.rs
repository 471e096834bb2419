use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

/// Row ranges `[start, end)` of each split in the unsplit matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBoundaries {
    pub train: (usize, usize),
    pub validation: (usize, usize),
    pub test: (usize, usize),
}

impl SplitBoundaries {
    /// Validation and test sizes are floored; the remainder goes to train.
    pub fn compute(total: usize, fractions: SplitFractions) -> Result<Self> {
        let sum = fractions.train + fractions.validation + fractions.test;
        let valid = [fractions.train, fractions.validation, fractions.test]
            .iter()
            .all(|f| (0.0..=1.0).contains(f));
        if !valid || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "split fractions must lie in [0, 1] and sum to 1, got {fractions:?}"
            )));
        }
        let n_val = (total as f64 * fractions.validation + 1e-9).floor() as usize;
        let n_test = (total as f64 * fractions.test + 1e-9).floor() as usize;
        let n_train = total - n_val - n_test;
        Ok(Self {
            train: (0, n_train),
            validation: (n_train, n_train + n_val),
            test: (n_train + n_val, total),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: FeatureMatrix,
    pub validation: FeatureMatrix,
    pub test: FeatureMatrix,
    pub boundaries: SplitBoundaries,
}

/// Contiguous, ordered train/validation/test split. Every split must hold at
/// least `min_rows` rows (the span of one window, I + h).
pub fn chronological_split(
    m: &FeatureMatrix,
    fractions: SplitFractions,
    min_rows: usize,
) -> Result<Splits> {
    let b = SplitBoundaries::compute(m.len(), fractions)?;
    for (name, (start, end)) in [
        ("train", b.train),
        ("validation", b.validation),
        ("test", b.test),
    ] {
        if end - start < min_rows {
            return Err(Error::Sizing(format!(
                "{name} split has {} rows but one window needs {min_rows}",
                end - start
            )));
        }
    }
    Ok(Splits {
        train: m.rows(b.train.0, b.train.1),
        validation: m.rows(b.validation.0, b.validation.1),
        test: m.rows(b.test.0, b.test.1),
        boundaries: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn matrix(t: usize) -> FeatureMatrix {
        FeatureMatrix {
            columns: vec!["energy".into()],
            values: Array2::from_shape_fn((t, 1), |(i, _)| i as f64),
            target_column: "energy".into(),
            timestamps: vec![chrono::NaiveDateTime::default(); t],
        }
    }

    #[test]
    fn exact_division() {
        let s = chronological_split(&matrix(100), SplitFractions::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (80, 10, 10));
    }

    #[test]
    fn remainder_goes_to_train() {
        let s = chronological_split(&matrix(101), SplitFractions::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (81, 10, 10));
        assert_eq!(s.train.len() + s.validation.len() + s.test.len(), 101);
    }

    #[test]
    fn too_small_for_a_window() {
        let err = chronological_split(&matrix(10), SplitFractions::default(), 48 + 24).unwrap_err();
        assert!(matches!(err, Error::Sizing(_)));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let f = SplitFractions { train: 0.5, validation: 0.1, test: 0.1 };
        assert!(matches!(
            chronological_split(&matrix(100), f, 1).unwrap_err(),
            Error::Parameter(_)
        ));
    }

    proptest! {
        #[test]
        fn splits_partition_in_order(t in 30usize..5000) {
            let m = matrix(t);
            let s = chronological_split(&m, SplitFractions::default(), 1).unwrap();
            prop_assert_eq!(s.train.len() + s.validation.len() + s.test.len(), t);
            let joined: Vec<f64> = s.train.values.iter()
                .chain(s.validation.values.iter())
                .chain(s.test.values.iter())
                .copied()
                .collect();
            prop_assert_eq!(joined, m.values.iter().copied().collect::<Vec<_>>());
        }
    }
}
