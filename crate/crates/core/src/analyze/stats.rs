use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::explain::Attribution;

use super::Magnitude;

/// Per-feature spread of attributions across a group, summarized over
/// features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variability {
    pub per_feature_sd: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with the n − 1 denominator, computed on values shifted
/// by the first one so that constant input gives exactly zero.
fn sample_variance(v: &[f64]) -> f64 {
    let shifted: Vec<f64> = v.iter().map(|x| x - v[0]).collect();
    let m = mean(&shifted);
    shifted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn variability(atts: &[Attribution]) -> Result<Variability> {
    variability_with(atts, Magnitude::Signed)
}

pub fn variability_with(atts: &[Attribution], magnitude: Magnitude) -> Result<Variability> {
    let [first, rest @ ..] = atts else {
        return Err(Error::Sizing("variability needs at least two attributions".into()));
    };
    if rest.is_empty() {
        return Err(Error::Sizing("variability needs at least two attributions".into()));
    }
    if let Some(other) = rest.iter().find(|a| a.method != first.method) {
        return Err(Error::Grouping(format!(
            "cannot mix {} and {} attributions in one group",
            first.method, other.method
        )));
    }
    let d = first.phi.len();
    if rest.iter().any(|a| a.phi.len() != d) {
        return Err(Error::Shape("attributions in a group differ in length".into()));
    }
    let per_feature_sd: Vec<f64> = (0..d)
        .map(|i| {
            let column: Vec<f64> = atts.iter().map(|a| magnitude.apply(a.phi[i])).collect();
            sample_variance(&column).sqrt()
        })
        .collect();
    let m = mean(&per_feature_sd);
    let sd = if d > 1 { sample_variance(&per_feature_sd).sqrt() } else { 0.0 };
    Ok(Variability { per_feature_sd, mean: m, sd })
}

/// Relative decrease, in percent, of the similar-background variability.
pub fn reduction_pct(random_mean: f64, similar_mean: f64) -> Result<f64> {
    if !(random_mean > 0.0) {
        return Err(Error::Numerical(format!(
            "reduction is undefined for a random-background variability of {random_mean}"
        )));
    }
    Ok((random_mean - similar_mean) / random_mean * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BartlettResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn bartlett_test(group_a: &[f64], group_b: &[f64]) -> Result<BartlettResult> {
    bartlett_test_groups(&[group_a, group_b])
}

/// Bartlett's test for equal variances across `k ≥ 2` groups.
pub fn bartlett_test_groups(groups: &[&[f64]]) -> Result<BartlettResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::Sizing("Bartlett's test needs at least two groups".into()));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::Sizing(format!(
            "Bartlett's test needs at least two values per group, got {}",
            g.len()
        )));
    }
    let variances: Vec<f64> = groups.iter().map(|g| sample_variance(g)).collect();
    if let Some(i) = variances.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateVariance(format!("group {i} has zero variance")));
    }
    let dof: Vec<f64> = groups.iter().map(|g| (g.len() - 1) as f64).collect();
    let total_dof: f64 = dof.iter().sum();
    let pooled = dof.iter().zip(&variances).map(|(n, v)| n * v).sum::<f64>() / total_dof;
    let numerator = total_dof * pooled.ln() - dof.iter().zip(&variances).map(|(n, v)| n * v.ln()).sum::<f64>();
    let correction =
        1.0 + (dof.iter().map(|n| 1.0 / n).sum::<f64>() - 1.0 / total_dof) / (3.0 * (k - 1) as f64);
    // The statistic is non-negative in exact arithmetic.
    let statistic = (numerator / correction).max(0.0);
    let chi2 = ChiSquared::new((k - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(BartlettResult {
        statistic,
        p_value: chi2.sf(statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::Method;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn att(phi: Vec<f64>, method: Method) -> Attribution {
        Attribution {
            f_x: phi.iter().sum(),
            phi,
            phi0: 0.0,
            method,
            n_evals: 0,
            seed: None,
            std_err: None,
            horizon: 0,
        }
    }

    /// χ²₁ survival function via sf(x) = 2(1 − Φ(√x)), with Φ integrated
    /// by composite Simpson's rule.
    fn chi2_1_sf(x: f64) -> f64 {
        let z = x.sqrt();
        let n = 20_000;
        let h = z / n as f64;
        let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(0.0) + pdf(z);
        for i in 1..n {
            s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let central = s * h / 3.0;
        2.0 * (0.5 - central)
    }

    /// Direct transcription of the textbook statistic for two groups.
    fn bartlett_two(a: &[f64], b: &[f64]) -> f64 {
        let var = |g: &[f64]| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (g.len() as f64 - 1.0)
        };
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let n = na + nb;
        let sp = ((na - 1.0) * var(a) + (nb - 1.0) * var(b)) / (n - 2.0);
        let top = (n - 2.0) * sp.ln() - (na - 1.0) * var(a).ln() - (nb - 1.0) * var(b).ln();
        let c = 1.0 + (1.0 / (na - 1.0) + 1.0 / (nb - 1.0) - 1.0 / (n - 2.0)) / 3.0;
        top / c
    }

    fn normal(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn identical_attributions_have_zero_variability() {
        let a = att(vec![0.3, -0.2, 0.1], Method::Kernel);
        let v = variability(&[a.clone(), a.clone(), a]).unwrap();
        assert_eq!(v.per_feature_sd, vec![0.0; 3]);
        assert_eq!(v.mean, 0.0);
    }

    #[test]
    fn two_point_sd() {
        let a = att(vec![0.3, -0.2, 0.1], Method::Kernel);
        let mut b = a.clone();
        b.phi[1] += 1.0;
        let v = variability(&[a, b]).unwrap();
        assert_eq!(v.per_feature_sd[0], 0.0);
        assert!((v.per_feature_sd[1] - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(v.per_feature_sd[2], 0.0);
    }

    #[test]
    fn mixed_methods_and_singletons_are_rejected() {
        let a = att(vec![0.1], Method::Kernel);
        let b = att(vec![0.2], Method::Sampling);
        assert!(matches!(variability(&[a.clone(), b]), Err(Error::Grouping(_))));
        assert!(matches!(variability(&[a]), Err(Error::Sizing(_))));
    }

    #[test]
    fn variability_ignores_anomaly_order() {
        let atts: Vec<Attribution> = (0..6).map(|s| att(normal(8, 1.0, s), Method::Kernel)).collect();
        let mut reversed = atts.clone();
        reversed.reverse();
        let (a, b) = (variability(&atts).unwrap(), variability(&reversed).unwrap());
        for (x, y) in a.per_feature_sd.iter().zip(&b.per_feature_sd) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn absolute_magnitude() {
        let a = att(vec![1.0], Method::Kernel);
        let b = att(vec![-1.0], Method::Kernel);
        let signed = variability(&[a.clone(), b.clone()]).unwrap();
        let abs = variability_with(&[a, b], Magnitude::Absolute).unwrap();
        assert!(signed.mean > 1.0);
        assert_eq!(abs.mean, 0.0);
    }

    #[test]
    fn reduction_values() {
        assert!((reduction_pct(0.050, 0.028).unwrap() - 44.0).abs() < 1e-9);
        assert_eq!(reduction_pct(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(reduction_pct(0.3, 0.0).unwrap(), 100.0);
        assert!(reduction_pct(0.0, 0.1).is_err());
    }

    #[test]
    fn equal_groups() {
        let g = normal(30, 1.0, 1);
        let r = bartlett_test(&g, &g).unwrap();
        assert!(r.statistic <= 1e-9);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quadrupled_variance_is_detected() {
        let r = bartlett_test(&normal(50, 1.0, 2), &normal(50, 2.0, 3)).unwrap();
        assert!(r.p_value < 0.01, "{r:?}");
    }

    #[test]
    fn matches_reference_tail() {
        for seed in 0..20 {
            let a = normal(20 + seed as usize, 1.0, 100 + seed);
            let b = normal(25, 1.0 + 0.05 * seed as f64, 200 + seed);
            let r = bartlett_test(&a, &b).unwrap();
            let stat = bartlett_two(&a, &b);
            assert!((r.statistic - stat).abs() < 1e-10);
            assert!((r.p_value - chi2_1_sf(stat)).abs() < 1e-6);
        }
    }

    #[test]
    fn symmetric_in_groups() {
        let (a, b) = (normal(15, 1.0, 4), normal(22, 1.7, 5));
        assert_eq!(bartlett_test(&a, &b).unwrap(), bartlett_test(&b, &a).unwrap());
    }

    #[test]
    fn degenerate_group() {
        assert!(matches!(bartlett_test(&[1.0, 1.0], &[0.0, 2.0]), Err(Error::DegenerateVariance(_))));
        assert!(matches!(bartlett_test(&[1.0], &[0.0, 2.0]), Err(Error::Sizing(_))));
    }

    #[test]
    fn paper_scale_groups_are_significant() {
        // SD spreads of 0.110 vs 0.034 over 48 features.
        let r = bartlett_test(&normal(48, 0.110, 6), &normal(48, 0.034, 7)).unwrap();
        assert!(r.p_value < 0.05);
    }
}
