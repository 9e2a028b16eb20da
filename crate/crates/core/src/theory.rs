//! Analytical distribution of the time between threshold-triggered
//! transmissions.
//!
//! The position error after `i` predict-only steps is modeled as a zero-mean
//! bivariate Gaussian with the predicted position covariance `P_i`. Successive
//! exceedances of the threshold are treated as independent, which turns the
//! first passage into a product of per-step survival probabilities.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::motion::CtraConfig;
use crate::ukf::{ukf_predict, GaussianState, Mat6, MeasurementNoise, UkfParams, Vec6};

/// Inputs of the analytical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub e_thr_m: Vec<f64>,
    /// Prediction horizon in slots; defaults to the maximum period.
    pub steps: Option<usize>,
    /// State at the last transmission, `[x, y, h, u, a, ω]`.
    pub initial_mean: [f64; 6],
    /// Diagonal of the covariance at the last transmission.
    pub initial_cov_diag: [f64; 6],
    /// Inter-transmission log (`vehicle,intertx_s`) to compare against.
    pub empirical_log: Option<PathBuf>,
    /// Threshold used for the Q-Q comparison; defaults to the first one.
    pub qq_e_thr_m: Option<f64>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            e_thr_m: vec![1.94, 4.59, 8.29],
            steps: None,
            initial_mean: [0.0, 0.0, 0.0, 8.0, 0.0, 0.0],
            initial_cov_diag: MeasurementNoise::default().diag,
            empirical_log: None,
            qq_e_thr_m: None,
        }
    }
}

impl TheoryConfig {
    pub fn initial(&self) -> GaussianState {
        GaussianState::new(Vec6::from(self.initial_mean), Mat6::from_diagonal(&Vec6::from(self.initial_cov_diag)))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.e_thr_m.iter().chain(&self.qq_e_thr_m).any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(SimError::Config("theory thresholds must be finite and >= 0".into()));
        }
        if self.steps == Some(0) {
            return Err(SimError::Config("theory steps must be >= 1".into()));
        }
        if self.initial_cov_diag.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || self.initial_mean.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Config("theory initial state must be finite with a PSD covariance".into()));
        }
        Ok(())
    }
}

/// Position covariances after 1..n prediction steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSequence(pub Vec<Matrix2<f64>>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstPassagePmf {
    /// `p[k]` is the probability of the first exceedance at step `k + 1`.
    pub p: Vec<f64>,
    /// Probability of no exceedance within the sequence.
    pub residual: f64,
}

impl FirstPassagePmf {
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.p
            .iter()
            .map(|v| {
                acc += v;
                acc.min(1.0)
            })
            .collect()
    }

    /// Smallest step whose cumulative probability reaches `prob`, capped at
    /// the sequence length when the mass beyond it is needed.
    pub fn quantile(&self, prob: f64) -> usize {
        let mut acc = 0.0;
        for (k, v) in self.p.iter().enumerate() {
            acc += v;
            if acc >= prob - 1e-12 {
                return k + 1;
            }
        }
        self.p.len()
    }
}

const QUAD_TOL: f64 = 1e-10;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // Split first so that narrow features are not missed by the initial estimate.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (flo, fhi) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
            adaptive(f, lo, flo, hi, fhi, whole, m, fm, tol / pieces as f64, 40)
        })
        .sum()
}

/// Probability that a zero-mean Gaussian with covariance `p` falls outside
/// the disk of radius `e_thr`.
pub fn over_threshold_prob(p: &Matrix2<f64>, e_thr: f64) -> Result<f64, SimError> {
    if !(e_thr >= 0.0) || !e_thr.is_finite() {
        return Err(SimError::Config(format!("threshold must be finite and >= 0, got {e_thr}")));
    }
    let sym = 0.5 * (p + p.transpose());
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NotPsd(f64::NAN));
    }
    let eig = sym.symmetric_eigen();
    let (l1, l2) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    let scale = l1.abs().max(l2.abs()).max(f64::MIN_POSITIVE);
    let min_eig = l1.min(l2);
    if min_eig < -1e-12 * scale {
        return Err(SimError::NotPsd(min_eig));
    }
    if e_thr == 0.0 {
        return Ok(1.0);
    }
    let (l1, l2) = (l1.max(0.0), l2.max(0.0));
    if l1 == 0.0 && l2 == 0.0 {
        return Ok(0.0);
    }
    // In whitened coordinates the disk becomes an ellipse whose boundary
    // radius along angle θ is e / sqrt(l1 cos²θ + l2 sin²θ); the radial
    // standard-normal tail beyond radius R is exp(-R²/2).
    let e2 = e_thr * e_thr;
    let tail = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let denom = l1 * c * c + l2 * s * s;
        if denom <= 0.0 {
            0.0
        } else {
            (-0.5 * e2 / denom).exp()
        }
    };
    let quarter = integrate(&tail, 0.0, FRAC_PI_2, QUAD_TOL);
    Ok((4.0 * quarter / (2.0 * PI)).clamp(0.0, 1.0))
}

/// First-passage pmf under the independence approximation.
pub fn first_passage_pmf(seq: &CovSequence, e_thr: f64) -> Result<FirstPassagePmf, SimError> {
    if seq.0.is_empty() {
        return Err(SimError::Empty("covariance sequence"));
    }
    let mut survive = 1.0;
    let mut p = Vec::with_capacity(seq.0.len());
    for cov in &seq.0 {
        let q = over_threshold_prob(cov, e_thr)?;
        p.push(survive * q);
        survive *= 1.0 - q;
    }
    Ok(FirstPassagePmf {
        p,
        residual: survive.max(0.0),
    })
}

/// Position covariance blocks of `n` successive predict-only steps.
pub fn predict_only_cov(initial: &GaussianState, n: usize, cfg: &CtraConfig, p: &UkfParams) -> Result<CovSequence, SimError> {
    if n == 0 {
        return Err(SimError::Empty("prediction horizon"));
    }
    let mut g = initial.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        g = ukf_predict(&g, cfg, p)?;
        out.push(g.position_cov());
    }
    Ok(CovSequence(out))
}

/// Matched `(theoretical, empirical)` quantiles in seconds at the plotting
/// positions `(k - 0.5) / m` of the sorted empirical gaps (given in slots).
pub fn qq_points(theory: &FirstPassagePmf, empirical_slots: &[u64], slot_dt: f64) -> Result<Vec<(f64, f64)>, SimError> {
    if empirical_slots.is_empty() {
        return Err(SimError::Empty("empirical inter-transmission log"));
    }
    let mut sorted = empirical_slots.to_vec();
    sorted.sort_unstable();
    let m = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let prob = (k as f64 + 0.5) / m;
            (theory.quantile(prob) as f64 * slot_dt, e as f64 * slot_dt)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VehicleState;
    use crate::ukf::{Mat6, Vec6};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn iso(s2: f64) -> Matrix2<f64> {
        Matrix2::identity() * s2
    }

    #[test]
    fn rayleigh_closed_form() {
        assert_eq!(over_threshold_prob(&iso(1.0), 0.0).unwrap(), 1.0);
        let median = (2.0 * 2f64.ln()).sqrt();
        assert!((over_threshold_prob(&iso(1.0), median).unwrap() - 0.5).abs() < 1e-9);
        for (s2, e) in [(1.0f64, 5.0f64), (4.0, 1.0), (0.3, 0.7), (2.5, 3.3)] {
            let expected = (-e * e / (2.0 * s2)).exp();
            assert!((over_threshold_prob(&iso(s2), e).unwrap() - expected).abs() < 1e-9);
        }
        assert!((over_threshold_prob(&iso(1.0), 5.0).unwrap() - 3.726653e-6).abs() < 1e-11);
    }

    #[test]
    fn degenerate_covariances() {
        assert_eq!(over_threshold_prob(&Matrix2::zeros(), 1.0).unwrap(), 0.0);
        // Rank one: a 1-D normal with variance 1 leaves [-1, 1] with prob 2(1 - Φ(1)).
        let line = Matrix2::new(1.0, 0.0, 0.0, 0.0);
        assert!((over_threshold_prob(&line, 1.0).unwrap() - 0.317_310_507_862_914).abs() < 1e-8);
        assert!(matches!(over_threshold_prob(&Matrix2::new(1.0, 0.0, 0.0, -1.0), 1.0), Err(SimError::NotPsd(_))));
    }

    #[test]
    fn geometric_case() {
        let e = (2.0 * 2f64.ln()).sqrt();
        let pmf = first_passage_pmf(&CovSequence(vec![iso(1.0); 6]), e).unwrap();
        for (k, v) in pmf.p.iter().enumerate() {
            assert!((v - 0.5f64.powi(k as i32 + 1)).abs() < 1e-9);
        }
        assert!((pmf.p[1] - 0.25).abs() < 1e-9);
        assert!((pmf.residual - 0.5f64.powi(6)).abs() < 1e-9);
    }

    #[test]
    fn zero_threshold_fires_at_once() {
        let pmf = first_passage_pmf(&CovSequence(vec![iso(1.0), iso(2.0), iso(3.0)]), 0.0).unwrap();
        assert_eq!(pmf.p, vec![1.0, 0.0, 0.0]);
        assert_eq!(pmf.residual, 0.0);
        assert!(first_passage_pmf(&CovSequence(vec![]), 1.0).is_err());
    }

    fn growing_sequence() -> CovSequence {
        CovSequence(
            (1..=40)
                .map(|i| {
                    let t = i as f64;
                    Matrix2::new(0.2 + 0.05 * t, 0.01 * t, 0.01 * t, 0.1 + 0.02 * t * t / 10.0)
                })
                .collect(),
        )
    }

    #[test]
    fn first_passage_matches_independent_monte_carlo() {
        let seq = growing_sequence();
        let e = 1.5;
        let pmf = first_passage_pmf(&seq, e).unwrap();
        let chol: Vec<_> = seq.0.iter().map(|p| p.cholesky().unwrap().l()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples = 100_000;
        let mut hist = vec![0usize; seq.0.len() + 1];
        for _ in 0..samples {
            let mut at = seq.0.len();
            for (k, l) in chol.iter().enumerate() {
                let z = nalgebra::Vector2::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
                if (l * z).norm() > e {
                    at = k;
                    break;
                }
            }
            hist[at] += 1;
        }
        let cdf = pmf.cdf();
        let mut acc = 0usize;
        let mut gap: f64 = 0.0;
        for (k, c) in cdf.iter().enumerate() {
            acc += hist[k];
            gap = gap.max((acc as f64 / samples as f64 - c).abs());
        }
        assert!(gap <= 0.02, "gap {gap}");
    }

    #[test]
    fn predict_only_sequences() {
        let zero = UkfParams { q: 0.0, ..UkfParams::default() };
        let still = GaussianState::from_state(&VehicleState::at(1.0, 2.0), Mat6::zeros());
        let seq = predict_only_cov(&still, 5, &CtraConfig::default(), &zero).unwrap();
        assert!(seq.0.iter().all(|p| p.amax() < 1e-24));

        let p = UkfParams::default();
        let g = GaussianState::new(Vec6::from([0.0, 0.0, 0.4, 0.0, 0.0, 0.0]), Mat6::from_diagonal(&Vec6::from([1.0, 1.0, 0.1, 0.2, 0.1, 0.01])));
        let seq = predict_only_cov(&g, 30, &CtraConfig::default(), &p).unwrap();
        for w in seq.0.windows(2) {
            assert!(w[1].trace() > w[0].trace());
        }
        let one = predict_only_cov(&g, 1, &CtraConfig::default(), &p).unwrap();
        assert_eq!(one.0.len(), 1);
        assert_eq!(one.0[0], ukf_predict(&g, &CtraConfig::default(), &p).unwrap().position_cov());
        assert!(predict_only_cov(&g, 0, &CtraConfig::default(), &p).is_err());
    }

    #[test]
    fn qq_examples() {
        let theory = FirstPassagePmf { p: vec![0.5, 0.5], residual: 0.0 };
        assert_eq!(qq_points(&theory, &[2, 1], 0.1).unwrap(), vec![(0.1, 0.1), (0.2, 0.2)]);
        let point = FirstPassagePmf { p: vec![1.0, 0.0, 0.0], residual: 0.0 };
        let pts = qq_points(&point, &[1, 5, 9, 30], 0.1).unwrap();
        assert!(pts.iter().all(|&(t, _)| t == 0.1));
        assert_eq!(pts.iter().map(|p| p.1).collect::<Vec<_>>(), vec![0.1, 0.5, 0.9, 3.0]);
        // Quantiles beyond the modeled horizon are capped at its length.
        let short = FirstPassagePmf { p: vec![0.1, 0.1], residual: 0.8 };
        assert_eq!(qq_points(&short, &[4], 1.0).unwrap(), vec![(2.0, 4.0)]);
        assert!(qq_points(&short, &[], 1.0).is_err());
    }

    fn random_psd(a: f64, b: f64, angle: f64) -> Matrix2<f64> {
        let r = nalgebra::Rotation2::new(angle).into_inner();
        r * Matrix2::new(a, 0.0, 0.0, b) * r.transpose()
    }

    #[test]
    fn quadrature_agrees_with_disk_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let p = random_psd(rng.random_range(0.1..4.0), rng.random_range(0.01..2.0), rng.random_range(0.0..PI));
            let e = rng.random_range(0.3..3.0);
            let exact = over_threshold_prob(&p, e).unwrap();
            let l = p.cholesky().unwrap().l();
            let n = 1_000_000;
            let mut out = 0usize;
            for _ in 0..n {
                let z = nalgebra::Vector2::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
                out += ((l * z).norm() > e) as usize;
            }
            let est = out as f64 / n as f64;
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!((est - exact).abs() <= 3.0 * se + 1e-12, "{est} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn monotone_in_threshold_and_scale(
            a in 0.01f64..5.0, b in 0.01f64..5.0, angle in 0.0f64..PI,
            e in 0.0f64..6.0, de in 0.0f64..2.0, c in 1.0f64..4.0,
        ) {
            let p = random_psd(a, b, angle);
            let base = over_threshold_prob(&p, e).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            prop_assert!(over_threshold_prob(&p, e + de).unwrap() <= base + 1e-9);
            prop_assert!(over_threshold_prob(&(p * c), e).unwrap() >= base - 1e-9);
        }

        #[test]
        fn pmf_is_subprobability(a in 0.01f64..5.0, growth in 0.0f64..0.5, e in 0.0f64..5.0, n in 1usize..60) {
            let seq = CovSequence((0..n).map(|i| iso(a + growth * i as f64)).collect());
            let pmf = first_passage_pmf(&seq, e).unwrap();
            prop_assert!((pmf.p[0] - over_threshold_prob(&seq.0[0], e).unwrap()).abs() < 1e-15);
            let total: f64 = pmf.p.iter().sum();
            prop_assert!(total <= 1.0 + 1e-12);
            prop_assert!((total + pmf.residual - 1.0).abs() < 1e-9);
            prop_assert!(pmf.p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
