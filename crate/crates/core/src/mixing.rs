//! L² mixing time of a row-stochastic matrix.
//!
//! With `p` the invariant law and `P†_jk = p_k P_kj / p_j` the time reversal,
//! the multiplicative reversibilization `P†P` is `p`-reversible. Its Dirichlet
//! form `E(f) = −fᵀSf` with `S = diag(p)(P†P − I)` gives the symmetric operator
//! `U = −diag(p)^{-1/2} S diag(p)^{-1/2}`, whose smallest nonzero eigenvalue is
//! the spectral gap `λ*`. The mixing time is `t_mix = 1/λ*`.
//!
//! A DMC is analyzed with the invariant law of `W` itself, not with its
//! capacity-achieving input law.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::Serialize;

use crate::channel::{ChannelMatrix, Distribution, Role};
use crate::error::{Error, Result};
use crate::linalg;

/// Singular values of `Pᵀ − I` at or below this count as null directions.
pub const NULL_TOL: f64 = 1e-8;
/// Eigenvalues of `U` with magnitude at or below this are treated as zero.
pub const ZERO_EIGEN_TOL: f64 = 1e-10;
/// Invariant masses at or below this are treated as zero.
pub const ZERO_MASS: f64 = 1e-12;
/// Maximum `‖pP − p‖∞` accepted for a supplied invariant law.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Maximum `‖S − Sᵀ‖_max` accepted before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MixingResult {
    pub lambda_star: f64,
    /// `1/λ*`, or `f64::INFINITY` when `U` has no nonzero eigenvalue.
    pub t_mix: f64,
    /// Eigenvalues of `U`, ascending.
    pub spectrum_u: Vec<f64>,
    pub invariant: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversibilizationParts {
    pub p_dagger: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub u: DMatrix<f64>,
}

/// Unique invariant law of `P`, from the null space of `Pᵀ − I`.
pub fn invariant_distribution(p: &ChannelMatrix) -> Result<Distribution> {
    let n = p.n();
    let a = p.matrix().transpose() - DMatrix::identity(n, n);
    let null = linalg::null_space(&a, NULL_TOL);
    let v = match null.as_slice() {
        [] => return Err(Error::InvariantNotFound),
        [v] => v,
        many => return Err(Error::NonUniqueInvariant { multiplicity: many.len() }),
    };
    let total = v.sum();
    if total.abs() < 1e-12 {
        return Err(Error::InvariantNotFound);
    }
    let mut weights: Vec<f64> = v.iter().map(|x| x / total).collect();
    if weights.iter().any(|&x| x < -1e-10) {
        return Err(Error::InvariantNotFound);
    }
    weights.iter_mut().for_each(|x| *x = x.max(0.0));
    Distribution::normalized(weights, Role::Invariant)
}

fn check_invariant(p: &ChannelMatrix, pi: &Distribution) -> Result<()> {
    let n = p.n();
    if pi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pi.len() });
    }
    if let Some(index) = pi.weights().iter().position(|&x| x <= ZERO_MASS) {
        return Err(Error::ZeroInvariantMass { index });
    }
    let residual = (0..n)
        .map(|k| ((0..n).map(|j| pi[j] * p.get(j, k)).sum::<f64>() - pi[k]).abs())
        .fold(0.0, f64::max);
    if residual > INVARIANCE_TOL {
        return Err(Error::NotInvariant { residual });
    }
    Ok(())
}

/// `P†_jk = p_k P_kj / p_j`.
pub fn time_reversal(p: &ChannelMatrix, pi: &Distribution) -> Result<DMatrix<f64>> {
    check_invariant(p, pi)?;
    let n = p.n();
    Ok(DMatrix::from_fn(n, n, |j, k| pi[k] * p.get(k, j) / pi[j]))
}

pub fn reversibilization(p: &ChannelMatrix, pi: &Distribution) -> Result<ReversibilizationParts> {
    let p_dagger = time_reversal(p, pi)?;
    let n = p.n();
    let weights = DVector::from_column_slice(pi.weights());
    let kernel = &p_dagger * p.matrix();
    let s = DMatrix::from_diagonal(&weights) * (kernel - DMatrix::identity(n, n));
    let asymmetry = (&s - s.transpose()).amax();
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::AsymmetricReversibilization { asymmetry });
    }
    let t = (&s + s.transpose()) * 0.5;
    let inv_sqrt = DMatrix::from_diagonal(&weights.map(|x| 1.0 / x.sqrt()));
    let u = -(&inv_sqrt * &t * &inv_sqrt);
    let u = (&u + u.transpose()) * 0.5;
    Ok(ReversibilizationParts { p_dagger, s, t, u })
}

/// Spectral gap and L² mixing time of `P` under its own invariant law.
pub fn spectral_gap(p: &ChannelMatrix) -> Result<MixingResult> {
    let invariant = invariant_distribution(p)?;
    spectral_gap_with(p, invariant)
}

/// As [`spectral_gap`], with a caller-supplied invariant law.
pub fn spectral_gap_with(p: &ChannelMatrix, invariant: Distribution) -> Result<MixingResult> {
    let parts = reversibilization(p, &invariant)?;
    let (spectrum_u, _) = linalg::symmetric_eigen(&parts.u);
    let lambda_star = spectrum_u
        .iter()
        .copied()
        .filter(|x| x.abs() > ZERO_EIGEN_TOL)
        .fold(f64::INFINITY, f64::min);
    let (lambda_star, t_mix) = if lambda_star.is_finite() {
        (lambda_star, 1.0 / lambda_star)
    } else {
        (0.0, f64::INFINITY)
    };
    Ok(MixingResult { lambda_star, t_mix, spectrum_u, invariant })
}

/// `Var_p(f)`.
pub fn variance(pi: &[f64], f: &[f64]) -> f64 {
    let mean: f64 = pi.iter().zip(f).map(|(p, x)| p * x).sum();
    pi.iter().zip(f).map(|(p, x)| p * (x - mean) * (x - mean)).sum()
}

/// `E_K(f) = ½ Σ_jk p_j K_jk (f_j − f_k)²`.
pub fn dirichlet_form(kernel: &DMatrix<f64>, pi: &[f64], f: &[f64]) -> f64 {
    let n = pi.len();
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            let diff = f[j] - f[k];
            total += pi[j] * kernel[(j, k)] * diff * diff;
        }
    }
    0.5 * total
}

/// `E_{P†P}(f) / Var_p(f)`.
pub fn rayleigh_quotient(p: &ChannelMatrix, parts: &ReversibilizationParts, pi: &[f64], f: &[f64]) -> f64 {
    let kernel = &parts.p_dagger * p.matrix();
    dirichlet_form(&kernel, pi, f) / variance(pi, f)
}

/// Smallest of `n_samples` random Rayleigh quotients; bounded below by `λ*`.
pub fn variational_gap_samples(p: &ChannelMatrix, n_samples: usize, seed: u64) -> Result<f64> {
    let invariant = invariant_distribution(p)?;
    let parts = reversibilization(p, &invariant)?;
    let pi = invariant.weights();
    let kernel = &parts.p_dagger * p.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n();
    let mut best = f64::INFINITY;
    let mut drawn = 0;
    while drawn < n_samples {
        let f: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let var = variance(pi, &f);
        if var <= 1e-300 {
            continue;
        }
        best = best.min(dirichlet_form(&kernel, pi, &f) / var);
        drawn += 1;
    }
    Ok(best)
}

/// The test function attaining `λ*`: the `U` eigenvector mapped back by `diag(p)^{-1/2}`.
pub fn gap_minimizer(p: &ChannelMatrix) -> Result<(f64, Vec<f64>)> {
    let invariant = invariant_distribution(p)?;
    let parts = reversibilization(p, &invariant)?;
    let (values, vectors) = linalg::symmetric_eigen(&parts.u);
    let index = values
        .iter()
        .position(|x| x.abs() > ZERO_EIGEN_TOL)
        .ok_or(Error::InvalidArgument("U has no nonzero eigenvalue".into()))?;
    let f = (0..p.n())
        .map(|j| vectors[(j, index)] / invariant[j].sqrt())
        .collect();
    Ok((values[index], f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::validate_channel;

    fn cycle3() -> ChannelMatrix {
        validate_channel(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap()
    }

    fn biodmc(a: f64, b: f64) -> ChannelMatrix {
        validate_channel(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap()
    }

    #[test]
    fn invariant_examples() {
        let w = validate_channel(&[vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let pi = invariant_distribution(&w).unwrap();
        assert!((pi[0] - 0.2).abs() < 1e-14 && (pi[1] - 0.8).abs() < 1e-14);
        assert_eq!(pi.role(), Role::Invariant);

        let (a, b) = (0.3, 0.1);
        let pi = invariant_distribution(&biodmc(a, b)).unwrap();
        assert!((pi[0] - b / (a + b)).abs() < 1e-14);
        assert!((pi[1] - a / (a + b)).abs() < 1e-14);

        assert!(matches!(
            invariant_distribution(&ChannelMatrix::identity(3).unwrap()),
            Err(Error::NonUniqueInvariant { multiplicity: 3 })
        ));
    }

    #[test]
    fn time_reversal_examples() {
        let sym = validate_channel(&[vec![0.6, 0.3, 0.1], vec![0.3, 0.5, 0.2], vec![0.1, 0.2, 0.7]]).unwrap();
        let pi = Distribution::uniform(3, Role::Invariant);
        let rev = time_reversal(&sym, &pi).unwrap();
        assert!((rev - sym.matrix()).amax() < 1e-15);

        let q = Distribution::new(vec![0.2, 0.3, 0.5], Role::Invariant).unwrap();
        let w = ChannelMatrix::product_law(&q).unwrap();
        let rev = time_reversal(&w, &q).unwrap();
        assert!((rev - w.matrix()).amax() < 1e-15);

        let c = cycle3();
        let rev = time_reversal(&c, &Distribution::uniform(3, Role::Invariant)).unwrap();
        assert_eq!(rev, c.matrix().transpose());
        assert!((&rev * c.matrix() - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn time_reversal_errors() {
        let w = biodmc(0.3, 0.1);
        let zero = Distribution::new(vec![1.0, 0.0], Role::Invariant).unwrap();
        assert!(matches!(time_reversal(&w, &zero), Err(Error::ZeroInvariantMass { index: 1 })));
        let off = Distribution::new(vec![0.5, 0.5], Role::Invariant).unwrap();
        assert!(matches!(time_reversal(&w, &off), Err(Error::NotInvariant { .. })));
    }

    #[test]
    fn reversibilization_of_product_law() {
        let q = Distribution::new(vec![0.1, 0.25, 0.65], Role::Invariant).unwrap();
        let w = ChannelMatrix::product_law(&q).unwrap();
        let parts = reversibilization(&w, &q).unwrap();
        let root = DVector::from_iterator(3, q.weights().iter().map(|x| x.sqrt()));
        let expected = DMatrix::identity(3, 3) - &root * root.transpose();
        assert!((&parts.u - expected).amax() < 1e-14);
        let s_expected = DMatrix::from_fn(3, 3, |j, k| q[j] * q[k] - if j == k { q[j] } else { 0.0 });
        assert!((&parts.s - s_expected).amax() < 1e-15);
    }

    #[test]
    fn reversibilization_vanishes_for_deterministic_chains() {
        let uniform = Distribution::uniform(2, Role::Invariant);
        let parts = reversibilization(&ChannelMatrix::identity(2).unwrap(), &uniform).unwrap();
        assert_eq!(parts.s.amax(), 0.0);
        assert_eq!(parts.u.amax(), 0.0);
        let parts = reversibilization(&cycle3(), &Distribution::uniform(3, Role::Invariant)).unwrap();
        assert!(parts.s.amax() < 1e-15 && parts.u.amax() < 1e-15);
    }

    #[test]
    fn spectral_gap_examples() {
        for q in [vec![0.2, 0.8], vec![0.1, 0.2, 0.3, 0.4]] {
            let q = Distribution::new(q, Role::Invariant).unwrap();
            let r = spectral_gap(&ChannelMatrix::product_law(&q).unwrap()).unwrap();
            assert!((r.lambda_star - 1.0).abs() < 1e-12 && (r.t_mix - 1.0).abs() < 1e-12);
        }
        let r = spectral_gap(&cycle3()).unwrap();
        assert!(r.t_mix.is_infinite() && r.lambda_star == 0.0);
    }

    #[test]
    fn spectral_gap_biodmc_matches_closed_form() {
        // For a 2-state chain U has eigenvalues {0, 1 − det(W)²}: P†P − I acts on
        // mean-zero functions as multiplication by det(W)² − 1.
        let (a, b) = (0.3, 0.3);
        let r = spectral_gap(&biodmc(a, b)).unwrap();
        let det = 1.0 - a - b;
        assert!((r.lambda_star - (1.0 - det * det)).abs() < 1e-14);
        assert!(r.t_mix.is_finite() && r.t_mix >= 1.0);
        assert!(r.spectrum_u.iter().all(|&x| x >= -1e-10));
    }

    #[test]
    fn spectral_gap_rejects_transient_states() {
        let w = validate_channel(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(spectral_gap(&w), Err(Error::ZeroInvariantMass { index: 1 })));
    }

    #[test]
    fn variational_samples_examples() {
        let q = Distribution::new(vec![0.3, 0.7], Role::Invariant).unwrap();
        let w = ChannelMatrix::product_law(&q).unwrap();
        let v = variational_gap_samples(&w, 50, 0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let v = variational_gap_samples(&cycle3(), 50, 0).unwrap();
        assert!(v.abs() < 1e-14);

        let w = validate_channel(&[vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.3, 0.3, 0.4]]).unwrap();
        let gap = spectral_gap(&w).unwrap();
        let (value, f) = gap_minimizer(&w).unwrap();
        let pi = invariant_distribution(&w).unwrap();
        let parts = reversibilization(&w, &pi).unwrap();
        assert!((rayleigh_quotient(&w, &parts, pi.weights(), &f) - gap.lambda_star).abs() < 1e-9);
        assert_eq!(value, gap.lambda_star);
        assert!(gap.lambda_star <= variational_gap_samples(&w, 1000, 7).unwrap() + 1e-9);
    }
}
