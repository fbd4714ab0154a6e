//! Effective temperature of a stationary system.
//!
//! A nondegenerate distribution `p > 0` together with a timescale `t_∞`
//! determines energies `E` and an inverse temperature `β` through
//!
//! ```text
//! γ_k = mean_j(log p_j) − log p_k        (= β E_k)
//! β   = t_∞ ‖p‖₂ √(‖γ‖₂² + 1)
//! ```
//!
//! in units where ħ = 1. For a channel, `p` is the capacity-achieving input
//! law and `t_∞` is the L² mixing time of `W`.

use serde::Serialize;

use crate::capacity::{capacity, CapacityResult, MethodChoice, DEFAULT_MAX_ITER};
use crate::channel::{entropy, joint_distribution, mutual_information, ChannelMatrix, Distribution, Role};
use crate::error::{Error, Result};
use crate::mixing::spectral_gap;

pub const DEFAULT_SUPPORT_EPS: f64 = 1e-6;
/// Tolerance on the Ford identity residual.
pub const FORD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoState {
    /// `γ_k = β E_k`, centered.
    pub gamma: Vec<f64>,
    pub beta: f64,
    pub energies: Vec<f64>,
    pub log_z: f64,
    pub free_energy: f64,
    /// Shannon entropy of `p` in nats.
    pub entropy: f64,
    pub internal_energy: f64,
    pub t_inf: f64,
    pub p: Vec<f64>,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn centered_neg_log(p: &[f64]) -> Vec<f64> {
    let mean_log = p.iter().map(|x| x.ln()).sum::<f64>() / p.len() as f64;
    p.iter().map(|x| mean_log - x.ln()).collect()
}

/// `(p, t_∞) ↦ (E, β)` and the derived quantities.
pub fn effective_state(p: &Distribution, t_inf: f64) -> Result<ThermoState> {
    if let Some((index, &value)) = p.weights().iter().enumerate().find(|(_, &x)| x <= 0.0) {
        return Err(Error::DegenerateDistribution { index, value });
    }
    if !(t_inf > 0.0 && t_inf.is_finite()) {
        return Err(Error::InfiniteTimescale(t_inf));
    }
    let w = p.weights();
    let n = w.len() as f64;
    let gamma = centered_neg_log(w);
    let beta = t_inf * norm2(w) * (norm2(&gamma).powi(2) + 1.0).sqrt();
    let energies: Vec<f64> = gamma.iter().map(|g| g / beta).collect();
    let log_z = -w.iter().map(|x| x.ln()).sum::<f64>() / n;
    let internal_energy = w.iter().zip(&energies).map(|(p, e)| p * e).sum();
    Ok(ThermoState {
        beta,
        log_z,
        free_energy: -log_z / beta,
        entropy: entropy(p),
        internal_energy,
        t_inf,
        p: w.to_vec(),
        gamma,
        energies,
    })
}

/// `(E, β) ↦ (p, t_∞)`: Gibbs weights, then the timescale that reproduces `β`.
pub fn inverse_state(energies: &[f64], beta: f64) -> Result<(Distribution, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::NonPositiveBeta(beta));
    }
    if energies.is_empty() {
        return Err(Error::InvalidArgument("empty energy vector".into()));
    }
    let shift = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-beta * (e - shift)).exp()).collect();
    let p = Distribution::normalized(weights, Role::Input)?;
    let gamma = centered_neg_log(p.weights());
    let t_inf = beta / (norm2(p.weights()) * (norm2(&gamma).powi(2) + 1.0).sqrt());
    Ok((p, t_inf))
}

/// Thermodynamic summary of a channel: capacity-achieving law plus mixing time.
#[derive(Debug, Clone, PartialEq)]
pub struct DmcThermo {
    pub capacity: CapacityResult,
    pub t_mix: f64,
    /// `+∞` in the degenerate case.
    pub beta_mix: f64,
    /// Zero in the degenerate case.
    pub f_mix: f64,
    /// Entropy of `p_star`.
    pub entropy: f64,
    /// Some capacity-achieving mass is below `support_eps`.
    pub degenerate: bool,
    /// Full state; `None` when degenerate.
    pub state: Option<ThermoState>,
}

impl DmcThermo {
    pub fn beta_inv_mix(&self) -> f64 {
        1.0 / self.beta_mix
    }
}

pub fn dmc_thermo(w: &ChannelMatrix, ba_tol: f64, support_eps: f64) -> Result<DmcThermo> {
    let capacity = capacity(w, MethodChoice::Auto, ba_tol, DEFAULT_MAX_ITER)?;
    let mixing = spectral_gap(w)?;
    let p_star = &capacity.p_star;
    let entropy = entropy(p_star);
    if p_star.min() < support_eps {
        // Limits as some p_j ↓ 0: β⁻¹ ↓ 0 and F ↑ 0.
        return Ok(DmcThermo {
            capacity,
            t_mix: mixing.t_mix,
            beta_mix: f64::INFINITY,
            f_mix: 0.0,
            entropy,
            degenerate: true,
            state: None,
        });
    }
    let state = effective_state(p_star, mixing.t_mix)?;
    Ok(DmcThermo {
        t_mix: mixing.t_mix,
        beta_mix: state.beta,
        f_mix: state.free_energy,
        entropy,
        degenerate: false,
        state: Some(state),
        capacity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactoringWork {
    pub delta_w: f64,
    pub mutual_information: f64,
    /// `|I + β(F + ΔW)|`.
    pub residual: f64,
}

/// Work of factoring the joint law `V = p_j W_jk` into its marginals, for a
/// free choice of `β` and `F`.
pub fn factoring_work(w: &ChannelMatrix, p: &Distribution, beta: f64, free_energy: f64) -> Result<FactoringWork> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::NonPositiveBeta(beta));
    }
    let v = joint_distribution(w, p)?;
    let n = w.n();
    let row: Vec<f64> = (0..n).map(|j| v.row(j).sum()).collect();
    let col: Vec<f64> = (0..n).map(|k| v.column(k).sum()).collect();
    let energy = |mass: f64| free_energy - mass.ln() / beta;
    let mut delta_w = 0.0;
    for j in 0..n {
        for k in 0..n {
            let vjk = v[(j, k)];
            if vjk > 0.0 {
                delta_w += vjk * (energy(vjk) - (energy(row[j]) + energy(col[k])));
            }
        }
    }
    let mutual_information = mutual_information(w, p)?;
    let residual = (mutual_information + beta * (free_energy + delta_w)).abs();
    if residual > FORD_TOL {
        return Err(Error::IdentityViolation { what: "I(X;Y) = -beta (F + dW)", residual });
    }
    Ok(FactoringWork { delta_w, mutual_information, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::validate_channel;
    use std::f64::consts::{LN_2, SQRT_2};

    fn dist(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec(), Role::Input).unwrap()
    }

    #[test]
    fn uniform_binary_state() {
        let s = effective_state(&dist(&[0.5, 0.5]), 1.0).unwrap();
        assert_eq!(s.gamma, vec![0.0, 0.0]);
        assert!((s.beta - 1.0 / SQRT_2).abs() < 1e-15);
        assert_eq!(s.energies, vec![0.0, 0.0]);
        assert!((s.log_z - LN_2).abs() < 1e-15);
        assert!((s.free_energy + SQRT_2 * LN_2).abs() < 1e-15);
        assert!((s.free_energy + 0.98026).abs() < 1e-5);
    }

    #[test]
    fn doubling_timescale_doubles_beta() {
        let p = dist(&[0.2, 0.3, 0.5]);
        let a = effective_state(&p, 1.5).unwrap();
        let b = effective_state(&p, 3.0).unwrap();
        assert!((b.beta - 2.0 * a.beta).abs() < 1e-14);
        for (ea, eb) in a.energies.iter().zip(&b.energies) {
            assert!((eb - ea / 2.0).abs() < 1e-15);
        }
        assert_eq!(a.gamma, b.gamma);
        assert_eq!(a.log_z, b.log_z);
    }

    #[test]
    fn skewed_binary_state_by_hand() {
        let s = effective_state(&dist(&[0.1, 0.9]), 1.0).unwrap();
        let (l1, l9) = (0.1f64.ln(), 0.9f64.ln());
        let g = [(l1 + l9) / 2.0 - l1, (l1 + l9) / 2.0 - l9];
        let beta = (0.01f64 + 0.81).sqrt() * (g[0] * g[0] + g[1] * g[1] + 1.0).sqrt();
        assert!((s.beta - beta).abs() < 1e-14);
        assert!((s.free_energy - (l1 + l9) / 2.0 / beta).abs() < 1e-14);
        let (p, t) = inverse_state(&s.energies, s.beta).unwrap();
        assert!((p[0] - 0.1).abs() < 1e-14 && (t - 1.0).abs() < 1e-14);
    }

    #[test]
    fn effective_state_errors() {
        assert!(matches!(
            effective_state(&dist(&[0.0, 1.0]), 1.0),
            Err(Error::DegenerateDistribution { index: 0, .. })
        ));
        assert!(matches!(
            effective_state(&dist(&[0.5, 0.5]), f64::INFINITY),
            Err(Error::InfiniteTimescale(_))
        ));
        assert!(matches!(inverse_state(&[0.0, 1.0], 0.0), Err(Error::NonPositiveBeta(_))));
    }

    #[test]
    fn inverse_state_examples() {
        let (p, t) = inverse_state(&[0.0, 0.0], 1.0 / SQRT_2).unwrap();
        assert_eq!(p.weights(), &[0.5, 0.5]);
        assert!((t - 1.0).abs() < 1e-15);

        let e = [0.4, -0.1, -0.3];
        let (p1, t1) = inverse_state(&e, 1.3).unwrap();
        let half: Vec<f64> = e.iter().map(|x| x / 2.0).collect();
        let (p2, t2) = inverse_state(&half, 2.6).unwrap();
        for k in 0..3 {
            assert!((p1[k] - p2[k]).abs() < 1e-15);
        }
        assert!((t2 - 2.0 * t1).abs() < 1e-14);
    }

    #[test]
    fn dmc_thermo_bsc() {
        let w = ChannelMatrix::binary_symmetric(0.1).unwrap();
        let t = dmc_thermo(&w, 1e-12, DEFAULT_SUPPORT_EPS).unwrap();
        assert!(!t.degenerate);
        assert!((t.capacity.p_star[0] - 0.5).abs() < 1e-12);
        assert!(t.f_mix < 0.0 && t.t_mix > 1.0);
        let state = t.state.unwrap();
        assert_eq!(state.t_inf, t.t_mix);
    }

    #[test]
    fn dmc_thermo_product_law() {
        let w = validate_channel(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let t = dmc_thermo(&w, 1e-12, DEFAULT_SUPPORT_EPS).unwrap();
        assert_eq!(t.capacity.capacity, 0.0);
        assert!((t.t_mix - 1.0).abs() < 1e-12);
        assert_eq!(t.capacity.p_star.weights(), &[0.5, 0.5]);
        assert!((t.f_mix + SQRT_2 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn dmc_thermo_degenerate_support() {
        let w = validate_channel(&[
            vec![0.9, 0.05, 0.05],
            vec![0.05, 0.9, 0.05],
            vec![0.4, 0.4, 0.2],
        ])
        .unwrap();
        let t = dmc_thermo(&w, 1e-12, DEFAULT_SUPPORT_EPS).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.f_mix, 0.0);
        assert!(t.beta_mix.is_infinite() && t.beta_inv_mix() == 0.0);
        assert!(t.state.is_none());
    }

    #[test]
    fn factoring_work_examples() {
        let q = dist(&[0.4, 0.6]);
        let w = ChannelMatrix::product_law(&q).unwrap();
        let fw = factoring_work(&w, &dist(&[0.3, 0.7]), 2.0, -0.7).unwrap();
        assert!((fw.delta_w - 0.7).abs() < 1e-14);

        let id = ChannelMatrix::identity(3).unwrap();
        let fw = factoring_work(&id, &Distribution::uniform(3, Role::Input), 1.0, 0.0).unwrap();
        assert!((fw.mutual_information - 3f64.ln()).abs() < 1e-14);
        assert!((fw.delta_w + 3f64.ln()).abs() < 1e-14);

        assert!(matches!(
            factoring_work(&id, &Distribution::uniform(3, Role::Input), -1.0, 0.0),
            Err(Error::NonPositiveBeta(_))
        ));
    }
}
