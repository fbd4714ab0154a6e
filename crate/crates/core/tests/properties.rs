use channel_thermo::capacity::{
    blahut_arimoto, blahut_arimoto_accelerated, muroga_capacity, muroga_terms, BlahutArimoto, DEFAULT_MAX_ITER,
};
use channel_thermo::channel::{
    entropy, joint_distribution, kl_divergence, mutual_information, output_distribution, row_entropies, ChannelMatrix,
    Distribution, Role,
};
use channel_thermo::mixing::{dirichlet_form, invariant_distribution, reversibilization, spectral_gap, variance};
use channel_thermo::thermo::{effective_state, factoring_work, inverse_state};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn normalize(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn law(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(normalize)
}

fn channel(n: usize) -> impl Strategy<Value = ChannelMatrix> {
    prop::collection::vec(law(n), n).prop_map(|rows| ChannelMatrix::new(&rows).unwrap())
}

fn sized<T: std::fmt::Debug>(f: impl Fn(usize) -> BoxedStrategy<T>) -> impl Strategy<Value = (usize, T)> {
    (2usize..=5).prop_flat_map(move |n| f(n).prop_map(move |x| (n, x)))
}

fn channel_and_law() -> impl Strategy<Value = (usize, (ChannelMatrix, Vec<f64>))> {
    sized(|n| (channel(n), law(n)).boxed())
}

fn input(p: &[f64]) -> Distribution {
    Distribution::new(p.to_vec(), Role::Input).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conditional_entropy_identity((_, (w, p)) in channel_and_law()) {
        let p = input(&p);
        let q = output_distribution(&w, &p).unwrap();
        let h = row_entropies(&w);
        let conditional: f64 = p.weights().iter().zip(&h).map(|(a, b)| a * b).sum();
        let i = mutual_information(&w, &p).unwrap();
        prop_assert!((i - (entropy(&q) - conditional)).abs() <= 1e-10);
    }

    #[test]
    fn mutual_information_is_divergence_from_product((n, (w, p)) in channel_and_law()) {
        let pd = input(&p);
        let q = output_distribution(&w, &pd).unwrap();
        let v = joint_distribution(&w, &pd).unwrap();
        let mut joint = Vec::new();
        let mut product = Vec::new();
        for j in 0..n {
            for k in 0..n {
                joint.push(v[(j, k)]);
                product.push(p[j] * q[k]);
            }
        }
        let d = kl_divergence(&joint, &product).unwrap();
        prop_assert!((mutual_information(&w, &pd).unwrap() - d).abs() <= 1e-10);
        prop_assert!((joint.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn divergence_is_nonnegative((p, q) in (2usize..=5).prop_flat_map(|n| (law(n), law(n)))) {
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);
        let distinct = p.iter().zip(&q).any(|(a, b)| (a - b).abs() >= 1e-12);
        prop_assert_eq!(d > 0.0, distinct);
    }

    #[test]
    fn output_law_is_normalized((_, (w, p)) in channel_and_law()) {
        let q = output_distribution(&w, &input(&p)).unwrap();
        let raw: f64 = (0..w.n()).map(|k| (0..w.n()).map(|j| p[j] * w.get(j, k)).sum::<f64>()).sum();
        prop_assert!((raw - 1.0).abs() <= 1e-12);
        prop_assert!((q.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ba_lower_bound_never_decreases((_, w) in sized(|n| channel(n).boxed())) {
        let lowers: Vec<f64> = BlahutArimoto::new(&w).take(100).map(|b| b.lower).collect();
        for pair in lowers.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-14);
        }
    }

    #[test]
    fn ba_bounds_bracket_each_other((_, w) in sized(|n| channel(n).boxed())) {
        for b in BlahutArimoto::new(&w).take(50) {
            prop_assert!(b.upper >= b.lower - 1e-14);
        }
    }

    #[test]
    fn muroga_agrees_with_ba(w in channel(3)) {
        let applicable = muroga_terms(&w).map(|t| t.d_positive()).unwrap_or(false);
        prop_assume!(applicable);
        let m = muroga_capacity(&w).unwrap();
        let ba = blahut_arimoto(&w, 1e-10, DEFAULT_MAX_ITER).unwrap();
        prop_assert!((m.capacity - ba.capacity).abs() <= 1e-8);
        let dp = m.p_star.weights().iter().zip(ba.p_star.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(dp <= 1e-5);
    }

    #[test]
    fn newton_finish_agrees_with_ba((_, w) in sized(|n| channel(n).boxed())) {
        let fast = blahut_arimoto_accelerated(&w, 1e-11, DEFAULT_MAX_ITER).unwrap();
        let slow = blahut_arimoto(&w, 1e-11, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(fast.gap < 1e-11);
        prop_assert!((fast.capacity - slow.capacity).abs() <= 2e-11);
    }

    #[test]
    fn zero_capacity_exactly_for_identical_rows((n, (w, q)) in channel_and_law()) {
        let product = ChannelMatrix::product_law(&Distribution::new(q, Role::Output).unwrap()).unwrap();
        prop_assert!(blahut_arimoto(&product, 1e-10, DEFAULT_MAX_ITER).unwrap().capacity <= 1e-10);
        prop_assume!(!w.rows_identical(1e-10));
        let c = blahut_arimoto_accelerated(&w, 1e-12, DEFAULT_MAX_ITER).unwrap().capacity;
        prop_assert!(c > 1e-10, "n = {}, C = {}", n, c);
    }

    #[test]
    fn dirichlet_identities((n, (w, f)) in sized(|n| (channel(n), prop::collection::vec(-5.0f64..5.0, n)).boxed())) {
        let pi = invariant_distribution(&w).unwrap();
        let parts = reversibilization(&w, &pi).unwrap();
        let p = pi.weights();
        let kernel = &parts.p_dagger * w.matrix();
        let form = dirichlet_form(&kernel, p, &f);
        let pf: Vec<f64> = (0..n).map(|j| (0..n).map(|k| w.get(j, k) * f[k]).sum()).collect();
        prop_assert!((-form - (variance(p, &pf) - variance(p, &f))).abs() <= 1e-10);
        for k in 0..n {
            let back: f64 = (0..n).map(|j| p[j] * kernel[(j, k)]).sum();
            prop_assert!((back - p[k]).abs() <= 1e-10);
        }
        let fv = DVector::from_column_slice(&f);
        prop_assert!((form + (fv.transpose() * &parts.s * &fv)[(0, 0)]).abs() <= 1e-10);
        // The gap bounds every Rayleigh quotient from below.
        let gap = spectral_gap(&w).unwrap();
        let var = variance(p, &f);
        prop_assume!(var > 1e-8);
        prop_assert!(gap.lambda_star <= form / var + 1e-9);
    }

    #[test]
    fn reversibilization_is_symmetric_and_stochastic((n, w) in sized(|n| channel(n).boxed())) {
        let pi = invariant_distribution(&w).unwrap();
        let parts = reversibilization(&w, &pi).unwrap();
        let kernel = &parts.p_dagger * w.matrix();
        for j in 0..n {
            prop_assert!((kernel.row(j).sum() - 1.0).abs() <= 1e-12);
            prop_assert!((parts.p_dagger.row(j).sum() - 1.0).abs() <= 1e-10);
            for k in 0..n {
                prop_assert!((parts.u[(j, k)] - parts.u[(k, j)]).abs() <= 1e-12);
            }
        }
        let spectrum = spectral_gap(&w).unwrap().spectrum_u;
        prop_assert!(spectrum.iter().all(|&x| x > -1e-12 && x < 1.0 + 1e-12));
    }

    #[test]
    fn thermo_round_trip((p, log_t) in (2usize..=6).prop_flat_map(|n| (law(n), -3.0f64..3.0))) {
        let t = log_t.exp();
        let s = effective_state(&input(&p), t).unwrap();
        let z: f64 = s.energies.iter().map(|e| (-s.beta * e).exp()).sum();
        for (e, pk) in s.energies.iter().zip(&p) {
            prop_assert!(((-s.beta * e).exp() / z - pk).abs() <= 1e-10);
        }
        prop_assert!((s.free_energy - (s.internal_energy - s.entropy / s.beta)).abs() <= 1e-10);
        prop_assert!(s.free_energy <= 0.0);
        let (p2, t2) = inverse_state(&s.energies, s.beta).unwrap();
        for (a, b) in p2.weights().iter().zip(&p) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        prop_assert!((t2 - t).abs() / t <= 1e-10);
    }

    #[test]
    fn norms_correspond(
        (p, q, t) in (2usize..=5).prop_flat_map(|n| (law(n), law(n), 0.1f64..10.0)),
    ) {
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Choose t' so that ‖t p‖ = ‖t' q‖.
        let t_prime = t * norm(&p) / norm(&q);
        let a = effective_state(&input(&p), t).unwrap();
        let b = effective_state(&input(&q), t_prime).unwrap();
        let dual = |s: &channel_thermo::ThermoState| (norm(&s.energies).powi(2) + s.beta.powi(-2)).sqrt();
        prop_assert!((dual(&a) - dual(&b)).abs() <= 1e-9 * dual(&a).max(1.0));
        // A different timescale breaks the equality.
        let c = effective_state(&input(&q), 2.0 * t_prime).unwrap();
        prop_assert!((dual(&a) - dual(&c)).abs() > 1e-9);
    }

    #[test]
    fn ford_identity(
        (w, p, beta, f) in (channel(3), law(3), 0.1f64..10.0, -5.0f64..5.0),
    ) {
        let r = factoring_work(&w, &input(&p), beta, f).unwrap();
        prop_assert!(r.residual <= 1e-10);
    }
}

#[test]
fn dirichlet_form_matches_quadratic_form_of_generator() {
    // Independent construction: E(f) = ½ Σ p_j K_jk (f_j − f_k)² with K = P†P built by hand.
    let w = ChannelMatrix::new(&[vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.25, 0.25, 0.5]]).unwrap();
    let pi = invariant_distribution(&w).unwrap();
    let p = pi.weights();
    let n = 3;
    let dagger = DMatrix::from_fn(n, n, |j, k| p[k] * w.get(k, j) / p[j]);
    let kernel = &dagger * w.matrix();
    let f = [1.0f64, -2.0, 0.5];
    let mut by_hand = 0.0;
    for j in 0..n {
        for k in 0..n {
            by_hand += 0.5 * p[j] * kernel[(j, k)] * (f[j] - f[k]).powi(2);
        }
    }
    assert!((dirichlet_form(&kernel, p, &f) - by_hand).abs() < 1e-14);
}
