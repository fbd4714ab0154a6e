//! Seeded property suites over every module.
//!
//! Each check draws its own random stream from `(seed, check name)`, so a
//! check's outcome does not depend on which other checks ran before it.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};
use serde::Serialize;

use crate::capacity::{
    blahut_arimoto, capacity_gradient, fd_capacity_gradient, good_channel_expansion_check, muroga_capacity, muroga_terms,
    BlahutArimoto, DEFAULT_BA_TOL, DEFAULT_MAX_ITER, SUPPORT_THRESHOLD,
};
use crate::channel::{
    entropy, joint_distribution, kl_divergence, mutual_information, output_distribution, row_entropies, ChannelMatrix,
    Distribution, Role,
};
use crate::error::{Error, Result};
use crate::landscape::analysis::{
    corner_basin_diagnostics, diagonal_argmin_check, log_partition_check, near_argmin_psi_check, DEFAULT_NEAR_ZERO_RATIO,
    DEFAULT_PREMISE_TOL, DEFAULT_TIE_TOL,
};
use crate::landscape::{sweep, ChannelFamily, FamilyKind, SweepConfig};
use crate::mixing::{dirichlet_form, invariant_distribution, reversibilization, spectral_gap, variance, variational_gap_samples};
use crate::thermo::{dmc_thermo, effective_state, factoring_work, inverse_state, DEFAULT_SUPPORT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Core,
    Capacity,
    Mixing,
    Thermo,
    Landscape,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 5] = [Self::Core, Self::Capacity, Self::Mixing, Self::Thermo, Self::Landscape];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Self::Core),
            "capacity" => Ok(Self::Capacity),
            "mixing" => Ok(Self::Mixing),
            "thermo" => Ok(Self::Thermo),
            "landscape" => Ok(Self::Landscape),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite {other:?}; expected core, capacity, mixing, thermo, landscape or all"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Core => "core",
            Self::Capacity => "capacity",
            Self::Mixing => "mixing",
            Self::Thermo => "thermo",
            Self::Landscape => "landscape",
            Self::All => "all",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// Outcome of one property: the worst observed value must satisfy
/// `worst <relation> limit`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub suite: Suite,
    pub name: String,
    pub samples: usize,
    pub worst: f64,
    pub relation: Relation,
    pub limit: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Wall-clock time; kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<PropertyCheck>,
}

struct Check {
    suite: Suite,
    name: &'static str,
    relation: Relation,
    limit: f64,
    samples: usize,
    worst: f64,
    detail: Option<String>,
    failure: Option<String>,
    start: Instant,
}

impl Check {
    fn new(suite: Suite, name: &'static str, relation: Relation, limit: f64) -> Self {
        let worst = match relation {
            Relation::AtMost => f64::NEG_INFINITY,
            Relation::AtLeast => f64::INFINITY,
        };
        Self { suite, name, relation, limit, samples: 0, worst, detail: None, failure: None, start: Instant::now() }
    }

    fn at_most(suite: Suite, name: &'static str, limit: f64) -> Self {
        Self::new(suite, name, Relation::AtMost, limit)
    }

    fn at_least(suite: Suite, name: &'static str, limit: f64) -> Self {
        Self::new(suite, name, Relation::AtLeast, limit)
    }

    fn observe(&mut self, value: f64) {
        self.samples += 1;
        self.worst = match self.relation {
            // NaN must surface as a failure, so it wins both comparisons.
            Relation::AtMost if value.is_nan() || value > self.worst => value,
            Relation::AtLeast if value.is_nan() || value < self.worst => value,
            _ => self.worst,
        };
    }

    fn fail(&mut self, error: impl fmt::Display) {
        if self.failure.is_none() {
            self.failure = Some(error.to_string());
        }
    }

    fn record<T>(&mut self, outcome: Result<T>) -> Option<T> {
        outcome.map_err(|e| self.fail(e)).ok()
    }

    fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    fn finish(self) -> PropertyCheck {
        let satisfied = match self.relation {
            Relation::AtMost => self.worst <= self.limit,
            Relation::AtLeast => self.worst >= self.limit,
        };
        let pass = satisfied && self.failure.is_none() && self.samples > 0;
        let detail = match (self.failure, self.detail) {
            (Some(f), Some(d)) => Some(format!("{d}; error: {f}")),
            (Some(f), None) => Some(format!("error: {f}")),
            (None, d) => d,
        };
        PropertyCheck {
            suite: self.suite,
            name: self.name.to_string(),
            samples: self.samples,
            worst: self.worst,
            relation: self.relation,
            limit: self.limit,
            pass,
            detail,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// Random stream for one named check. The name is folded in with FNV-1a,
/// which unlike the std hasher is stable across toolchains.
pub fn check_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let hash = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ hash)
}

/// Uniform draw from the probability simplex (flat Dirichlet).
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Channel with independent uniform-simplex rows.
pub fn random_channel<R: Rng>(rng: &mut R, n: usize) -> ChannelMatrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(rng, n)).collect();
    ChannelMatrix::new(&rows).expect("simplex rows form a channel")
}

/// `W = 1q`: every row equal to one random law.
pub fn random_product_law<R: Rng>(rng: &mut R, n: usize) -> ChannelMatrix {
    let q = Distribution::new(random_distribution(rng, n), Role::Output).expect("simplex draw is a distribution");
    ChannelMatrix::product_law(&q).expect("product law is a channel")
}

/// Generator with `U(0, 1)` off-diagonal rates and zero row sums.
pub fn random_generator<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::from_fn(n, n, |j, k| if j == k { 0.0 } else { rng.random::<f64>() });
    for j in 0..n {
        q[(j, j)] = -q.row(j).sum();
    }
    q
}

fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn input(weights: Vec<f64>) -> Distribution {
    Distribution::new(weights, Role::Input).expect("simplex draw is a distribution")
}

// ---------------------------------------------------------------------------
// core

fn core_checks(seed: u64) -> Vec<PropertyCheck> {
    let suite = Suite::Core;
    let mut rng = check_rng(seed, "core");
    let mut conditional = Check::at_most(suite, "mutual information = H(q) - sum_j p_j H_j", 1e-10);
    let mut joint = Check::at_most(suite, "mutual information = D(V || p x q)", 1e-10);
    let mut normalization = Check::at_most(suite, "output law sums to 1", 1e-12);
    for i in 0..1000 {
        let n = 2 + i % 4;
        let w = random_channel(&mut rng, n);
        let p = input(random_distribution(&mut rng, n));
        let Some(i_wp) = conditional.record(mutual_information(&w, &p)) else { continue };
        let Some(q) = conditional.record(output_distribution(&w, &p)) else { continue };
        let h = row_entropies(&w);
        let conditional_entropy: f64 = p.weights().iter().zip(&h).map(|(a, b)| a * b).sum();
        conditional.observe((i_wp - (entropy(&q) - conditional_entropy)).abs());

        let v = joint.record(joint_distribution(&w, &p)).unwrap_or_else(|| DMatrix::zeros(n, n));
        let flat: Vec<f64> = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| v[(j, k)]).collect();
        let product: Vec<f64> = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| p[j] * q[k]).collect();
        if let Some(d) = joint.record(kl_divergence(&flat, &product)) {
            joint.observe((i_wp - d).abs());
        }
        let raw_sum: f64 = (0..n).map(|k| (0..n).map(|j| p[j] * w.get(j, k)).sum::<f64>()).sum();
        normalization.observe((raw_sum - 1.0).abs());
    }

    let mut nonnegative = Check::at_least(suite, "relative entropy of distinct laws is positive", 0.0);
    let mut self_divergence = Check::at_most(suite, "relative entropy of a law with itself", 1e-12);
    for i in 0..1000 {
        let n = 2 + i % 4;
        let p = random_distribution(&mut rng, n);
        let q = random_distribution(&mut rng, n);
        if let Some(d) = nonnegative.record(kl_divergence(&p, &q)) {
            // Distinct draws should give a strictly positive value.
            nonnegative.observe(if max_abs_diff(&p, &q) >= 1e-12 { d - f64::MIN_POSITIVE } else { 0.0 });
        }
        if let Some(d) = self_divergence.record(kl_divergence(&p, &p)) {
            self_divergence.observe(d.abs());
        }
    }
    vec![conditional.finish(), joint.finish(), normalization.finish(), nonnegative.finish(), self_divergence.finish()]
}

// ---------------------------------------------------------------------------
// capacity

fn bsc_capacity(eps: f64) -> f64 {
    std::f64::consts::LN_2 + eps * eps.ln() + (1.0 - eps) * (1.0 - eps).ln()
}

/// Binary symmetric channels against the closed form, and Muroga against BA.
pub fn check_bsc_capacity() -> Vec<PropertyCheck> {
    let suite = Suite::Capacity;
    let mut analytic = Check::at_most(suite, "BSC: Blahut-Arimoto matches ln 2 - h(eps)", 1e-9)
        .detail("eps in {0.05, 0.1, 0.2, 0.3}, tol 1e-10");
    let mut agreement = Check::at_most(suite, "BSC: Muroga matches Blahut-Arimoto", 1e-8);
    for eps in [0.05, 0.1, 0.2, 0.3] {
        let Some(w) = analytic.record(ChannelMatrix::binary_symmetric(eps)) else { continue };
        let Some(ba) = analytic.record(blahut_arimoto(&w, DEFAULT_BA_TOL, DEFAULT_MAX_ITER)) else { continue };
        analytic.observe((ba.capacity - bsc_capacity(eps)).abs());
        if let Some(m) = agreement.record(muroga_capacity(&w)) {
            agreement.observe((m.capacity - ba.capacity).abs());
        }
    }
    vec![analytic.finish(), agreement.finish()]
}

/// Muroga and BA agree wherever `d > 0`.
pub fn check_muroga_agreement(seed: u64, count: usize) -> Vec<PropertyCheck> {
    let suite = Suite::Capacity;
    let mut rng = check_rng(seed, "muroga agreement");
    let mut capacity = Check::at_most(suite, "Muroga vs Blahut-Arimoto capacity (d > 0)", 1e-8);
    let mut law = Check::at_most(suite, "Muroga vs Blahut-Arimoto capacity-achieving law", 1e-5);
    let mut attempts = 0;
    while capacity.samples < count && attempts < 100 * count {
        attempts += 1;
        let w = random_channel(&mut rng, 3);
        let Ok(terms) = muroga_terms(&w) else { continue };
        if !terms.d_positive() {
            continue;
        }
        let Some(m) = capacity.record(muroga_capacity(&w)) else { continue };
        let Some(ba) = capacity.record(blahut_arimoto(&w, DEFAULT_BA_TOL, DEFAULT_MAX_ITER)) else { continue };
        capacity.observe((m.capacity - ba.capacity).abs());
        law.observe(max_abs_diff(m.p_star.weights(), ba.p_star.weights()));
    }
    vec![capacity.finish(), law.finish()]
}

fn check_ba_monotone(seed: u64) -> PropertyCheck {
    let mut rng = check_rng(seed, "ba monotone");
    let mut check = Check::at_most(Suite::Capacity, "Blahut-Arimoto lower bound never decreases", 1e-14)
        .detail("largest drop between consecutive iterates, 200 iterates on 100 channels");
    for i in 0..100 {
        let w = random_channel(&mut rng, 2 + i % 4);
        let lowers: Vec<f64> = BlahutArimoto::new(&w).take(200).map(|b| b.lower).collect();
        for pair in lowers.windows(2) {
            check.observe(pair[0] - pair[1]);
        }
    }
    check.finish()
}

/// Relative error `‖g − fd‖∞ / ‖g‖∞` of the exact gradient over random
/// invertible 3×3 channels with full-support capacity-achieving laws.
pub fn check_gradient_oracle(seed: u64, count: usize) -> PropertyCheck {
    let h = 1e-5;
    let mut rng = check_rng(seed, "gradient oracle");
    let mut check = Check::at_most(Suite::Capacity, "exact gradient vs central differences", 1e-3)
        .detail("h = 1e-5, Blahut-Arimoto tol 1e-12, relative sup-norm error");
    let mut attempts = 0;
    while check.samples < count && attempts < 100 * count {
        attempts += 1;
        let w = random_channel(&mut rng, 3);
        let usable = (0..3).all(|j| (0..3).all(|k| w.get(j, k) > 2.0 * h && w.get(j, k) < 1.0 - 2.0 * h));
        let Ok(terms) = muroga_terms(&w) else { continue };
        if !usable || !terms.d_positive() {
            continue;
        }
        let Some(g) = check.record(capacity_gradient(&w)) else { continue };
        if g.p.iter().any(|&x| x < 1e-3) {
            continue;
        }
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..3 {
            for k in (0..3).filter(|&k| k != j) {
                let Some(fd) = check.record(fd_capacity_gradient(&w, j, k, h)) else { continue };
                err = err.max((g.grad[(j, k)] - fd).abs());
                scale = scale.max(g.grad[(j, k)].abs());
            }
        }
        check.observe(err / scale);
    }
    check.finish()
}

/// Channels whose third row mixes the first two have `p_3 = 0`; the
/// capacity is flat along that row.
fn check_zero_rows(seed: u64) -> PropertyCheck {
    let mut rng = check_rng(seed, "zero rows");
    let mut check = Check::at_most(Suite::Capacity, "finite-difference gradient vanishes on unused rows", 1e-6);
    let mut attempts = 0;
    while check.samples < 60 && attempts < 1000 {
        attempts += 1;
        let a = random_distribution(&mut rng, 3);
        let b = random_distribution(&mut rng, 3);
        let t: f64 = rng.random_range(0.2..0.8);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let Ok(w) = ChannelMatrix::new(&[a, b, mix]) else { continue };
        let Ok(ba) = blahut_arimoto(&w, 1e-12, DEFAULT_MAX_ITER) else { continue };
        let unused: Vec<usize> = (0..3).filter(|&j| ba.p_star[j] < SUPPORT_THRESHOLD).collect();
        for j in unused {
            for k in (0..3).filter(|&k| k != j) {
                if let Ok(fd) = fd_capacity_gradient(&w, j, k, 1e-5) {
                    check.observe(fd.abs());
                }
            }
        }
    }
    check.finish()
}

fn check_zero_capacity_rows(seed: u64) -> Vec<PropertyCheck> {
    let suite = Suite::Capacity;
    let mut rng = check_rng(seed, "zero capacity rows");
    let mut product = Check::at_most(suite, "capacity of channels with identical rows", 1e-10);
    let mut generic = Check::at_least(suite, "capacity of channels with distinct rows", 1e-10);
    for i in 0..100 {
        let n = 2 + i % 4;
        let w = random_product_law(&mut rng, n);
        if let Some(r) = product.record(blahut_arimoto(&w, DEFAULT_BA_TOL, DEFAULT_MAX_ITER)) {
            product.observe(r.capacity);
        }
        let w = random_channel(&mut rng, n);
        if w.rows_identical(1e-10) {
            continue;
        }
        if let Some(r) = generic.record(blahut_arimoto(&w, DEFAULT_BA_TOL, DEFAULT_MAX_ITER)) {
            generic.observe(r.capacity);
        }
    }
    vec![product.finish(), generic.finish()]
}

/// Order of the good-channel residual: ratio between `ε = 1e-3` and `ε = 5e-4`.
pub fn check_good_channel_order(seed: u64, count: usize) -> Vec<PropertyCheck> {
    let suite = Suite::Capacity;
    let mut rng = check_rng(seed, "good channel order");
    let mut low = Check::at_least(suite, "good-channel residual ratio (lower end)", 3.5)
        .detail("residual(1e-3) / residual(5e-4) for 3x3 Q with U(0,1) rates");
    let mut high = Check::at_most(suite, "good-channel residual ratio (upper end)", 4.5);
    for _ in 0..count {
        let q = random_generator(&mut rng, 3);
        let Some(a) = low.record(good_channel_expansion_check(&q, 1e-3)) else { continue };
        let Some(b) = low.record(good_channel_expansion_check(&q, 5e-4)) else { continue };
        low.observe(a / b);
        high.observe(a / b);
    }
    vec![low.finish(), high.finish()]
}

fn capacity_checks(seed: u64) -> Vec<PropertyCheck> {
    let mut checks = check_bsc_capacity();
    checks.extend(check_muroga_agreement(seed, 200));
    checks.push(check_ba_monotone(seed));
    checks.push(check_gradient_oracle(seed, 50));
    checks.push(check_zero_rows(seed));
    checks.extend(check_zero_capacity_rows(seed));
    checks.extend(check_good_channel_order(seed, 20));
    checks
}

// ---------------------------------------------------------------------------
// mixing

/// Dirichlet-form identity, invariance of `P†P`, `E(f) = −fᵀSf`, and the
/// spectral gap as a lower bound on sampled Rayleigh quotients.
pub fn check_dirichlet(seed: u64, count: usize, gap_channels: usize) -> Vec<PropertyCheck> {
    let suite = Suite::Mixing;
    let mut rng = check_rng(seed, "dirichlet");
    let mut identity = Check::at_most(suite, "-E_{P'P}(f) = Var(Pf) - Var(f)", 1e-10);
    let mut invariance = Check::at_most(suite, "p P'P = p", 1e-10);
    let mut quadratic = Check::at_most(suite, "E(f) = -f^T S f", 1e-10);
    for i in 0..count {
        let n = 2 + i % 4;
        let w = random_channel(&mut rng, n);
        let f = random_vector(&mut rng, n);
        let Some(pi) = identity.record(invariant_distribution(&w)) else { continue };
        let Some(parts) = identity.record(reversibilization(&w, &pi)) else { continue };
        let p = pi.weights();
        let kernel = &parts.p_dagger * w.matrix();
        let form = dirichlet_form(&kernel, p, &f);
        let pf: Vec<f64> = (0..n).map(|j| (0..n).map(|k| w.get(j, k) * f[k]).sum()).collect();
        identity.observe((-form - (variance(p, &pf) - variance(p, &f))).abs());
        let back: Vec<f64> = (0..n).map(|k| (0..n).map(|j| p[j] * kernel[(j, k)]).sum()).collect();
        invariance.observe(max_abs_diff(&back, p));
        let fv = nalgebra::DVector::from_column_slice(&f);
        quadratic.observe((form + (fv.transpose() * &parts.s * &fv)[(0, 0)]).abs());
    }

    let mut gap = Check::at_most(suite, "lambda* <= sampled Rayleigh quotients", 1e-9)
        .detail("largest lambda* - min sampled quotient, 1000 samples per channel");
    for i in 0..gap_channels {
        let w = random_channel(&mut rng, 2 + i % 4);
        let Some(m) = gap.record(spectral_gap(&w)) else { continue };
        let sample_seed = rng.random();
        if let Some(best) = gap.record(variational_gap_samples(&w, 1000, sample_seed)) {
            gap.observe(m.lambda_star - best);
        }
    }
    vec![identity.finish(), invariance.finish(), quadratic.finish(), gap.finish()]
}

/// Zero capacity forces unit mixing time; positive capacity forbids it.
pub fn check_zero_capacity_mixing(seed: u64, count: usize) -> Vec<PropertyCheck> {
    let suite = Suite::Mixing;
    let mut rng = check_rng(seed, "zero capacity mixing");
    let mut unit = Check::at_most(suite, "product laws: |t_mix - 1|", 1e-9).detail("n in {2, 3, 5}");
    let mut zero = Check::at_most(suite, "product laws: capacity", 1e-9);
    for i in 0..count {
        let w = random_product_law(&mut rng, [2, 3, 5][i % 3]);
        if let Some(m) = unit.record(spectral_gap(&w)) {
            unit.observe((m.t_mix - 1.0).abs());
        }
        if let Some(c) = zero.record(blahut_arimoto(&w, DEFAULT_BA_TOL, DEFAULT_MAX_ITER)) {
            zero.observe(c.capacity);
        }
    }
    let mut slow = Check::at_least(suite, "capacity > 0.01 nats: t_mix - 1", 1e-6);
    let mut attempts = 0;
    while slow.samples < count && attempts < 100 * count {
        attempts += 1;
        let w = random_channel(&mut rng, [2, 3, 5][attempts % 3]);
        let Ok(c) = blahut_arimoto(&w, DEFAULT_BA_TOL, DEFAULT_MAX_ITER) else { continue };
        if c.capacity <= 0.01 {
            continue;
        }
        if let Some(m) = slow.record(spectral_gap(&w)) {
            slow.observe(m.t_mix - 1.0);
        }
    }
    vec![unit.finish(), zero.finish(), slow.finish()]
}

fn mixing_checks(seed: u64) -> Vec<PropertyCheck> {
    let mut checks = check_dirichlet(seed, 500, 100);
    checks.extend(check_zero_capacity_mixing(seed, 100));
    checks
}

// ---------------------------------------------------------------------------
// thermo

/// Gibbs reconstruction, Helmholtz identity, round trips and `F ≤ 0`.
pub fn check_thermo_identities(seed: u64, count: usize) -> Vec<PropertyCheck> {
    let suite = Suite::Thermo;
    let mut rng = check_rng(seed, "thermo identities");
    let mut gibbs = Check::at_most(suite, "exp(-beta E_k)/Z reproduces p", 1e-10);
    let mut helmholtz = Check::at_most(suite, "F = U - H/beta", 1e-10);
    let mut forward = Check::at_most(suite, "inverse_state(effective_state(p, t)) = (p, t)", 1e-10)
        .detail("max of |p - p'| and |t - t'|/t");
    let mut backward = Check::at_most(suite, "effective_state(inverse_state(E, beta)) = (E, beta)", 1e-10)
        .detail("max of |E - E'| and |beta - beta'|/beta, E centered");
    let mut sign = Check::at_most(suite, "free energy is nonpositive", 0.0);
    let mut norms = Check::at_most(suite, "||t|| ||(E, 1/beta)|| = 1", 1e-9);
    for i in 0..count {
        let n = 2 + i % 5;
        let p = input(random_distribution(&mut rng, n));
        if p.min() < 1e-12 {
            continue;
        }
        let t_inf = (rng.random_range(-3.0..3.0f64)).exp();
        let Some(s) = gibbs.record(effective_state(&p, t_inf)) else { continue };
        let weights: Vec<f64> = s.energies.iter().map(|e| (-s.beta * e).exp()).collect();
        let z: f64 = weights.iter().sum();
        gibbs.observe(max_abs_diff(&weights.iter().map(|x| x / z).collect::<Vec<_>>(), p.weights()));
        helmholtz.observe((s.free_energy - (s.internal_energy - s.entropy / s.beta)).abs());
        sign.observe(s.free_energy);
        if let Some((p2, t2)) = forward.record(inverse_state(&s.energies, s.beta)) {
            forward.observe(max_abs_diff(p2.weights(), p.weights()).max((t2 - t_inf).abs() / t_inf));
        }
        let e_norm = (s.energies.iter().map(|e| e * e).sum::<f64>() + s.beta.powi(-2)).sqrt();
        let t_norm = t_inf * p.weights().iter().map(|x| x * x).sum::<f64>().sqrt();
        norms.observe((e_norm * t_norm - 1.0).abs());

        // Backward: centered energies and a positive β.
        let mut e = random_vector(&mut rng, n);
        let mean = e.iter().sum::<f64>() / n as f64;
        e.iter_mut().for_each(|x| *x -= mean);
        let beta = rng.random_range(-2.0..2.0f64).exp();
        let Some((p3, t3)) = backward.record(inverse_state(&e, beta)) else { continue };
        if let Some(s3) = backward.record(effective_state(&p3, t3)) {
            backward.observe(max_abs_diff(&s3.energies, &e).max((s3.beta - beta).abs() / beta));
        }
    }
    vec![gibbs.finish(), helmholtz.finish(), forward.finish(), backward.finish(), sign.finish(), norms.finish()]
}

/// `I(X;Y) = −β(F + ΔW)` for arbitrary `β` and `F`.
pub fn check_ford(seed: u64, count: usize) -> PropertyCheck {
    let mut rng = check_rng(seed, "ford");
    let mut check = Check::at_most(Suite::Thermo, "I(X;Y) = -beta (F + dW)", 1e-10)
        .detail("3x3 channels, beta in (0.1, 10), F in (-5, 5)");
    for _ in 0..count {
        let w = random_channel(&mut rng, 3);
        let p = input(random_distribution(&mut rng, 3));
        let beta = rng.random_range(0.1..10.0);
        let f = rng.random_range(-5.0..5.0);
        match factoring_work(&w, &p, beta, f) {
            Ok(r) => check.observe(r.residual),
            Err(Error::IdentityViolation { residual, .. }) => check.observe(residual),
            Err(e) => check.fail(e),
        }
    }
    check.finish()
}

/// Along segments running into each zero-support region of the constrained
/// family, `F_mix` rises toward its plateau at 0 as `min p_star → 0`.
pub fn check_plateau(family: &ChannelFamily) -> PropertyCheck {
    let mut check = Check::at_least(Suite::Thermo, "F_mix rises toward 0 approaching a zero-support region", 0.0)
        .detail("smallest step in F_mix over the last 20 samples before min p* < 1e-6, three segments");
    // From the full-support middle into the lower-left, upper-left and
    // upper-right zero-support regions.
    let start = (0.55, 0.6);
    for end in [(0.2, 0.2), (0.02, 0.75), (0.8, 0.9)] {
        let points: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let t = i as f64 / 400.0;
                (start.0 + t * (end.0 - start.0), start.1 + t * (end.1 - start.1))
            })
            .collect();
        let mut values = Vec::new();
        for (u, v) in points {
            let Some(w) = check.record(family.evaluate(u, v)) else { break };
            let Some(t) = check.record(dmc_thermo(&w, 1e-12, DEFAULT_SUPPORT_EPS)) else { break };
            if t.degenerate {
                break;
            }
            values.push(t.f_mix);
        }
        if values.len() < 21 || values.len() == 401 {
            check.fail(format!("segment to {end:?} does not cross a zero-support boundary"));
            continue;
        }
        for pair in values[values.len() - 20..].windows(2) {
            check.observe(pair[1] - pair[0]);
        }
        check.observe(-values[values.len() - 1]);
    }
    check.finish()
}

fn thermo_checks(seed: u64) -> Vec<PropertyCheck> {
    let mut checks = check_thermo_identities(seed, 1000);
    checks.push(check_ford(seed, 1000));
    checks.push(check_plateau(&ChannelFamily::default_for(FamilyKind::Constrained3)));
    checks
}

// ---------------------------------------------------------------------------
// landscape

fn full_sweep(kind: FamilyKind, n: usize) -> Result<crate::landscape::LandscapeGrid> {
    let config = SweepConfig { n_u: n, n_v: n, ..SweepConfig::default() };
    sweep(&ChannelFamily::default_for(kind), &config)
}

/// Argmins of `C` and `F_mix` sit on the diagonal of the binary grid; that of
/// `H` does not.
pub fn check_diagonal_argmins(n: usize) -> Vec<PropertyCheck> {
    let suite = Suite::Landscape;
    let mut on = Check::at_most(suite, "biodmc: argmin C and argmin F_mix distance to diagonal (steps)", 1.0)
        .detail(format!("{n}x{n} grid, margin 0.02, tie tolerance {DEFAULT_TIE_TOL}"));
    let mut apart = Check::at_most(suite, "biodmc: separation of argmin C and argmin F_mix (steps)", 2.0);
    let mut off = Check::at_least(suite, "biodmc: argmin H misses the diagonal (steps)", 1.0 + 1e-9)
        .detail("largest distance of an H minimizer from the diagonal");
    if let Some(grid) = on.record(full_sweep(FamilyKind::Biodmc, n)) {
        if let Some(r) = on.record(diagonal_argmin_check(&grid, DEFAULT_TIE_TOL)) {
            for m in r.capacity.minimizers.iter().chain(&r.free_energy.minimizers) {
                on.observe(m.diagonal_steps.unwrap_or(f64::INFINITY));
            }
            apart.observe(r.separation_steps);
            let farthest = r.entropy.minimizers.iter().filter_map(|m| m.diagonal_steps).fold(0.0, f64::max);
            off.observe(farthest);
        }
    }
    vec![on.finish(), apart.finish(), off.finish()]
}

fn check_zero_capacity_line() -> Vec<PropertyCheck> {
    let suite = Suite::Landscape;
    let mut capacity = Check::at_most(suite, "biodmc diagonal: capacity", 1e-8);
    let mut mixing = Check::at_most(suite, "biodmc diagonal: |t_mix - 1|", 1e-8);
    for u in crate::landscape::grid::grid_axis(101, 0.02) {
        let Some(w) = capacity.record(crate::landscape::biodmc(u, 1.0 - u)) else { continue };
        if let Some(t) = capacity.record(dmc_thermo(&w, 1e-12, DEFAULT_SUPPORT_EPS)) {
            capacity.observe(t.capacity.capacity);
            mixing.observe((t.t_mix - 1.0).abs());
        }
    }
    vec![capacity.finish(), mixing.finish()]
}

fn check_determinism() -> PropertyCheck {
    let mut check = Check::at_most(Suite::Landscape, "sweep CSV is identical across worker counts", 0.0)
        .detail("constrained3 21x21 with 1, 2 and 4 workers; worst = number of differing outputs");
    let family = ChannelFamily::default_for(FamilyKind::Constrained3);
    let run = |workers| {
        let config = SweepConfig { n_u: 21, n_v: 21, workers, ..SweepConfig::default() };
        sweep(&family, &config)?.to_csv_string()
    };
    if let Some(reference) = check.record(run(1)) {
        for workers in [2, 4] {
            if let Some(other) = check.record(run(workers)) {
                check.observe(f64::from(u8::from(other != reference)));
            }
        }
    }
    check.finish()
}

fn check_family_validity(seed: u64) -> PropertyCheck {
    let mut rng = check_rng(seed, "family validity");
    let mut check = Check::at_most(Suite::Landscape, "families give channels at random interior points", 0.0)
        .detail("10^4 points per family; worst = number of failures");
    let mut failures = 0.0;
    for kind in [FamilyKind::Biodmc, FamilyKind::Constrained3, FamilyKind::Convex3] {
        let family = ChannelFamily::default_for(kind);
        for _ in 0..10_000 {
            let (u, v) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            if u <= 0.0 || v <= 0.0 {
                continue;
            }
            if let Err(e) = family.evaluate(u, v) {
                failures += 1.0;
                check.fail(format!("{kind} at ({u}, {v}): {e}"));
            }
            check.samples += 1;
        }
    }
    check.worst = failures;
    check.finish()
}

/// Zero-support masks of the constrained family and where the local minima
/// of `F_mix` fall relative to them.
pub fn check_corners(n: usize) -> Vec<PropertyCheck> {
    let suite = Suite::Landscape;
    let mut masks = Check::at_least(suite, "constrained3: nonempty zero-support masks", 3.0)
        .detail(format!("{n}x{n} grid, support_eps 1e-6"));
    let mut disjoint = Check::at_most(suite, "constrained3: cells in more than one mask", 0.0);
    let mut regions = Check::at_most(suite, "constrained3: masks outside lower-left/upper-left/upper-right", 0.0);
    let mut plateau = Check::at_least(suite, "constrained3: F_mix inside masks", -1e-3);
    let mut band = Check::at_least(suite, "constrained3: fraction of F_mix local minima in the inter-mask band", 0.7);
    let outcome = full_sweep(FamilyKind::Constrained3, n)
        .and_then(|grid| corner_basin_diagnostics(&grid, DEFAULT_SUPPORT_EPS, None));
    if let Some(r) = masks.record(outcome) {
        masks.observe(r.masks.len() as f64);
        disjoint.observe(if r.pairwise_disjoint { 0.0 } else { 1.0 });
        let expected = ["lower left", "upper left", "upper right"];
        let misplaced = (0..3)
            .filter(|&k| !r.masks.iter().any(|m| m.symbol == k + 1 && m.region == expected[k]))
            .count();
        regions.observe(misplaced as f64);
        for m in &r.masks {
            plateau.observe(m.min_f_mix);
        }
        band.observe(r.fraction_in_band);
        band = band.detail(format!(
            "band half-width {} cells ({:.1}% of the grid), {} of {} minima inside",
            r.band_halfwidth,
            100.0 * r.band_area_fraction,
            r.minima_in_band,
            r.local_minima.len()
        ));
    }
    vec![masks.finish(), disjoint.finish(), regions.finish(), plateau.finish(), band.finish()]
}

fn check_psi_near_argmin() -> PropertyCheck {
    let mut check = Check::at_most(Suite::Landscape, "convex3: max |psi| near argmin C / global max |psi|", DEFAULT_NEAR_ZERO_RATIO)
        .detail("100x100 grid, radius 1");
    let family = ChannelFamily::default_for(FamilyKind::Convex3);
    let config = SweepConfig { n_u: 100, n_v: 100, ..SweepConfig::default() };
    let outcome = sweep(&family, &config).and_then(|g| near_argmin_psi_check(&g, &family, 1, DEFAULT_NEAR_ZERO_RATIO));
    if let Some(r) = check.record(outcome) {
        check.observe(r.ratio);
    }
    check.finish()
}

fn check_log_partition(seed: u64) -> PropertyCheck {
    let mut rng = check_rng(seed, "log partition");
    let mut check = Check::at_most(Suite::Landscape, "good channel: |dlogZ/dW_jk| / |dC/dW_jk| where the premise holds", DEFAULT_NEAR_ZERO_RATIO)
        .detail("W = I + 0.05 Q, 3x3, premise deviation < 0.05");
    for _ in 0..20 {
        let q = random_generator(&mut rng, 3);
        let Some(w) = check.record(crate::capacity::good_channel(&q, 0.05)) else { continue };
        let Some(pairs) = check.record(log_partition_check(&w, DEFAULT_PREMISE_TOL, 1e-5)) else { continue };
        for p in pairs.iter().filter(|p| p.premise_holds) {
            check.observe((p.d_log_z / p.d_capacity).abs());
        }
    }
    check.finish()
}

fn landscape_checks(seed: u64) -> Vec<PropertyCheck> {
    let mut checks = check_diagonal_argmins(101);
    checks.extend(check_zero_capacity_line());
    checks.push(check_determinism());
    checks.push(check_family_validity(seed));
    checks.extend(check_corners(101));
    checks.push(check_psi_near_argmin());
    checks.push(check_log_partition(seed));
    checks
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Core => core_checks(seed),
        Suite::Capacity => capacity_checks(seed),
        Suite::Mixing => mixing_checks(seed),
        Suite::Thermo => thermo_checks(seed),
        Suite::Landscape => landscape_checks(seed),
        Suite::All => Suite::MODULES.iter().flat_map(|&s| run_suite(s, seed).checks).collect(),
    };
    SuiteReport { suite, seed, pass: checks.iter().all(|c| c.pass), checks }
}
