//! Channel capacity.
//!
//! Two independent routes: Blahut-Arimoto alternating maximization with the
//! usual certified upper/lower bounds, and the closed-form Muroga solution for
//! invertible channels. The exact capacity gradient with respect to the
//! off-diagonal entries (diagonal entries being dependent) comes with a
//! central-difference oracle built on Blahut-Arimoto.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::channel::{row_entropies, ChannelMatrix, Distribution, Role};
use crate::error::{Error, Result};
use crate::linalg;

/// Muroga applies only when every `d_j` exceeds this margin.
pub const MUROGA_D_MARGIN: f64 = 1e-12;
/// Capacity-achieving masses below this are treated as exact zeros.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;
/// Blahut-Arimoto tolerance used by the finite-difference oracle.
pub const FD_BA_TOL: f64 = 1e-12;
pub const DEFAULT_BA_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMethod {
    BlahutArimoto,
    Muroga,
    /// Blahut-Arimoto warm start finished by Newton's method on the KKT
    /// equations restricted to the detected support.
    SupportNewton,
}

/// Which route [`capacity`] should take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    BlahutArimoto,
    Muroga,
    /// Muroga when it applies and certifies, otherwise Blahut-Arimoto with
    /// periodic support-restricted Newton attempts.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Capacity in nats.
    pub capacity: f64,
    pub p_star: Distribution,
    pub method: CapacityMethod,
    pub iterations: usize,
    /// `max_j D(W_j‖q) − I(p; W)` at the returned distribution.
    pub gap: f64,
    /// Whether the Muroga vector `d` is strictly positive.
    pub d_positive: bool,
}

/// Capacity bounds at one Blahut-Arimoto iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    /// `I(p; W)`.
    pub lower: f64,
    /// `max_j D(W_j‖pW)`.
    pub upper: f64,
}

impl Bounds {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Blahut-Arimoto state, starting from the uniform input law.
///
/// As an iterator it yields the bounds of `p⁽⁰⁾, p⁽¹⁾, …` without end.
#[derive(Debug, Clone)]
pub struct BlahutArimoto {
    n: usize,
    rows: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    divergences: Vec<f64>,
}

impl BlahutArimoto {
    pub fn new(w: &ChannelMatrix) -> Self {
        let n = w.n();
        let rows = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| w.get(j, k)).collect();
        Self {
            n,
            rows,
            p: vec![1.0 / n as f64; n],
            q: vec![0.0; n],
            divergences: vec![0.0; n],
        }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Bounds at the current iterate. Leaves `D(W_j‖q)` cached for [`Self::update`].
    pub fn bounds(&mut self) -> Bounds {
        let n = self.n;
        self.q.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..n {
            let pj = self.p[j];
            for k in 0..n {
                self.q[k] += pj * self.rows[j * n + k];
            }
        }
        let mut lower = 0.0;
        let mut upper = f64::NEG_INFINITY;
        for j in 0..n {
            let mut d = 0.0;
            for k in 0..n {
                let wjk = self.rows[j * n + k];
                if wjk > 0.0 {
                    d += wjk * (wjk / self.q[k]).ln();
                }
            }
            self.divergences[j] = d;
            lower += self.p[j] * d;
            upper = upper.max(d);
        }
        Bounds { lower, upper }
    }

    /// `p_j ← p_j exp(D(W_j‖q)) / Σ`, using the divergences from the last [`Self::bounds`].
    pub fn update(&mut self) {
        let shift = self.divergences.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (pj, d) in self.p.iter_mut().zip(&self.divergences) {
            *pj *= (d - shift).exp();
            total += *pj;
        }
        self.p.iter_mut().for_each(|pj| *pj /= total);
    }
}

impl Iterator for BlahutArimoto {
    type Item = Bounds;

    fn next(&mut self) -> Option<Bounds> {
        let bounds = self.bounds();
        self.update();
        Some(bounds)
    }
}

/// Blahut-Arimoto capacity, stopping once the certified gap drops below `tol`.
///
/// On [`Error::NoConvergence`] the partial result is boxed inside the error.
pub fn blahut_arimoto(w: &ChannelMatrix, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange { name: "tol", value: tol });
    }
    if max_iter == 0 {
        return Err(Error::OutOfRange { name: "max_iter", value: 0.0 });
    }
    let mut ba = BlahutArimoto::new(w);
    let mut iterations = 0;
    let bounds = loop {
        let bounds = ba.bounds();
        if bounds.gap() < tol || iterations >= max_iter {
            break bounds;
        }
        ba.update();
        iterations += 1;
    };
    let result = CapacityResult {
        capacity: bounds.lower.max(0.0),
        p_star: Distribution::normalized(ba.p().to_vec(), Role::CapacityAchieving)?,
        method: CapacityMethod::BlahutArimoto,
        iterations,
        gap: bounds.gap(),
        d_positive: muroga_terms(w).map(|t| t.d_positive()).unwrap_or(false),
    };
    if bounds.gap() < tol {
        Ok(result)
    } else {
        Err(Error::NoConvergence(Box::new(result)))
    }
}

/// Iterate count of the first Newton attempt; later attempts double it.
const NEWTON_FIRST_ATTEMPT: usize = 32;
/// BA masses above this seed the support guess.
const SUPPORT_GUESS: f64 = 1e-6;

/// Solves `D(W_j‖q) = C` for `j ∈ support` and `Σ p = 1` by Newton's method.
/// Returns the full-length law, or `None` if the iteration fails or leaves
/// the simplex.
fn newton_on_support(w: &ChannelMatrix, support: &[usize], start: &[f64]) -> Option<Vec<f64>> {
    let n = w.n();
    let m = support.len();
    let mut p: Vec<f64> = support.iter().map(|&j| start[j]).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let divergences = |p: &[f64]| -> Option<(Vec<f64>, Vec<f64>)> {
        let q: Vec<f64> = (0..n).map(|k| support.iter().zip(p).map(|(&i, pi)| pi * w.get(i, k)).sum()).collect();
        let mut d = Vec::with_capacity(m);
        for &j in support {
            let mut dj = 0.0;
            for k in 0..n {
                let wjk = w.get(j, k);
                if wjk > 0.0 {
                    if q[k] <= 0.0 {
                        return None;
                    }
                    dj += wjk * (wjk / q[k]).ln();
                }
            }
            d.push(dj);
        }
        Some((q, d))
    };
    let (mut q, mut d) = divergences(&p)?;
    let mut c = p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
    for _ in 0..50 {
        let mut residual = DVector::zeros(m + 1);
        for a in 0..m {
            residual[a] = d[a] - c;
        }
        residual[m] = p.iter().sum::<f64>() - 1.0;
        if residual.amax() < 1e-15 {
            break;
        }
        let mut jac = DMatrix::zeros(m + 1, m + 1);
        for (a, &j) in support.iter().enumerate() {
            for (b, &i) in support.iter().enumerate() {
                jac[(a, b)] = -(0..n)
                    .filter(|&k| q[k] > 0.0)
                    .map(|k| w.get(j, k) * w.get(i, k) / q[k])
                    .sum::<f64>();
            }
            jac[(a, m)] = -1.0;
            jac[(m, a)] = 1.0;
        }
        let step = jac.lu().solve(&(-residual))?;
        // Halve the step until the iterate stays strictly inside the simplex.
        let mut scale = 1.0;
        let next = loop {
            let trial: Vec<f64> = (0..m).map(|a| p[a] + scale * step[a]).collect();
            if trial.iter().all(|&x| x > 0.0) {
                break trial;
            }
            scale *= 0.5;
            if scale < 1e-6 {
                return None;
            }
        };
        c += scale * step[m];
        p = next;
        (q, d) = divergences(&p)?;
    }
    let mut full = vec![0.0; n];
    for (&j, &pj) in support.iter().zip(&p) {
        full[j] = pj;
    }
    Some(full)
}

/// Newton solutions on the support suggested by `p`, shrinking the support
/// while the solution is not certified. Returns the law with the smallest gap.
fn polish(w: &ChannelMatrix, p: &[f64]) -> Option<(Vec<f64>, f64)> {
    let mut support: Vec<usize> = (0..p.len()).filter(|&j| p[j] > SUPPORT_GUESS).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    while !support.is_empty() {
        // Weakest by the Newton solution when there is one, else by the BA iterate.
        let weights = match newton_on_support(w, &support, p) {
            Some(candidate) => {
                let gap = kkt_gap(w, &candidate);
                if gap == 0.0 {
                    return Some((candidate, gap));
                }
                if best.as_ref().is_none_or(|(_, g)| gap < *g) {
                    best = Some((candidate.clone(), gap));
                }
                candidate
            }
            None => p.to_vec(),
        };
        let weakest = support.iter().copied().min_by(|&a, &b| weights[a].total_cmp(&weights[b]))?;
        support.retain(|&j| j != weakest);
    }
    best
}

/// Blahut-Arimoto with Newton attempts on the detected support at iterates
/// 32, 64, 128, …. Any result returned satisfies the same certified gap
/// criterion as plain Blahut-Arimoto; the Newton stage only removes the slow
/// tail when some optimal masses are zero.
pub fn blahut_arimoto_accelerated(w: &ChannelMatrix, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange { name: "tol", value: tol });
    }
    if max_iter == 0 {
        return Err(Error::OutOfRange { name: "max_iter", value: 0.0 });
    }
    let mut ba = BlahutArimoto::new(w);
    let mut iterations = 0;
    let mut next_attempt = NEWTON_FIRST_ATTEMPT;
    let finish = |p: Vec<f64>, bounds: Bounds, method, iterations| -> Result<CapacityResult> {
        Ok(CapacityResult {
            capacity: bounds.lower.max(0.0),
            p_star: Distribution::normalized(p, Role::CapacityAchieving)?,
            method,
            iterations,
            gap: bounds.gap(),
            d_positive: muroga_terms(w).map(|t| t.d_positive()).unwrap_or(false),
        })
    };
    loop {
        let bounds = ba.bounds();
        if bounds.gap() < tol {
            return finish(ba.p().to_vec(), bounds, CapacityMethod::BlahutArimoto, iterations);
        }
        if iterations >= max_iter {
            let partial = finish(ba.p().to_vec(), bounds, CapacityMethod::BlahutArimoto, iterations)?;
            return Err(Error::NoConvergence(Box::new(partial)));
        }
        if iterations == next_attempt {
            next_attempt *= 2;
            if let Some((p, gap)) = polish(w, ba.p()) {
                if gap < tol {
                    let mut at = BlahutArimoto::new(w);
                    at.p.copy_from_slice(&p);
                    let bounds = at.bounds();
                    return finish(p, bounds, CapacityMethod::SupportNewton, iterations);
                }
            }
        }
        ba.update();
        iterations += 1;
    }
}

/// Intermediate quantities of the Muroga solution.
#[derive(Debug, Clone)]
pub struct MurogaTerms {
    /// `M = W⁻¹`.
    pub inverse: DMatrix<f64>,
    pub condition: f64,
    pub row_entropies: Vec<f64>,
    /// `exp(−Σ_k M_jk H_k)`.
    pub exponentials: Vec<f64>,
    /// `d_j = Σ_i M_ij exp(−Σ_k M_ik H_k)`.
    pub d: Vec<f64>,
    /// `log Σ_j exp(−Σ_k M_jk H_k)`, the capacity when `d > 0`.
    pub log_sum: f64,
}

impl MurogaTerms {
    pub fn min_d(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn d_positive(&self) -> bool {
        self.min_d() > MUROGA_D_MARGIN
    }
}

pub fn muroga_terms(w: &ChannelMatrix) -> Result<MurogaTerms> {
    let (inverse, condition) = linalg::inverse_with_condition(w.matrix())?;
    let h = row_entropies(w);
    let n = w.n();
    let exponentials: Vec<f64> = (0..n)
        .map(|j| (-(0..n).map(|k| inverse[(j, k)] * h[k]).sum::<f64>()).exp())
        .collect();
    let d = (0..n)
        .map(|j| (0..n).map(|i| inverse[(i, j)] * exponentials[i]).sum())
        .collect();
    let log_sum = exponentials.iter().sum::<f64>().ln();
    Ok(MurogaTerms { inverse, condition, row_entropies: h, exponentials, d, log_sum })
}

/// Capacity from the closed-form Muroga solution, valid when `d > 0`.
pub fn muroga_capacity(w: &ChannelMatrix) -> Result<CapacityResult> {
    let terms = muroga_terms(w)?;
    if !terms.d_positive() {
        return Err(Error::NotApplicable { min_d: terms.min_d() });
    }
    let scale = (-terms.log_sum).exp();
    let p = terms.d.iter().map(|d| d * scale).collect();
    let p_star = Distribution::normalized(p, Role::CapacityAchieving)?;
    Ok(CapacityResult {
        capacity: terms.log_sum.max(0.0),
        gap: kkt_gap(w, p_star.weights()),
        p_star,
        method: CapacityMethod::Muroga,
        iterations: 0,
        d_positive: true,
    })
}

/// `max_j D(W_j‖pW) − I(p; W)`; zero exactly at a capacity-achieving `p`.
pub fn kkt_gap(w: &ChannelMatrix, p: &[f64]) -> f64 {
    let mut ba = BlahutArimoto::new(w);
    ba.p.copy_from_slice(p);
    ba.bounds().gap()
}

/// Capacity by the requested route. `Auto` uses Muroga when `d > 0` and its
/// KKT gap is below `tol`, otherwise [`blahut_arimoto_accelerated`].
pub fn capacity(w: &ChannelMatrix, choice: MethodChoice, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    match choice {
        MethodChoice::BlahutArimoto => blahut_arimoto(w, tol, max_iter),
        MethodChoice::Muroga => muroga_capacity(w),
        MethodChoice::Auto => match muroga_capacity(w) {
            Ok(result) if result.gap <= tol => Ok(result),
            _ => blahut_arimoto_accelerated(w, tol, max_iter),
        },
    }
}

/// Exact capacity gradient over off-diagonal entries.
#[derive(Debug, Clone)]
pub struct CapacityGradient {
    /// `ψ^(jk)`; diagonal entries are NaN.
    pub psi: DMatrix<f64>,
    /// `∂C/∂W_jk = ψ^(jk) p_j`; diagonal entries are NaN.
    pub grad: DMatrix<f64>,
    /// Capacity-achieving law used, with masses below [`SUPPORT_THRESHOLD`] zeroed.
    pub p: Vec<f64>,
    pub method: CapacityMethod,
}

impl CapacityGradient {
    pub fn max_abs_psi(&self) -> f64 {
        off_diagonal(&self.psi).map(f64::abs).fold(0.0, f64::max)
    }
}

pub(crate) fn off_diagonal(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    let n = m.nrows();
    (0..n).flat_map(move |j| (0..n).filter(move |&k| k != j).map(move |k| m[(j, k)]))
}

/// `ψ^(jk) = Σ_m (M_km − M_jm) H_m + log(W_jk / W_jj)` for `j ≠ k`.
pub fn psi_matrix(w: &ChannelMatrix, terms: &MurogaTerms) -> Result<DMatrix<f64>> {
    let n = w.n();
    for j in 0..n {
        for k in 0..n {
            if w.get(j, k) <= 0.0 {
                return Err(Error::ZeroEntry { row: j, col: k });
            }
        }
    }
    let m = &terms.inverse;
    let h = &terms.row_entropies;
    Ok(DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            f64::NAN
        } else {
            (0..n).map(|l| (m[(k, l)] - m[(j, l)]) * h[l]).sum::<f64>() + (w.get(j, k) / w.get(j, j)).ln()
        }
    }))
}

pub fn capacity_gradient(w: &ChannelMatrix) -> Result<CapacityGradient> {
    let terms = muroga_terms(w)?;
    let psi = psi_matrix(w, &terms)?;
    let result = capacity(w, MethodChoice::Auto, FD_BA_TOL, DEFAULT_MAX_ITER)?;
    let p: Vec<f64> = result
        .p_star
        .weights()
        .iter()
        .map(|&x| if x < SUPPORT_THRESHOLD { 0.0 } else { x })
        .collect();
    let n = w.n();
    let grad = DMatrix::from_fn(n, n, |j, k| if j == k { f64::NAN } else { psi[(j, k)] * p[j] });
    Ok(CapacityGradient { psi, grad, p, method: result.method })
}

/// Moves mass `step` from `W_jj` to `W_jk`, keeping every other entry fixed.
pub fn perturb_off_diagonal(w: &ChannelMatrix, j: usize, k: usize, step: f64) -> Result<ChannelMatrix> {
    let n = w.n();
    if j >= n || k >= n || j == k {
        return Err(Error::InvalidArgument(format!("need distinct indices below {n}, got ({j}, {k})")));
    }
    let mut m = w.matrix().clone();
    m[(j, k)] += step;
    m[(j, j)] -= step;
    ChannelMatrix::from_matrix(m)
}

/// Central difference of the Blahut-Arimoto capacity along `W_jk ± h`, `W_jj ∓ h`.
pub fn fd_capacity_gradient(w: &ChannelMatrix, j: usize, k: usize, h: f64) -> Result<f64> {
    let n = w.n();
    if j >= n || k >= n || j == k {
        return Err(Error::InvalidArgument(format!("need distinct indices below {n}, got ({j}, {k})")));
    }
    let inside = |x: f64| x > 0.0 && x < 1.0;
    if !(h > 0.0) {
        return Err(Error::StepOutOfRange { row: j, col: k, step: h });
    }
    for (value, col) in [(w.get(j, k), k), (w.get(j, j), j)] {
        if !inside(value + h) || !inside(value - h) {
            return Err(Error::StepOutOfRange { row: j, col, step: h });
        }
    }
    let c = |step: f64| -> Result<f64> {
        let perturbed = perturb_off_diagonal(w, j, k, step)?;
        Ok(blahut_arimoto(&perturbed, FD_BA_TOL, DEFAULT_MAX_ITER)?.capacity)
    };
    Ok((c(h)? - c(-h)?) / (2.0 * h))
}

fn validate_generator(q: &DMatrix<f64>) -> Result<()> {
    let n = q.nrows();
    if n != q.ncols() || n < 2 {
        return Err(Error::InvalidPerturbation(format!("Q must be square with n >= 2, got {}x{}", n, q.ncols())));
    }
    for j in 0..n {
        let scale = q.row(j).iter().map(|x| x.abs()).fold(0.0, f64::max);
        if q.row(j).sum().abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidPerturbation(format!("row {j} does not sum to zero")));
        }
        if !(q[(j, j)] < 0.0) {
            return Err(Error::InvalidPerturbation(format!("Q[{j}][{j}] is not negative")));
        }
        if (0..n).any(|k| k != j && !(q[(j, k)] >= 0.0)) {
            return Err(Error::InvalidPerturbation(format!("row {j} has a negative off-diagonal entry")));
        }
    }
    Ok(())
}

/// `W = I + εQ` for a zero-row-sum `Q` with negative diagonal.
pub fn good_channel(q: &DMatrix<f64>, eps: f64) -> Result<ChannelMatrix> {
    validate_generator(q)?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidPerturbation(format!("eps = {eps}")));
    }
    let n = q.nrows();
    let w = DMatrix::identity(n, n) + q * eps;
    ChannelMatrix::from_matrix(w).map_err(|e| Error::InvalidPerturbation(format!("I + eps Q is not a channel: {e}")))
}

/// `max_j |Σ_k M_jk H_k − H_j|` for `W = I + εQ`; second order in `ε`.
pub fn good_channel_expansion_check(q: &DMatrix<f64>, eps: f64) -> Result<f64> {
    let w = good_channel(q, eps)?;
    let terms = muroga_terms(&w)?;
    let n = w.n();
    let h = &terms.row_entropies;
    Ok((0..n)
        .map(|j| ((0..n).map(|k| terms.inverse[(j, k)] * h[k]).sum::<f64>() - h[j]).abs())
        .fold(0.0, f64::max))
}

/// First-order value `−ε[Q_jj(1 − log ε) + Σ_{ℓ≠j} Q_jℓ log Q_jℓ]` shared by
/// `H_j` and `Σ_k M_jk H_k` in the good-channel regime.
pub fn good_channel_first_order(q: &DMatrix<f64>, eps: f64) -> Result<Vec<f64>> {
    validate_generator(q)?;
    let n = q.nrows();
    Ok((0..n)
        .map(|j| {
            let tail: f64 = (0..n)
                .filter(|&l| l != j && q[(j, l)] > 0.0)
                .map(|l| q[(j, l)] * q[(j, l)].ln())
                .sum();
            -eps * (q[(j, j)] * (1.0 - eps.ln()) + tail)
        })
        .collect())
}
