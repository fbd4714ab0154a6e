//! Channel matrices, probability vectors and the information measures built
//! on them.
//!
//! All logarithms are natural, so every entropy-like quantity is in nats.
//! Terms of the form `0 · log 0` are skipped outright rather than regularized.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums of a validated channel are within this distance of one.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Raw input rows within this distance of one are renormalized instead of rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Distributions must sum to one within this tolerance.
pub const DISTRIBUTION_TOL: f64 = 1e-12;

/// A square row-stochastic matrix `W[j][k] = P(y_k | x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<f64>,
    renormalized: bool,
}

impl ChannelMatrix {
    /// Validates a raw row-major matrix.
    ///
    /// Rows whose sum is off by more than [`ROW_SUM_TOL`] but at most
    /// [`RENORMALIZE_TOL`] are rescaled, and [`ChannelMatrix::renormalized`]
    /// reports that this happened.
    pub fn new(raw: &[Vec<f64>]) -> Result<Self> {
        let n = raw.len();
        for (row, values) in raw.iter().enumerate() {
            if values.len() != n {
                return Err(Error::NonSquare { rows: n, row, cols: values.len() });
            }
        }
        let entries = DMatrix::from_fn(n, n, |j, k| raw[j][k]);
        Self::from_matrix(entries)
    }

    pub fn from_matrix(mut entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NonSquare {
                rows: entries.nrows(),
                row: 0,
                cols: entries.ncols(),
            });
        }
        let n = entries.nrows();
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        let mut renormalized = false;
        for j in 0..n {
            let mut sum = 0.0;
            for k in 0..n {
                let value = entries[(j, k)];
                if !value.is_finite() {
                    return Err(Error::NonFinite { row: j, col: k });
                }
                if value < 0.0 {
                    return Err(Error::NegativeEntry { row: j, col: k, value });
                }
                sum += value;
            }
            let deviation = (sum - 1.0).abs();
            if deviation > RENORMALIZE_TOL {
                return Err(Error::RowSumViolation { row: j, sum });
            }
            if deviation > ROW_SUM_TOL {
                entries.row_mut(j).unscale_mut(sum);
                renormalized = true;
            }
        }
        Ok(Self { entries, renormalized })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    /// The product-law channel `1q`: every row equals `q`.
    pub fn product_law(q: &Distribution) -> Result<Self> {
        let n = q.len();
        Self::from_matrix(DMatrix::from_fn(n, n, |_, k| q[k]))
    }

    /// Binary symmetric channel with crossover probability `eps`.
    pub fn binary_symmetric(eps: f64) -> Result<Self> {
        Self::new(&[vec![1.0 - eps, eps], vec![eps, 1.0 - eps]])
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[(j, k)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.entries.row(j).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|j| self.row(j)).collect()
    }

    /// Whether construction rescaled any row.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    /// True when all rows agree entrywise within `tol` (the zero-capacity case).
    pub fn rows_identical(&self, tol: f64) -> bool {
        let n = self.n();
        (1..n).all(|j| (0..n).all(|k| (self.get(j, k) - self.get(0, k)).abs() <= tol))
    }
}

/// Validates a raw square matrix into a [`ChannelMatrix`].
pub fn validate_channel(raw: &[Vec<f64>]) -> Result<ChannelMatrix> {
    ChannelMatrix::new(raw)
}

/// What a probability vector stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Input,
    Output,
    Invariant,
    CapacityAchieving,
}

/// A probability vector over an `n`-symbol alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
    role: Role,
}

impl Distribution {
    pub fn new(weights: Vec<f64>, role: Role) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!("weight {i} = {w}")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {sum}")));
        }
        Ok(Self { weights, role })
    }

    /// Rescales nonnegative weights to sum to one. Used for vectors produced
    /// internally whose sum is one only up to accumulated rounding.
    pub fn normalized(mut weights: Vec<f64>, role: Role) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalize weights {weights:?}"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self { weights, role })
    }

    pub fn uniform(n: usize, role: Role) -> Self {
        Self { weights: vec![1.0 / n as f64; n], role }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

fn check_dims(w: &ChannelMatrix, p: &Distribution) -> Result<()> {
    if w.n() != p.len() {
        return Err(Error::DimensionMismatch { expected: w.n(), found: p.len() });
    }
    Ok(())
}

/// `q = pW`, the law of the channel output.
pub fn output_distribution(w: &ChannelMatrix, p: &Distribution) -> Result<Distribution> {
    check_dims(w, p)?;
    Distribution::normalized(output_weights(w, p.weights()), Role::Output)
}

pub(crate) fn output_weights(w: &ChannelMatrix, p: &[f64]) -> Vec<f64> {
    let n = w.n();
    (0..n)
        .map(|k| (0..n).map(|j| p[j] * w.get(j, k)).sum())
        .collect()
}

/// Joint law `V[j][k] = p_j W[j][k]`.
pub fn joint_distribution(w: &ChannelMatrix, p: &Distribution) -> Result<DMatrix<f64>> {
    check_dims(w, p)?;
    Ok(DMatrix::from_fn(w.n(), w.n(), |j, k| p[j] * w.get(j, k)))
}

/// `-Σ x log x` over a slice, skipping zeros.
pub(crate) fn shannon(weights: impl IntoIterator<Item = f64>) -> f64 {
    -weights
        .into_iter()
        .filter(|&x| x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}

/// Shannon entropy in nats.
pub fn entropy(p: &Distribution) -> f64 {
    shannon(p.weights().iter().copied())
}

/// Kullback-Leibler divergence `D(p‖q)` in nats.
pub fn relative_entropy(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    kl_divergence(p.weights(), q.weights())
}

/// Slice form of [`relative_entropy`] for vectors that are not wrapped as
/// distributions (rows of a channel, flattened joint laws).
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut d = 0.0;
    for (index, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::SupportViolation { index });
            }
            d += pi * (pi / qi).ln();
        }
    }
    Ok(d)
}

/// `I(X;Y)` in nats for input law `p` through `W`.
pub fn mutual_information(w: &ChannelMatrix, p: &Distribution) -> Result<f64> {
    check_dims(w, p)?;
    Ok(mutual_information_raw(w, p.weights()))
}

pub(crate) fn mutual_information_raw(w: &ChannelMatrix, p: &[f64]) -> f64 {
    let n = w.n();
    let q = output_weights(w, p);
    let mut total = 0.0;
    for j in 0..n {
        if p[j] <= 0.0 {
            continue;
        }
        for k in 0..n {
            let wjk = w.get(j, k);
            if wjk > 0.0 {
                // V/(p q) = W/q
                total += p[j] * wjk * (wjk / q[k]).ln();
            }
        }
    }
    total.max(0.0)
}

/// Per-row entropies `H_j = -Σ_k W[j][k] log W[j][k]`.
pub fn row_entropies(w: &ChannelMatrix) -> Vec<f64> {
    (0..w.n())
        .map(|j| shannon(w.matrix().row(j).iter().copied()))
        .collect()
}

/// The standard measures of a channel under a given input law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoMeasures {
    /// `H(p)` of the input.
    pub input_entropy: f64,
    /// `H(q)` of the output.
    pub output_entropy: f64,
    /// `D(V ‖ p⊗q)`.
    pub relative_entropy: f64,
    pub mutual_information: f64,
    pub row_entropies: Vec<f64>,
}

impl InfoMeasures {
    pub fn compute(w: &ChannelMatrix, p: &Distribution) -> Result<Self> {
        let q = output_distribution(w, p)?;
        let v = joint_distribution(w, p)?;
        let n = w.n();
        let joint: Vec<f64> = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| v[(j, k)]).collect();
        let product: Vec<f64> = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| p[j] * q[k]).collect();
        Ok(Self {
            input_entropy: entropy(p),
            output_entropy: entropy(&q),
            relative_entropy: kl_divergence(&joint, &product)?,
            mutual_information: mutual_information(w, p)?,
            row_entropies: row_entropies(w),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec(), Role::Input).unwrap()
    }

    #[test]
    fn validate_accepts_stochastic_and_rejects_bad_rows() {
        assert!(validate_channel(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_ok());
        assert!(validate_channel(&[vec![0.5, 0.5], vec![0.5, 0.5]]).is_ok());
        assert!(matches!(
            validate_channel(&[vec![0.9, 0.2], vec![0.1, 0.9]]),
            Err(Error::RowSumViolation { row: 0, .. })
        ));
        assert!(matches!(
            validate_channel(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0]]),
            Err(Error::NonSquare { .. })
        ));
        assert!(matches!(validate_channel(&[vec![1.0]]), Err(Error::TooSmall(1))));
        assert!(matches!(
            validate_channel(&[vec![1.5, -0.5], vec![0.0, 1.0]]),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn small_row_drift_is_renormalized_and_flagged() {
        let w = validate_channel(&[vec![0.5 + 5e-10, 0.5], vec![0.25, 0.75]]).unwrap();
        assert!(w.renormalized());
        assert!((w.get(0, 0) + w.get(0, 1) - 1.0).abs() < 1e-15);
        let exact = validate_channel(&[vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        assert!(!exact.renormalized());
    }

    #[test]
    fn output_distribution_examples() {
        let id = ChannelMatrix::identity(2).unwrap();
        let q = output_distribution(&id, &dist(&[0.3, 0.7])).unwrap();
        assert_eq!(q.weights(), &[0.3, 0.7]);
        assert_eq!(q.role(), Role::Output);

        let w = validate_channel(&[vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let q = output_distribution(&w, &dist(&[0.9, 0.1])).unwrap();
        assert!((q[0] - 0.2).abs() < 1e-15 && (q[1] - 0.8).abs() < 1e-15);

        let bsc = ChannelMatrix::binary_symmetric(0.1).unwrap();
        let q = output_distribution(&bsc, &dist(&[0.5, 0.5])).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-15);

        assert!(matches!(
            output_distribution(&bsc, &dist(&[0.2, 0.3, 0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn joint_distribution_examples() {
        let id = ChannelMatrix::identity(2).unwrap();
        let v = joint_distribution(&id, &dist(&[0.3, 0.7])).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.7]));

        let w = validate_channel(&[vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let v = joint_distribution(&w, &dist(&[0.5, 0.5])).unwrap();
        for j in 0..2 {
            assert!((v[(j, 0)] - 0.1).abs() < 1e-15 && (v[(j, 1)] - 0.4).abs() < 1e-15);
        }

        let bsc = ChannelMatrix::binary_symmetric(0.1).unwrap();
        let v = joint_distribution(&bsc, &dist(&[0.5, 0.5])).unwrap();
        let expected = [0.45, 0.05, 0.05, 0.45];
        for (a, b) in v.transpose().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((v.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&dist(&[1.0, 0.0])), 0.0);
        assert!((entropy(&dist(&[0.5, 0.5])) - std::f64::consts::LN_2).abs() < 1e-15);
        let direct = -0.1 * 0.1f64.ln() - 0.9 * 0.9f64.ln();
        assert!((entropy(&dist(&[0.1, 0.9])) - direct).abs() < 1e-15);
        assert!((direct - 0.325083).abs() < 1e-6);
    }

    #[test]
    fn relative_entropy_examples() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
        let d = relative_entropy(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(
            relative_entropy(&dist(&[0.5, 0.5]), &dist(&[0.0, 1.0])),
            Err(Error::SupportViolation { index: 0 })
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let w = validate_channel(&[vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        assert!(mutual_information(&w, &dist(&[0.37, 0.63])).unwrap().abs() < 1e-15);

        let id = ChannelMatrix::identity(2).unwrap();
        let i = mutual_information(&id, &dist(&[0.5, 0.5])).unwrap();
        assert!((i - std::f64::consts::LN_2).abs() < 1e-15);

        let bsc = ChannelMatrix::binary_symmetric(0.1).unwrap();
        let i = mutual_information(&bsc, &dist(&[0.5, 0.5])).unwrap();
        let analytic = std::f64::consts::LN_2 + 0.1 * 0.1f64.ln() + 0.9 * 0.9f64.ln();
        assert!((i - analytic).abs() < 1e-15);
        assert!((i - 0.368064).abs() < 1e-6);
    }

    #[test]
    fn row_entropy_examples() {
        assert_eq!(row_entropies(&ChannelMatrix::identity(3).unwrap()), vec![0.0; 3]);
        let third = 1.0 / 3.0;
        let uniform = validate_channel(&vec![vec![third; 3]; 3]).unwrap();
        for h in row_entropies(&uniform) {
            assert!((h - 3f64.ln()).abs() < 1e-15);
        }
        let h = row_entropies(&ChannelMatrix::binary_symmetric(0.1).unwrap());
        assert!((h[0] - 0.325083).abs() < 1e-6 && h[0] == h[1]);
    }

    #[test]
    fn info_measures_bundle_is_consistent() {
        let w = validate_channel(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.8, 0.1], vec![0.3, 0.3, 0.4]]).unwrap();
        let m = InfoMeasures::compute(&w, &dist(&[0.2, 0.5, 0.3])).unwrap();
        assert!((m.relative_entropy - m.mutual_information).abs() < 1e-14);
        assert!(m.mutual_information <= m.input_entropy.min(m.output_entropy));
    }
}
