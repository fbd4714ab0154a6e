use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Biodmc,
    Constrained3,
    Convex3,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biodmc" => Ok(Self::Biodmc),
            "constrained3" => Ok(Self::Constrained3),
            "convex3" => Ok(Self::Convex3),
            other => Err(Error::InvalidArgument(format!("unknown family {other:?}"))),
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Biodmc => "biodmc",
            Self::Constrained3 => "constrained3",
            Self::Convex3 => "convex3",
        })
    }
}

fn check_unit(name: &'static str, value: f64, open: bool) -> Result<()> {
    let ok = if open { value > 0.0 && value < 1.0 } else { (0.0..=1.0).contains(&value) };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value })
    }
}

/// Binary input/output channel `[[1−a, a], [b, 1−b]]`; `(a, b) = (W_12, W_21)`.
pub fn biodmc(a: f64, b: f64) -> Result<ChannelMatrix> {
    check_unit("a", a, true)?;
    check_unit("b", b, true)?;
    ChannelMatrix::new(&[vec![1.0 - a, a], vec![b, 1.0 - b]])
}

/// Fixed entries of the 3×3 family whose first two rows keep their diagonal
/// (successful-transmission) probabilities and split the rest by `u` and `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedParams {
    #[serde(rename = "W11")]
    pub w11: f64,
    #[serde(rename = "W22")]
    pub w22: f64,
    #[serde(rename = "W31")]
    pub w31: f64,
    #[serde(rename = "W32")]
    pub w32: f64,
    #[serde(rename = "W33")]
    pub w33: f64,
}

impl Default for ConstrainedParams {
    fn default() -> Self {
        Self { w11: 0.35, w22: 0.05, w31: 0.15, w32: 0.2, w33: 0.65 }
    }
}

impl ConstrainedParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w11, self.w22, self.w31, self.w32, self.w33];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if !(self.w11 > 0.0 && self.w11 < 1.0 && self.w22 > 0.0 && self.w22 < 1.0) {
            return Err(Error::InvalidParams("W11 and W22 must lie in (0, 1)".into()));
        }
        let row3 = [self.w31, self.w32, self.w33];
        if row3.iter().any(|&x| x < 0.0) || (row3.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("row 3 {row3:?} is not a probability vector")));
        }
        Ok(())
    }
}

/// ```text
/// W(u, v) = [ W11            (1−W11)·u   (1−W11)·(1−u) ]
///           [ (1−W22)·(1−v)  W22         (1−W22)·v     ]
///           [ W31            W32         W33           ]
/// ```
pub fn family_constrained(u: f64, v: f64, params: &ConstrainedParams) -> Result<ChannelMatrix> {
    params.validate()?;
    check_unit("u", u, false)?;
    check_unit("v", v, false)?;
    let ConstrainedParams { w11, w22, w31, w32, w33 } = *params;
    ChannelMatrix::new(&[
        vec![w11, (1.0 - w11) * u, (1.0 - w11) * (1.0 - u)],
        vec![(1.0 - w22) * (1.0 - v), w22, (1.0 - w22) * v],
        vec![w31, w32, w33],
    ])
}

/// Raw (serializable) parameters of the convex-combination family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexParams {
    pub a: f64,
    #[serde(rename = "Wu")]
    pub wu: Vec<Vec<f64>>,
    #[serde(rename = "Wv")]
    pub wv: Vec<Vec<f64>>,
}

impl Default for ConvexParams {
    fn default() -> Self {
        Self {
            a: 0.2,
            wu: vec![vec![0.25, 0.14, 0.61], vec![0.29, 0.67, 0.04], vec![0.08, 0.74, 0.18]],
            wv: vec![vec![0.31, 0.04, 0.65], vec![0.50, 0.10, 0.40], vec![0.01, 0.58, 0.41]],
        }
    }
}

/// `W(u, v) = c⁰·11ᵀ/n + cᵘ·Wu + cᵛ·Wv` with `c⁰ = 1 − a(u+v−1)`,
/// `cᵘ = a(u−½)`, `cᵛ = a(v−½)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexFamily {
    pub a: f64,
    pub wu: ChannelMatrix,
    pub wv: ChannelMatrix,
}

impl ConvexFamily {
    pub fn new(a: f64, wu: ChannelMatrix, wv: ChannelMatrix) -> Result<Self> {
        if wu.n() != wv.n() {
            return Err(Error::DimensionMismatch { expected: wu.n(), found: wv.n() });
        }
        if !a.is_finite() {
            return Err(Error::InvalidParams(format!("a = {a}")));
        }
        let family = Self { a, wu, wv };
        // Entries are affine in (u, v), so the corners bound them on the square.
        for (u, v) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            let m = family.combination(u, v);
            if let Some(idx) = m.iter().position(|&x| x < 0.0) {
                let n = m.nrows();
                return Err(Error::NegativeEntry { row: idx % n, col: idx / n, value: m[idx] });
            }
        }
        Ok(family)
    }

    pub fn from_params(params: &ConvexParams) -> Result<Self> {
        let wu = ChannelMatrix::new(&params.wu).map_err(|e| Error::InvalidParams(format!("Wu: {e}")))?;
        let wv = ChannelMatrix::new(&params.wv).map_err(|e| Error::InvalidParams(format!("Wv: {e}")))?;
        Self::new(params.a, wu, wv)
    }

    pub fn coefficients(&self, u: f64, v: f64) -> [f64; 3] {
        let a = self.a;
        [1.0 - a * (u + v - 1.0), a * (u - 0.5), a * (v - 0.5)]
    }

    fn combination(&self, u: f64, v: f64) -> DMatrix<f64> {
        let n = self.wu.n();
        let [c0, cu, cv] = self.coefficients(u, v);
        DMatrix::from_element(n, n, c0 / n as f64) + self.wu.matrix() * cu + self.wv.matrix() * cv
    }

    pub fn evaluate(&self, u: f64, v: f64) -> Result<ChannelMatrix> {
        check_unit("u", u, false)?;
        check_unit("v", v, false)?;
        ChannelMatrix::from_matrix(self.combination(u, v))
    }
}

pub fn family_convex(u: f64, v: f64, a: f64, wu: &ChannelMatrix, wv: &ChannelMatrix) -> Result<ChannelMatrix> {
    ConvexFamily::new(a, wu.clone(), wv.clone())?.evaluate(u, v)
}

/// A two-parameter channel family over the unit square.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelFamily {
    Biodmc,
    Constrained3(ConstrainedParams),
    Convex3(ConvexFamily),
}

impl ChannelFamily {
    /// The family with its published default parameters.
    pub fn default_for(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::Biodmc => Self::Biodmc,
            FamilyKind::Constrained3 => Self::Constrained3(ConstrainedParams::default()),
            FamilyKind::Convex3 => Self::Convex3(
                ConvexFamily::from_params(&ConvexParams::default()).expect("default convex parameters are valid"),
            ),
        }
    }

    /// Builds a family from a JSON parameter object. An empty object selects
    /// the defaults; `biodmc` accepts only the empty object.
    pub fn from_json(kind: FamilyKind, json: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        let object = value
            .as_object()
            .ok_or_else(|| Error::InvalidParams("parameters must be a JSON object".into()))?;
        if object.is_empty() {
            return Ok(Self::default_for(kind));
        }
        let invalid = |e: serde_json::Error| Error::InvalidParams(e.to_string());
        match kind {
            FamilyKind::Biodmc => Err(Error::InvalidParams("biodmc takes no parameters".into())),
            FamilyKind::Constrained3 => {
                let params: ConstrainedParams = serde_json::from_value(value).map_err(invalid)?;
                params.validate()?;
                Ok(Self::Constrained3(params))
            }
            FamilyKind::Convex3 => {
                let params: ConvexParams = serde_json::from_value(value).map_err(invalid)?;
                Ok(Self::Convex3(ConvexFamily::from_params(&params)?))
            }
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Self::Biodmc => FamilyKind::Biodmc,
            Self::Constrained3(_) => FamilyKind::Constrained3,
            Self::Convex3(_) => FamilyKind::Convex3,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            Self::Biodmc => 2,
            Self::Constrained3(_) => 3,
            Self::Convex3(f) => f.wu.n(),
        }
    }

    pub fn evaluate(&self, u: f64, v: f64) -> Result<ChannelMatrix> {
        match self {
            Self::Biodmc => biodmc(u, v),
            Self::Constrained3(params) => family_constrained(u, v, params),
            Self::Convex3(family) => family.evaluate(u, v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::blahut_arimoto;

    fn close(w: &ChannelMatrix, rows: &[[f64; 3]]) -> bool {
        rows.iter()
            .enumerate()
            .all(|(j, r)| r.iter().enumerate().all(|(k, x)| (w.get(j, k) - x).abs() < 1e-15))
    }

    #[test]
    fn biodmc_examples() {
        let w = biodmc(0.5, 0.5).unwrap();
        assert!(w.rows_identical(0.0));
        assert_eq!(biodmc(0.1, 0.1).unwrap(), ChannelMatrix::binary_symmetric(0.1).unwrap());
        let corner = biodmc(0.1, 0.9).unwrap();
        assert!(corner.rows_identical(1e-15));
        assert!(blahut_arimoto(&corner, 1e-12, 10).unwrap().capacity < 1e-15);
        assert!(matches!(biodmc(0.0, 0.5), Err(Error::OutOfRange { name: "a", .. })));
    }

    #[test]
    fn constrained_examples() {
        let p = ConstrainedParams::default();
        let w = family_constrained(0.5, 0.5, &p).unwrap();
        assert!(close(&w, &[[0.35, 0.325, 0.325], [0.475, 0.05, 0.475], [0.15, 0.2, 0.65]]));
        assert_eq!(family_constrained(0.0, 0.3, &p).unwrap().get(0, 1), 0.0);
        let w = family_constrained(1.0, 1.0, &p).unwrap();
        assert!(close(&w, &[[0.35, 0.65, 0.0], [0.0, 0.05, 0.95], [0.15, 0.2, 0.65]]));
        let bad = ConstrainedParams { w33: 0.5, ..p };
        assert!(matches!(family_constrained(0.5, 0.5, &bad), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn convex_examples() {
        let ChannelFamily::Convex3(family) = ChannelFamily::default_for(FamilyKind::Convex3) else {
            unreachable!()
        };
        let center = family.evaluate(0.5, 0.5).unwrap();
        assert!(center.matrix().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));

        let w = family.evaluate(1.0, 0.5).unwrap();
        let expected = DMatrix::from_element(3, 3, 0.9 / 3.0) + family.wu.matrix() * 0.1;
        assert!((w.matrix() - expected).amax() < 1e-15);

        for i in 0..100 {
            let (u, v) = ((i as f64 * 0.37).fract(), (i as f64 * 0.73).fract());
            let c = family.coefficients(u, v);
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }

        let too_large = ConvexFamily::new(5.0, family.wu.clone(), family.wv.clone());
        assert!(matches!(too_large, Err(Error::NegativeEntry { .. })));
    }

    #[test]
    fn params_from_json() {
        let f = ChannelFamily::from_json(FamilyKind::Constrained3, "{}").unwrap();
        assert_eq!(f, ChannelFamily::Constrained3(ConstrainedParams::default()));
        let f = ChannelFamily::from_json(
            FamilyKind::Constrained3,
            r#"{"W11": 0.4, "W22": 0.1, "W31": 0.2, "W32": 0.2, "W33": 0.6}"#,
        )
        .unwrap();
        assert_eq!(f.evaluate(0.5, 0.5).unwrap().get(0, 0), 0.4);
        assert!(matches!(ChannelFamily::from_json(FamilyKind::Biodmc, "{oops"), Err(Error::Parse(_))));
        assert!(matches!(
            ChannelFamily::from_json(FamilyKind::Biodmc, r#"{"a": 1}"#),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            ChannelFamily::from_json(FamilyKind::Constrained3, r#"{"W11": 0.4}"#),
            Err(Error::InvalidParams(_))
        ));
    }
}
