//! JSON descriptions of warps and manifolds.

use serde::{Deserialize, Serialize};

use super::warp::{KwProfile, PiecewiseWarp, Warp};
use super::ModelManifold;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WarpSpec {
    Euclidean,
    Sphere,
    Hyperbolic,
    Constant { value: f64 },
    KwZeta1 { alpha: f64 },
    KwZeta2 { alpha: f64 },
    KwEta { alpha: f64 },
    /// `(b + r²)^((beta+3-m)/2) + c`; `m` is taken from the manifold.
    KwF { b: f64, c: f64, beta: f64 },
    CustomPiecewise { knots: Vec<[f64; 4]> },
}

impl WarpSpec {
    pub fn build(&self, m: usize) -> Result<Warp> {
        Ok(match self {
            WarpSpec::Euclidean => Warp::Euclidean,
            WarpSpec::Sphere => Warp::Sphere,
            WarpSpec::Hyperbolic => Warp::Hyperbolic,
            WarpSpec::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(Error::Argument(format!("constant warp {value} must be positive")));
                }
                Warp::Constant(*value)
            }
            WarpSpec::KwZeta1 { alpha } => Warp::KwZeta1(KwProfile::new(*alpha)?),
            WarpSpec::KwZeta2 { alpha } => Warp::KwZeta2(KwProfile::new(*alpha)?),
            WarpSpec::KwEta { alpha } => Warp::KwEta(KwProfile::new(*alpha)?),
            WarpSpec::KwF { b, c, beta } => {
                if !(*b > 0.0 && *c > 0.0) {
                    return Err(Error::Argument(format!("kw-f needs b, c > 0 (got {b}, {c})")));
                }
                Warp::KwF { b: *b, c: *c, exponent: (beta + 3.0 - m as f64) / 2.0 }
            }
            WarpSpec::CustomPiecewise { knots } => Warp::Piecewise(PiecewiseWarp::new(knots)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    /// `"rotsym"` or `"kw"`.
    pub kind: String,
    pub m: usize,
    pub eta: WarpSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<WarpSpec>,
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<ModelManifold> {
        let eta = self.eta.build(self.m)?;
        match self.kind.as_str() {
            "rotsym" => {
                if self.f.is_some() {
                    return Err(Error::Argument("rotsym manifolds take no f warp".into()));
                }
                ModelManifold::rotationally_symmetric(self.m, eta)
            }
            "kw" => {
                let f = self.f.as_ref().ok_or_else(|| Error::Argument("kw manifolds need an f warp".into()))?;
                ModelManifold::doubly_warped(self.m, eta, f.build(self.m)?)
            }
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("manifold spec: {e}")))
    }

    pub fn euclidean(m: usize) -> Self {
        Self { kind: "rotsym".into(), m, eta: WarpSpec::Euclidean, f: None }
    }
}
