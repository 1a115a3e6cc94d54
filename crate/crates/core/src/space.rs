//! Finite-dimensional normed spaces and the value types that live in them.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exponent `p` of an ℓ_p norm, `1 <= p <= ∞`. Serialized as a number, or the
/// string `"inf"` for the sup-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidSpace(format!("exponent must satisfy 1 <= p <= inf, got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) if p == 2.0 => Exponent::Finite(2.0),
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn is_one(self) -> bool {
        self == Exponent::Finite(1.0)
    }

    pub fn is_two(self) -> bool {
        self == Exponent::Finite(2.0)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "∞") => f64::INFINITY,
            Raw::Text(t) => return Err(serde::de::Error::custom(format!("bad exponent {t:?}"))),
        };
        Exponent::new(p).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Lp { p: Exponent },
    /// Minkowski gauge of `conv(generators)`.
    Gauge { generators: Vec<Vec<f64>>, symmetric: bool },
    /// Ordered weighted ℓ₁ norm `Σ wᵢ |x|₍ᵢ₎` (top-k / Lorentz family).
    Symmetric { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceSpec {
    dimension: usize,
    #[serde(flatten)]
    kind: SpaceKind,
}

#[derive(Deserialize)]
struct RawSpaceSpec {
    dimension: usize,
    #[serde(flatten)]
    kind: SpaceKind,
}

impl<'de> Deserialize<'de> for SpaceSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpaceSpec::deserialize(d)?;
        SpaceSpec::new(raw.dimension, raw.kind).map_err(serde::de::Error::custom)
    }
}

impl SpaceSpec {
    pub fn new(dimension: usize, kind: SpaceKind) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        match &kind {
            SpaceKind::Lp { .. } => {}
            SpaceKind::Gauge { generators, .. } => {
                if generators.is_empty() {
                    return Err(Error::InvalidSpace("gauge needs generators".into()));
                }
                for g in generators {
                    if g.len() != dimension {
                        return Err(Error::DimensionMismatch { expected: dimension, found: g.len() });
                    }
                    if g.iter().any(|x| !x.is_finite()) {
                        return Err(Error::NonFinite);
                    }
                }
            }
            SpaceKind::Symmetric { weights } => {
                if weights.len() != dimension {
                    return Err(Error::DimensionMismatch { expected: dimension, found: weights.len() });
                }
                if !(weights[0] > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InvalidSpace("symmetric weights must be nonnegative with w[0] > 0".into()));
                }
                if weights.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::InvalidSpace("symmetric weights must be nonincreasing".into()));
                }
            }
        }
        let space = SpaceSpec { dimension, kind };
        if let SpaceKind::Gauge { generators, symmetric } = &space.kind {
            crate::normed::polyhedral::validate_gauge(dimension, generators, *symmetric)?;
        }
        Ok(space)
    }

    pub fn lp(p: f64, dimension: usize) -> Result<Self> {
        Self::new(dimension, SpaceKind::Lp { p: Exponent::new(p)? })
    }

    pub fn gauge(generators: Vec<Vec<f64>>, symmetric: bool) -> Result<Self> {
        let dimension = generators.first().map_or(0, Vec::len);
        Self::new(dimension, SpaceKind::Gauge { generators, symmetric })
    }

    pub fn symmetric(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights.len(), SpaceKind::Symmetric { weights })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// `Some(p)` for ℓ_p spaces.
    pub fn exponent(&self) -> Option<Exponent> {
        match self.kind {
            SpaceKind::Lp { p } => Some(p),
            _ => None,
        }
    }

    /// True when the unit ball is a polytope, so LP routes are exact.
    pub fn is_polyhedral(&self) -> bool {
        match self.kind {
            SpaceKind::Lp { p } => p.is_one() || p == Exponent::Infinity,
            _ => true,
        }
    }

    /// Norm invariant under coordinate permutations and sign changes.
    pub fn is_permutation_symmetric(&self) -> bool {
        matches!(self.kind, SpaceKind::Lp { .. } | SpaceKind::Symmetric { .. })
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: x.len() });
        }
        Ok(())
    }

    pub fn short_name(&self) -> String {
        match &self.kind {
            SpaceKind::Lp { p } => format!("lp({p})^{}", self.dimension),
            SpaceKind::Gauge { generators, .. } => {
                format!("gauge[{}]^{}", generators.len(), self.dimension)
            }
            SpaceKind::Symmetric { .. } => format!("symmetric^{}", self.dimension),
        }
    }
}

/// A point of a finite-dimensional space. Finite coordinates only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Vector(coords))
    }

    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Vector(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * s).collect())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// A linear functional with its certified dual norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFunctional {
    pub coefficients: Vec<f64>,
    pub certified_dual_norm: f64,
}

impl DualFunctional {
    pub fn apply(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x)
    }
}

/// Convex-combination coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexWeights(pub Vec<f64>);

impl SimplexWeights {
    pub fn uniform(n: usize) -> Self {
        SimplexWeights(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        SimplexWeights(w)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        let sum: f64 = self.0.iter().sum();
        self.0.iter().all(|w| *w >= -tol) && (sum - 1.0).abs() <= tol
    }

    /// `Σ wᵢ pᵢ`.
    pub fn combine(&self, points: &[Vector]) -> Vec<f64> {
        let d = points.first().map_or(0, |p| p.len());
        let mut out = vec![0.0; d];
        for (w, p) in self.0.iter().zip(points) {
            if *w != 0.0 {
                axpy(&mut out, *w, p);
            }
        }
        out
    }
}

/// Output of every certified solve: the optimum lies in `[value - gap, value]`.
///
/// `value` is attained by the primal witness (`weights`, plus
/// `span_coefficients` for chain problems); `functional` is a dual-feasible
/// witness whose objective is `value - gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveCertificate {
    pub value: f64,
    pub gap: f64,
    pub weights: Vec<SimplexWeights>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub span_coefficients: Vec<f64>,
    pub functional: Option<DualFunctional>,
    pub converged: bool,
}

impl SolveCertificate {
    pub fn lower(&self) -> f64 {
        (self.value - self.gap).max(0.0)
    }

    pub(crate) fn scale(mut self, s: f64) -> Self {
        self.value *= s;
        self.gap *= s;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Feasibility tolerance.
    pub tol: f64,
    /// Target certificate gap for iterative solvers.
    pub gap_target: f64,
    /// Iteration cap for first-order solvers.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-9, gap_target: 1e-8, max_iter: 200_000 }
    }
}

/// A finite labeled list of vectors in one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub space: SpaceSpec,
    pub points: Vec<Vector>,
    #[serde(default)]
    pub labels: Vec<String>,
}

impl PointSet {
    pub fn new(space: SpaceSpec, points: Vec<Vector>) -> Result<Self> {
        for p in &points {
            space.check(p)?;
        }
        let labels = (0..points.len()).map(|i| format!("x{i}")).collect();
        Ok(PointSet { space, points, labels })
    }

    pub fn from_rows(space: SpaceSpec, rows: Vec<Vec<f64>>) -> Result<Self> {
        let pts = rows.into_iter().map(Vector::new).collect::<Result<Vec<_>>>()?;
        Self::new(space, pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scaled(&self, s: f64) -> PointSet {
        PointSet {
            space: self.space.clone(),
            points: self.points.iter().map(|p| p.scaled(s)).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn subset(&self, idx: &[usize]) -> PointSet {
        PointSet {
            space: self.space.clone(),
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels.get(i).cloned().unwrap_or_default()).collect(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_json_forms() {
        let s = SpaceSpec::lp(f64::INFINITY, 3).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"dimension":3,"kind":"lp","p":"inf"}"#);
        let back: SpaceSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let s2: SpaceSpec = serde_json::from_str(r#"{"dimension":2,"kind":"lp","p":1.5}"#).unwrap();
        assert_eq!(s2.exponent(), Some(Exponent::Finite(1.5)));
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(SpaceSpec::lp(0.5, 2).is_err());
        assert!(SpaceSpec::lp(2.0, 0).is_err());
        assert!(SpaceSpec::symmetric(vec![1.0, 2.0]).is_err());
        assert!(SpaceSpec::symmetric(vec![0.0, 0.0]).is_err());
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"dimension":2,"kind":"lp","p":0.3}"#).is_err());
        // segment does not span the plane
        assert!(SpaceSpec::gauge(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], true).is_err());
        // symmetric flag set on a non-symmetric triangle
        let tri = vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        assert!(SpaceSpec::gauge(tri.clone(), true).is_err());
        assert!(SpaceSpec::gauge(tri, false).is_ok());
    }

    #[test]
    fn vector_rejects_nan() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(serde_json::from_str::<Vector>("[1.0, 2.0]").is_ok());
    }

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinity);
        assert_eq!(Exponent::Infinity.conjugate(), Exponent::Finite(1.0));
        assert_eq!(Exponent::Finite(3.0).conjugate(), Exponent::Finite(1.5));
    }
}
