//! Non-symmetric metric fields and the bundle of objects derived from them.

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Evaluator, Expr, ExprPool};
use crate::scalar::Scalar;
use crate::tensor::{Down, TensorField};
use crate::tensorcalc;

/// Determinant magnitude at or below which a sample point is rejected.
pub const SINGULAR_DET: f64 = 1e-8;

/// Coordinate names plus the N×N grid of `G_ij(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricField {
    coords: Vec<String>,
    components: Vec<Expr>,
}

impl MetricField {
    pub fn new(coords: Vec<String>, components: Vec<Expr>) -> Result<Self> {
        let n = coords.len();
        if components.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "metric has {} components, expected {}",
                components.len(),
                n * n
            )));
        }
        Ok(MetricField { coords, components })
    }

    /// Parses a row-major grid of expression strings.
    pub fn parse<S: AsRef<str>>(
        pool: &mut ExprPool,
        coords: &[String],
        rows: &[Vec<S>],
    ) -> Result<Self> {
        let n = coords.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "metric must be {n}x{n} to match the coordinate list"
            )));
        }
        let mut components = Vec::with_capacity(n * n);
        for row in rows {
            for text in row {
                components.push(parse_expr(pool, text.as_ref(), coords)?);
            }
        }
        Self::new(coords.to_vec(), components)
    }

    /// Metric built from a closure over `(i, j)`.
    pub fn from_fn(
        pool: &mut ExprPool,
        coords: Vec<String>,
        mut f: impl FnMut(&mut ExprPool, usize, usize) -> Expr,
    ) -> Self {
        let n = coords.len();
        let mut components = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                components.push(f(pool, i, j));
            }
        }
        MetricField { coords, components }
    }

    /// `δ_ij` on the given coordinates.
    pub fn flat(pool: &mut ExprPool, coords: Vec<String>) -> Self {
        Self::from_fn(
            pool,
            coords,
            |p, i, j| if i == j { p.one() } else { p.zero() },
        )
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn get(&self, i: usize, j: usize) -> Expr {
        self.components[i * self.dim() + j]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn as_tensor(&self) -> TensorField {
        TensorField::from_components(self.dim(), &[Down, Down], self.components.clone())
            .expect("metric shape checked at construction")
    }

    /// Component-wise map, e.g. a conformal rescaling.
    pub fn map(&self, pool: &mut ExprPool, mut f: impl FnMut(&mut ExprPool, Expr) -> Expr) -> Self {
        MetricField {
            coords: self.coords.clone(),
            components: self.components.iter().map(|&e| f(pool, e)).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Everything the connection-level formulas need, built once per metric.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub metric: MetricField,
    /// `g_ij`, the symmetric part.
    pub g: TensorField,
    /// `F_ij`, the antisymmetric part.
    pub skew: TensorField,
    /// `g^ij`.
    pub ginv: TensorField,
    /// `det[g_ij]`.
    pub det: Expr,
    /// `(ln|g|)_{,j}`.
    pub log_det_grad: TensorField,
    /// `Γ_{i.jk}`.
    pub christoffel_lower: TensorField,
    /// `Γ^i_{jk}`.
    pub christoffel: TensorField,
    /// `γ^i_{jk}`, the connection of the associated space.
    pub gamma: TensorField,
    /// `T^i_{jk}`.
    pub torsion: TensorField,
}

impl Geometry {
    pub fn new(pool: &mut ExprPool, metric: &MetricField) -> Result<Self> {
        let n = metric.dim();
        if !(2..=4).contains(&n) {
            return Err(Error::DimensionUnsupported(n));
        }
        let (g, skew) = tensorcalc::split_metric(pool, metric);
        let (ginv, det) = tensorcalc::inverse_metric(pool, &g)?;
        let log_det_grad = tensorcalc::log_det_gradient(pool, det, n);
        let christoffel_lower = tensorcalc::christoffel_lower(pool, metric);
        let christoffel = tensorcalc::christoffel(pool, &christoffel_lower, &ginv);
        let (gamma, torsion) = tensorcalc::connection_parts(pool, &christoffel);
        Ok(Geometry {
            metric: metric.clone(),
            g,
            skew,
            ginv,
            det,
            log_det_grad,
            christoffel_lower,
            christoffel,
            gamma,
            torsion,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn coords(&self) -> &[String] {
        self.metric.coords()
    }

    /// Rejects points where the symmetric part is (numerically) singular.
    pub fn check_point<S: Scalar>(&self, ev: &mut Evaluator<'_, S>) -> Result<()> {
        let point: Vec<f64> = ev.point().iter().map(|v| v.as_f64()).collect();
        if point.len() != self.dim() {
            return Err(Error::PointDimension {
                got: point.len(),
                expected: self.dim(),
                point,
            });
        }
        let det = ev.eval(self.det)?.as_f64();
        if det.abs() <= SINGULAR_DET {
            return Err(Error::SingularMetric { det, point });
        }
        Ok(())
    }
}
