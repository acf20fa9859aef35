//! Symbolic tensor calculus on generalized Riemannian spaces.
//!
//! A space is given by a non-symmetric metric `G_ij = g_ij + F_ij` whose
//! components are expressions in the coordinates. Expressions live in an
//! interning [`ExprPool`], so every derived object (connection, torsion,
//! curvature, conformal images, Weyl-type tensors) is a DAG of shared nodes
//! that can be evaluated at numeric points in `f64` or `f32`.
//!
//! The crate is split into
//!
//! - [`expr`]: the expression DAG, parsing, differentiation, evaluation,
//! - [`tensor`] and [`tensorcalc`]: fields of expressions and the standard operations,
//! - [`metric`]: metric fields and their derived geometry,
//! - [`conformal`]: conformal images, Thomas and Weyl-type tensors,
//! - [`verify`]: random instances and the invariance suite.

pub mod conformal;
pub mod error;
pub mod expr;
pub mod metric;
pub mod scalar;
pub mod tensor;
pub mod tensorcalc;
pub mod verify;

pub use conformal::{ConformalSpace, RhoSelector, SigmaSelector, TauForm, TorsionSelector};
pub use error::{Error, Result};
pub use expr::{parse_expr, Evaluator, Expr, ExprPool};
pub use metric::{Geometry, MetricField};
pub use scalar::Scalar;
pub use tensor::{NumTensor, TensorField, Variance};
pub use tensorcalc::CurvatureParams;

pub type NumTensor64 = NumTensor<f64>;
pub type NumTensor32 = NumTensor<f32>;
pub type Evaluator64<'p> = Evaluator<'p, f64>;
pub type Evaluator32<'p> = Evaluator<'p, f32>;
