//! Dense multi-index arrays: symbolic [`TensorField`] and numeric [`NumTensor`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Evaluator, Expr, ExprPool};
use crate::scalar::Scalar;

/// Slot variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

pub use Variance::{Down, Up};

/// Row-major position of a multi-index in an `n^rank` array.
fn flat_index(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| {
        debug_assert!(i < dim);
        acc * dim + i
    })
}

/// Iterator over all multi-indices of a given rank, in row-major order.
pub fn multi_indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = flat % dim;
            flat /= dim;
        }
        idx
    })
}

/// Dense array of expressions with a variance signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorField {
    dim: usize,
    signature: Vec<Variance>,
    components: Vec<Expr>,
}

impl TensorField {
    /// Builds every component from its multi-index.
    pub fn from_fn<F>(pool: &mut ExprPool, dim: usize, signature: &[Variance], mut f: F) -> Self
    where
        F: FnMut(&mut ExprPool, &[usize]) -> Expr,
    {
        let components = multi_indices(dim, signature.len())
            .map(|idx| f(pool, &idx))
            .collect();
        TensorField {
            dim,
            signature: signature.to_vec(),
            components,
        }
    }

    pub fn zeros(pool: &ExprPool, dim: usize, signature: &[Variance]) -> Self {
        TensorField {
            dim,
            signature: signature.to_vec(),
            components: vec![pool.zero(); dim.pow(signature.len() as u32)],
        }
    }

    pub fn scalar(e: Expr) -> Self {
        TensorField {
            dim: 0,
            signature: Vec::new(),
            components: vec![e],
        }
    }

    pub fn from_components(
        dim: usize,
        signature: &[Variance],
        components: Vec<Expr>,
    ) -> Result<Self> {
        let want = dim.pow(signature.len() as u32);
        if components.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "{} components for dimension {dim} rank {}, expected {want}",
                components.len(),
                signature.len()
            )));
        }
        Ok(TensorField {
            dim,
            signature: signature.to_vec(),
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.signature.len()
    }

    pub fn signature(&self) -> &[Variance] {
        &self.signature
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn get(&self, idx: &[usize]) -> Expr {
        debug_assert_eq!(idx.len(), self.rank());
        self.components[flat_index(self.dim, idx)]
    }

    /// Same components under a permuted slot order: `out[idx] = self[idx ∘ perm]`,
    /// i.e. output slot `s` reads input slot `perm[s]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank());
        let mut src = vec![0; self.rank()];
        let components = multi_indices(self.dim, self.rank())
            .map(|idx| {
                for (s, &p) in perm.iter().enumerate() {
                    src[p] = idx[s];
                }
                self.get(&src)
            })
            .collect();
        TensorField {
            dim: self.dim,
            signature: perm.iter().map(|&p| self.signature[p]).collect(),
            components,
        }
    }

    pub fn map(&self, pool: &mut ExprPool, mut f: impl FnMut(&mut ExprPool, Expr) -> Expr) -> Self {
        TensorField {
            dim: self.dim,
            signature: self.signature.clone(),
            components: self.components.iter().map(|&e| f(pool, e)).collect(),
        }
    }

    pub fn zip(
        &self,
        other: &TensorField,
        pool: &mut ExprPool,
        mut f: impl FnMut(&mut ExprPool, Expr, Expr) -> Expr,
    ) -> Self {
        assert_eq!(self.signature, other.signature, "signature mismatch");
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        TensorField {
            dim: self.dim,
            signature: self.signature.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(&a, &b)| f(pool, a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &TensorField, pool: &mut ExprPool) -> Self {
        self.zip(other, pool, |p, a, b| p.add(a, b))
    }

    pub fn sub(&self, other: &TensorField, pool: &mut ExprPool) -> Self {
        self.zip(other, pool, |p, a, b| p.sub(a, b))
    }

    pub fn scale(&self, c: f64, pool: &mut ExprPool) -> Self {
        self.map(pool, |p, e| p.scale(c, e))
    }

    /// Partial derivative of every component; appends a lower slot.
    pub fn gradient(&self, pool: &mut ExprPool) -> Self {
        let mut signature = self.signature.clone();
        signature.push(Down);
        let mut components = Vec::with_capacity(self.components.len() * self.dim);
        for &e in &self.components {
            for k in 0..self.dim {
                components.push(pool.diff(e, k));
            }
        }
        TensorField {
            dim: self.dim,
            signature,
            components,
        }
    }

    pub fn is_identically_zero(&self, pool: &ExprPool) -> bool {
        self.components.iter().all(|&e| pool.is_zero(e))
    }

    pub fn eval<S: Scalar>(&self, ev: &mut Evaluator<'_, S>) -> Result<NumTensor<S>> {
        let data = self
            .components
            .iter()
            .map(|&e| ev.eval(e))
            .collect::<Result<Vec<S>>>()?;
        Ok(NumTensor {
            dim: self.dim,
            signature: self.signature.clone(),
            data,
        })
    }
}

/// Dense numeric tensor produced by evaluating a [`TensorField`] at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumTensor<S = f64> {
    pub dim: usize,
    pub signature: Vec<Variance>,
    pub data: Vec<S>,
}

impl<S: Scalar> NumTensor<S> {
    pub fn rank(&self) -> usize {
        self.signature.len()
    }

    pub fn get(&self, idx: &[usize]) -> S {
        self.data[flat_index(self.dim, idx)]
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// `max|a - b| / (1 + max(|a|, |b|))` over all components.
    pub fn scaled_deviation(&self, other: &NumTensor<S>) -> S {
        assert_eq!(self.data.len(), other.data.len(), "shape mismatch");
        let diff = self
            .data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        diff / (S::one() + self.max_abs().max(other.max_abs()))
    }

    /// Values nested by the first index, for JSON dumps.
    pub fn to_nested(&self) -> serde_json::Value
    where
        S: Serialize,
    {
        fn nest<S: Serialize>(data: &[S], dim: usize, rank: usize) -> serde_json::Value {
            if rank == 0 {
                return serde_json::to_value(&data[0]).unwrap_or(serde_json::Value::Null);
            }
            let stride = data.len() / dim;
            serde_json::Value::Array(
                (0..dim)
                    .map(|i| nest(&data[i * stride..(i + 1) * stride], dim, rank - 1))
                    .collect(),
            )
        }
        nest(&self.data, self.dim, self.rank())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_indices_are_row_major() {
        let all: Vec<Vec<usize>> = multi_indices(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(multi_indices(3, 0).count(), 1);
    }

    #[test]
    fn component_count_is_dim_to_rank() {
        let mut p = ExprPool::new();
        let t = TensorField::from_fn(&mut p, 3, &[Up, Down, Down], |p, idx| {
            p.constant((idx[0] * 9 + idx[1] * 3 + idx[2]) as f64)
        });
        assert_eq!(t.components().len(), 27);
        assert_eq!(p.const_value(t.get(&[1, 2, 0])), Some(15.0));
    }

    #[test]
    fn permutation_swaps_slots() {
        let mut p = ExprPool::new();
        let t = TensorField::from_fn(&mut p, 2, &[Up, Down, Down], |p, idx| {
            p.constant((idx[0] * 100 + idx[1] * 10 + idx[2]) as f64)
        });
        let s = t.permuted(&[0, 2, 1]);
        for idx in multi_indices(2, 3) {
            assert_eq!(s.get(&idx), t.get(&[idx[0], idx[2], idx[1]]));
        }
    }

    #[test]
    fn shape_is_checked() {
        let p = ExprPool::new();
        let err = TensorField::from_components(2, &[Down, Down], vec![p.zero(); 3]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn scaled_deviation_uses_unit_offset() {
        let a = NumTensor {
            dim: 2,
            signature: vec![Down],
            data: vec![1.0, 3.0],
        };
        let b = NumTensor {
            dim: 2,
            signature: vec![Down],
            data: vec![1.0, 2.0],
        };
        assert_eq!(a.scaled_deviation(&b), 0.25);
    }

    #[test]
    fn nested_json_shape() {
        let a = NumTensor {
            dim: 2,
            signature: vec![Down, Down],
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert_eq!(a.to_nested().to_string(), "[[1.0,2.0],[3.0,4.0]]");
    }
}
