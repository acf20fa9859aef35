//! Connection and curvature objects of a space with a non-symmetric metric.
//!
//! Index conventions used throughout:
//!
//! * `Γ_{i.jk} = ½(G_{ji,k} − G_{jk,i} + G_{ik,j})`, `Γ^i_{jk} = g^{iα}Γ_{α.jk}`.
//! * `γ` and `T` are the parts of `Γ^i_{jk}` symmetric and antisymmetric in `j, k`.
//! * `R^i_{jmn} = γ^i_{jm,n} − γ^i_{jn,m} + γ^α_{jm}γ^i_{αn} − γ^α_{jn}γ^i_{αm}`.
//! * Ricci-type contractions take the upper slot against the **last** lower slot,
//!   `X_{jm} = X^α_{jmα}`. This is the only placement under which
//!   `K_{jm} = R_{jm} + uT^α_{jm;α} + (v'+w)T^α_{jβ}T^β_{αm}` holds identically:
//!   contracting on `n` kills the `u'` term through `T^α_{jα} = 0`, kills the `v`
//!   term through the same trace, and turns the `w` term into the `v'` shape by
//!   the double antisymmetry of `T`. Contracting on `m` instead would leave a
//!   `u'` divergence and a `(v − w)` square. With this convention the unit
//!   2-sphere has scalar curvature `+2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, ExprPool};
use crate::metric::MetricField;
use crate::tensor::{multi_indices, Down, TensorField, Up, Variance};

/// Coefficients `(u, u', v, v', w)` of the curvature family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurvatureParams {
    pub u: f64,
    pub u_prime: f64,
    pub v: f64,
    pub v_prime: f64,
    pub w: f64,
}

impl CurvatureParams {
    pub fn new(u: f64, u_prime: f64, v: f64, v_prime: f64, w: f64) -> Self {
        CurvatureParams {
            u,
            u_prime,
            v,
            v_prime,
            w,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.u, self.u_prime, self.v, self.v_prime, self.w]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|&c| c == 0.0)
    }
}

impl std::str::FromStr for CurvatureParams {
    type Err = Error;

    /// `"u,u',v,v',w"`.
    fn from_str(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidSelector(s.to_string()))?;
        match vals[..] {
            [u, up, v, vp, w] if vals.iter().all(|c| c.is_finite()) => {
                Ok(Self::new(u, up, v, vp, w))
            }
            _ => Err(Error::InvalidSelector(s.to_string())),
        }
    }
}

/// Fills an `(…, a, b)` field whose last two slots are antisymmetric, computing
/// only `a < b` and mirroring with a negation so `X[…, b, a] = −X[…, a, b]`
/// holds node-for-node.
pub(crate) fn antisymmetric_last_two<F>(
    pool: &mut ExprPool,
    dim: usize,
    signature: &[Variance],
    mut f: F,
) -> TensorField
where
    F: FnMut(&mut ExprPool, &[usize]) -> Expr,
{
    let rank = signature.len();
    let mut comps = vec![pool.zero(); dim.pow(rank as u32)];
    let flat = |idx: &[usize]| idx.iter().fold(0, |acc, &i| acc * dim + i);
    for idx in multi_indices(dim, rank) {
        let (a, b) = (idx[rank - 2], idx[rank - 1]);
        if a < b {
            let v = f(pool, &idx);
            let mut mirror = idx.clone();
            mirror.swap(rank - 2, rank - 1);
            comps[flat(&idx)] = v;
            comps[flat(&mirror)] = pool.neg(v);
        }
    }
    TensorField::from_components(dim, signature, comps).expect("shape")
}

/// `g_ij = ½(G_ij + G_ji)`, `F_ij = ½(G_ij − G_ji)`.
pub fn split_metric(pool: &mut ExprPool, metric: &MetricField) -> (TensorField, TensorField) {
    let n = metric.dim();
    let g = TensorField::from_fn(pool, n, &[Down, Down], |p, idx| {
        let (i, j) = (idx[0], idx[1]);
        if i == j {
            return metric.get(i, i);
        }
        let s = p.add(metric.get(i, j), metric.get(j, i));
        p.scale(0.5, s)
    });
    let f = antisymmetric_last_two(pool, n, &[Down, Down], |p, idx| {
        let d = p.sub(metric.get(idx[0], idx[1]), metric.get(idx[1], idx[0]));
        p.scale(0.5, d)
    });
    (g, f)
}

fn det_rec(pool: &mut ExprPool, m: &[Expr], n: usize) -> Expr {
    match n {
        0 => pool.one(),
        1 => m[0],
        2 => {
            let a = pool.mul(m[0], m[3]);
            let b = pool.mul(m[1], m[2]);
            pool.sub(a, b)
        }
        _ => {
            let mut terms = Vec::with_capacity(n);
            for col in 0..n {
                if pool.is_zero(m[col]) {
                    continue;
                }
                let minor: Vec<Expr> = (1..n)
                    .flat_map(|r| (0..n).filter(move |&c| c != col).map(move |c| (r, c)))
                    .map(|(r, c)| m[r * n + c])
                    .collect();
                let md = det_rec(pool, &minor, n - 1);
                let t = pool.mul(m[col], md);
                terms.push(if col % 2 == 0 { t } else { pool.neg(t) });
            }
            pool.sum(terms)
        }
    }
}

/// Symbolic determinant by cofactor expansion along the first row.
pub fn determinant(pool: &mut ExprPool, m: &TensorField) -> Expr {
    det_rec(pool, m.components(), m.dim())
}

/// `g^{ij}` as adjugate over determinant, plus the determinant itself.
/// Supported for `N ≤ 4`.
pub fn inverse_metric(pool: &mut ExprPool, g: &TensorField) -> Result<(TensorField, Expr)> {
    let n = g.dim();
    if n == 0 || n > 4 {
        return Err(Error::DimensionUnsupported(n));
    }
    let det = determinant(pool, g);
    let comps = g.components().to_vec();
    let cofactor = |pool: &mut ExprPool, r: usize, c: usize| -> Expr {
        let minor: Vec<Expr> = (0..n)
            .filter(|&i| i != r)
            .flat_map(|i| (0..n).filter(move |&j| j != c).map(move |j| (i, j)))
            .map(|(i, j)| comps[i * n + j])
            .collect();
        let m = det_rec(pool, &minor, n - 1);
        if (r + c).is_multiple_of(2) {
            m
        } else {
            pool.neg(m)
        }
    };
    let inv = TensorField::from_fn(pool, n, &[Up, Up], |p, idx| {
        // g is symmetric, so the adjugate entry (i, j) is the cofactor (j, i)
        let (i, j) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
        let c = cofactor(p, j, i);
        p.div(c, det)
    });
    Ok((inv, det))
}

/// `(ln|g|)_{,j} = det_{,j} / det`; independent of the sign of `det`.
pub fn log_det_gradient(pool: &mut ExprPool, det: Expr, dim: usize) -> TensorField {
    TensorField::from_fn(pool, dim, &[Down], |p, idx| {
        let d = p.diff(det, idx[0]);
        p.div(d, det)
    })
}

/// `½ ln(det²) = ln|det|` as an expression.
pub fn log_abs_det(pool: &mut ExprPool, det: Expr) -> Expr {
    let sq = pool.powf(det, 2.0);
    let l = pool.ln(sq);
    pool.scale(0.5, l)
}

/// `Γ_{i.jk} = ½(G_{ji,k} − G_{jk,i} + G_{ik,j})`.
pub fn christoffel_lower(pool: &mut ExprPool, metric: &MetricField) -> TensorField {
    let n = metric.dim();
    TensorField::from_fn(pool, n, &[Down, Down, Down], |p, idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let a = p.diff(metric.get(j, i), k);
        let b = p.diff(metric.get(j, k), i);
        let c = p.diff(metric.get(i, k), j);
        let s = p.sub(a, b);
        let s = p.add(s, c);
        p.scale(0.5, s)
    })
}

/// `Γ^i_{jk} = g^{iα}Γ_{α.jk}`.
pub fn christoffel(pool: &mut ExprPool, lower: &TensorField, ginv: &TensorField) -> TensorField {
    raise_first(pool, lower, ginv)
}

/// `g^{iα}X_{α…}`: raises the first slot.
pub fn raise_first(pool: &mut ExprPool, x: &TensorField, ginv: &TensorField) -> TensorField {
    let n = x.dim();
    let mut sig = x.signature().to_vec();
    sig[0] = Up;
    let mut src = vec![0; x.rank()];
    TensorField::from_fn(pool, n, &sig, |p, idx| {
        src.copy_from_slice(idx);
        let terms: Vec<Expr> = (0..n)
            .map(|a| {
                src[0] = a;
                p.mul(ginv.get(&[idx[0], a]), x.get(&src))
            })
            .collect();
        p.sum(terms)
    })
}

/// `g_{iα}X^α_{…}`: lowers the first slot.
pub fn lower_first(pool: &mut ExprPool, x: &TensorField, g: &TensorField) -> TensorField {
    let n = x.dim();
    let mut sig = x.signature().to_vec();
    sig[0] = Down;
    let mut src = vec![0; x.rank()];
    TensorField::from_fn(pool, n, &sig, |p, idx| {
        src.copy_from_slice(idx);
        let terms: Vec<Expr> = (0..n)
            .map(|a| {
                src[0] = a;
                p.mul(g.get(&[idx[0], a]), x.get(&src))
            })
            .collect();
        p.sum(terms)
    })
}

/// Splits `Γ^i_{jk}` into `γ^i_{jk} = ½(Γ^i_{jk} + Γ^i_{kj})` and
/// `T^i_{jk} = ½(Γ^i_{jk} − Γ^i_{kj})`.
pub fn connection_parts(
    pool: &mut ExprPool,
    christoffel: &TensorField,
) -> (TensorField, TensorField) {
    let n = christoffel.dim();
    let gamma = TensorField::from_fn(pool, n, &[Up, Down, Down], |p, idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        if j == k {
            return christoffel.get(idx);
        }
        let s = p.add(christoffel.get(&[i, j, k]), christoffel.get(&[i, k, j]));
        p.scale(0.5, s)
    });
    let torsion = antisymmetric_last_two(pool, n, &[Up, Down, Down], |p, idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let d = p.sub(christoffel.get(&[i, j, k]), christoffel.get(&[i, k, j]));
        p.scale(0.5, d)
    });
    (gamma, torsion)
}

/// Covariant derivative with respect to the symmetric connection `gamma`,
/// for any slot signature of rank at most 4. Appends one lower slot.
pub fn cov_deriv_assoc(
    pool: &mut ExprPool,
    field: &TensorField,
    gamma: &TensorField,
) -> Result<TensorField> {
    let rank = field.rank();
    if rank > 4 {
        return Err(Error::RankUnsupported(rank));
    }
    let n = field.dim().max(gamma.dim());
    if field.rank() == 0 {
        // scalar: only the partial derivative
        let e = field.components()[0];
        return Ok(TensorField::from_fn(pool, n, &[Down], |p, idx| {
            p.diff(e, idx[0])
        }));
    }
    let grad = field.gradient(pool);
    let mut sig = field.signature().to_vec();
    sig.push(Down);
    let mut src = vec![0; rank];
    Ok(TensorField::from_fn(pool, n, &sig, |p, idx| {
        let k = idx[rank];
        let mut terms = vec![grad.get(idx)];
        for (s, &var) in field.signature().iter().enumerate() {
            for a in 0..n {
                src.copy_from_slice(&idx[..rank]);
                src[s] = a;
                let x = field.get(&src);
                let t = match var {
                    Up => p.mul(gamma.get(&[idx[s], a, k]), x),
                    Down => {
                        let m = p.mul(gamma.get(&[a, idx[s], k]), x);
                        p.neg(m)
                    }
                };
                terms.push(t);
            }
        }
        p.sum(terms)
    }))
}

/// The four covariant derivatives of a `(1,1)` field with respect to the
/// non-symmetric connection `Γ`:
///
/// | kind | upper term        | lower term          |
/// |------|-------------------|---------------------|
/// | 1    | `+Γ^i_{αk}a^α_j`  | `−Γ^α_{jk}a^i_α`    |
/// | 2    | `+Γ^i_{kα}a^α_j`  | `−Γ^α_{kj}a^i_α`    |
/// | 3    | `+Γ^i_{αk}a^α_j`  | `−Γ^α_{kj}a^i_α`    |
/// | 4    | `+Γ^i_{kα}a^α_j`  | `−Γ^α_{jk}a^i_α`    |
pub fn cov_deriv_kind(
    pool: &mut ExprPool,
    kind: u8,
    field: &TensorField,
    christoffel: &TensorField,
) -> Result<TensorField> {
    if !(1..=4).contains(&kind) {
        return Err(Error::InvalidKind(kind));
    }
    if field.signature() != [Up, Down] {
        return Err(Error::ShapeMismatch(format!(
            "kind-{kind} covariant derivative expects a (1,1) field, got {:?}",
            field.signature()
        )));
    }
    let n = field.dim();
    let (upper_swapped, lower_swapped) = match kind {
        1 => (false, false),
        2 => (true, true),
        3 => (false, true),
        _ => (true, false),
    };
    let grad = field.gradient(pool);
    Ok(TensorField::from_fn(
        pool,
        n,
        &[Up, Down, Down],
        |p, idx| {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            let mut terms = vec![grad.get(idx)];
            for a in 0..n {
                let up = if upper_swapped {
                    christoffel.get(&[i, k, a])
                } else {
                    christoffel.get(&[i, a, k])
                };
                terms.push(p.mul(up, field.get(&[a, j])));
                let low = if lower_swapped {
                    christoffel.get(&[a, k, j])
                } else {
                    christoffel.get(&[a, j, k])
                };
                let t = p.mul(low, field.get(&[i, a]));
                terms.push(p.neg(t));
            }
            p.sum(terms)
        },
    ))
}

/// Curvature tensor of the associated space.
pub fn riemann_assoc(pool: &mut ExprPool, gamma: &TensorField) -> TensorField {
    let n = gamma.dim();
    antisymmetric_last_two(pool, n, &[Up, Down, Down, Down], |p, idx| {
        let (i, j, m, nn) = (idx[0], idx[1], idx[2], idx[3]);
        let a = p.diff(gamma.get(&[i, j, m]), nn);
        let b = p.diff(gamma.get(&[i, j, nn]), m);
        let mut terms = vec![a, p.neg(b)];
        for al in 0..n {
            terms.push(p.mul(gamma.get(&[al, j, m]), gamma.get(&[i, al, nn])));
            let t = p.mul(gamma.get(&[al, j, nn]), gamma.get(&[i, al, m]));
            terms.push(p.neg(t));
        }
        p.sum(terms)
    })
}

/// `T^α_{ab}T^i_{αc}` laid out as `out[i, a, b, c]`.
pub fn torsion_square(pool: &mut ExprPool, t: &TensorField) -> TensorField {
    chained_product(pool, t, t)
}

/// `A^α_{ab}B^i_{αc}` laid out as `out[i, a, b, c]`.
pub fn chained_product(pool: &mut ExprPool, a: &TensorField, b: &TensorField) -> TensorField {
    let n = a.dim();
    TensorField::from_fn(pool, n, &[Up, Down, Down, Down], |p, idx| {
        let (i, x, y, z) = (idx[0], idx[1], idx[2], idx[3]);
        let terms: Vec<Expr> = (0..n)
            .map(|al| p.mul(a.get(&[al, x, y]), b.get(&[i, al, z])))
            .collect();
        p.sum(terms)
    })
}

/// The five torsion-built summands of the curvature family, each as an
/// `(i, j, m, n)` field: `T^i_{jm;n}`, `T^i_{jn;m}`, `T^α_{jm}T^i_{αn}`,
/// `T^α_{jn}T^i_{αm}`, `T^α_{mn}T^i_{αj}`.
pub fn torsion_summands(
    pool: &mut ExprPool,
    torsion: &TensorField,
    gamma: &TensorField,
) -> Result<[TensorField; 5]> {
    let dt = cov_deriv_assoc(pool, torsion, gamma)?;
    let dt_swapped = dt.permuted(&[0, 1, 3, 2]);
    let sq = torsion_square(pool, torsion);
    let sq_swapped = sq.permuted(&[0, 1, 3, 2]);
    // T^α_{mn}T^i_{αj}: out[i,j,m,n] = sq[i, m, n, j]
    let sq_cyclic = sq.permuted(&[0, 3, 1, 2]);
    Ok([dt, dt_swapped, sq, sq_swapped, sq_cyclic])
}

/// `K = R + uT^i_{jm;n} + u'T^i_{jn;m} + vT^α_{jm}T^i_{αn} + v'T^α_{jn}T^i_{αm} + wT^α_{mn}T^i_{αj}`.
pub fn curvature_family(
    pool: &mut ExprPool,
    params: &CurvatureParams,
    riemann: &TensorField,
    torsion: &TensorField,
    gamma: &TensorField,
) -> Result<TensorField> {
    if params.is_zero() {
        return Ok(riemann.clone());
    }
    let summands = torsion_summands(pool, torsion, gamma)?;
    let coeffs = params.as_array();
    let mut out = riemann.clone();
    for (c, s) in coeffs.iter().zip(&summands) {
        if *c != 0.0 {
            let scaled = s.scale(*c, pool);
            out = out.add(&scaled, pool);
        }
    }
    Ok(out)
}

/// `X_{jn} = T^α_{jβ}T^β_{αn}`.
pub fn torsion_square_contraction(pool: &mut ExprPool, t: &TensorField) -> TensorField {
    let n = t.dim();
    TensorField::from_fn(pool, n, &[Down, Down], |p, idx| {
        let terms: Vec<Expr> = multi_indices(n, 2)
            .map(|ab| {
                p.mul(
                    t.get(&[ab[0], idx[0], ab[1]]),
                    t.get(&[ab[1], ab[0], idx[1]]),
                )
            })
            .collect();
        p.sum(terms)
    })
}

/// `g^{jm}X_{jm}`.
pub fn full_trace(pool: &mut ExprPool, x: &TensorField, ginv: &TensorField) -> Expr {
    let terms: Vec<Expr> = multi_indices(x.dim(), 2)
        .map(|idx| pool.mul(ginv.get(&idx), x.get(&idx)))
        .collect();
    pool.sum(terms)
}

/// Ricci-type contractions of a `(1,3)` field.
#[derive(Clone, Debug)]
pub struct Contractions {
    /// `X_{jm} = X^α_{jmα}`.
    pub ricci: TensorField,
    /// `X^i_m = g^{iα}X_{αm}`.
    pub mixed: TensorField,
    /// `X = g^{jm}X_{jm}`.
    pub scalar: Expr,
}

pub fn ricci_contractions(
    pool: &mut ExprPool,
    x: &TensorField,
    ginv: &TensorField,
) -> Contractions {
    let n = x.dim();
    let ricci = TensorField::from_fn(pool, n, &[Down, Down], |p, idx| {
        let terms: Vec<Expr> = (0..n).map(|a| x.get(&[a, idx[0], idx[1], a])).collect();
        p.sum(terms)
    });
    let mixed = raise_first(pool, &ricci, ginv);
    let scalar = full_trace(pool, &ricci, ginv);
    Contractions {
        ricci,
        mixed,
        scalar,
    }
}

/// `T^i_{jk}` rebuilt from semicolon derivatives of `F`:
/// `½ g^{iα}(F_{jα;k} − F_{jk;α} + F_{αk;j})`.
pub fn torsion_from_skew_derivatives(
    pool: &mut ExprPool,
    skew: &TensorField,
    ginv: &TensorField,
    gamma: &TensorField,
) -> Result<TensorField> {
    let n = skew.dim();
    let df = cov_deriv_assoc(pool, skew, gamma)?;
    Ok(TensorField::from_fn(
        pool,
        n,
        &[Up, Down, Down],
        |p, idx| {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            let mut terms = Vec::with_capacity(3 * n);
            for a in 0..n {
                let gi = ginv.get(&[i, a]);
                let inner_a = df.get(&[j, a, k]);
                let inner_b = df.get(&[j, k, a]);
                let inner_c = df.get(&[a, k, j]);
                let s = p.sub(inner_a, inner_b);
                let s = p.add(s, inner_c);
                terms.push(p.mul(gi, s));
            }
            let total = p.sum(terms);
            p.scale(0.5, total)
        },
    ))
}
