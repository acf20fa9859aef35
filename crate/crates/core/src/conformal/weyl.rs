//! Weyl conformal curvature and its torsion-corrected family.
//!
//! Both share one skeleton. With `X_{jm}` a Ricci-type contraction
//! (last-slot convention) and `X` its trace,
//!
//! ```text
//! B[X]^i_{jmn} = δ^i_m X_{jn} − δ^i_n X_{jm} + X^i_m g_{jn} − X^i_n g_{jm}
//! A^i_{jmn}    = δ^i_m g_{jn} − δ^i_n g_{jm}
//! ```
//!
//! and the Weyl tensor is `R + B[R]/(N−2) − R·A/((N−1)(N−2))`. The covariant
//! versions replace `δ^i_m` by `g_{im}` and `X^i_m` by `X_{im}`.

use super::{ConformalSpace, RhoSelector, TauForm};
use crate::error::{Error, Result};
use crate::expr::{Expr, ExprPool};
use crate::tensor::{Down, TensorField, Up, Variance};
use crate::tensorcalc::{self, antisymmetric_last_two, ricci_contractions, CurvatureParams};

fn require_dim(space: &ConformalSpace) -> Result<usize> {
    match space.dim() {
        n if n >= 3 => Ok(n),
        n => Err(Error::DimensionUnsupported(n)),
    }
}

/// `B[X]` with the first slot up (`first = Up`) or lowered (`first = Down`).
fn ricci_block(
    pool: &mut ExprPool,
    first: Variance,
    ricci: &TensorField,
    space: &ConformalSpace,
) -> TensorField {
    let n = space.dim();
    let g = &space.geo.g;
    let partner = match first {
        Up => tensorcalc::raise_first(pool, ricci, &space.geo.ginv),
        Down => ricci.clone(),
    };
    let sig = [first, Down, Down, Down];
    antisymmetric_last_two(pool, n, &sig, |p, idx| {
        let (i, j, m, nn) = (idx[0], idx[1], idx[2], idx[3]);
        let mut terms = Vec::with_capacity(4);
        match first {
            Up => {
                if i == m {
                    terms.push(ricci.get(&[j, nn]));
                }
                if i == nn {
                    terms.push(p.neg(ricci.get(&[j, m])));
                }
            }
            Down => {
                terms.push(p.mul(g.get(&[i, m]), ricci.get(&[j, nn])));
                let t = p.mul(g.get(&[i, nn]), ricci.get(&[j, m]));
                terms.push(p.neg(t));
            }
        }
        terms.push(p.mul(partner.get(&[i, m]), g.get(&[j, nn])));
        let t = p.mul(partner.get(&[i, nn]), g.get(&[j, m]));
        terms.push(p.neg(t));
        p.sum(terms)
    })
}

/// `A` with the first slot up or lowered.
fn scalar_block(pool: &mut ExprPool, first: Variance, space: &ConformalSpace) -> TensorField {
    let n = space.dim();
    let g = &space.geo.g;
    antisymmetric_last_two(pool, n, &[first, Down, Down, Down], |p, idx| {
        let (i, j, m, nn) = (idx[0], idx[1], idx[2], idx[3]);
        match first {
            Up => {
                let a = if i == m { g.get(&[j, nn]) } else { p.zero() };
                let b = if i == nn { g.get(&[j, m]) } else { p.zero() };
                p.sub(a, b)
            }
            Down => {
                let a = p.mul(g.get(&[i, m]), g.get(&[j, nn]));
                let b = p.mul(g.get(&[i, nn]), g.get(&[j, m]));
                p.sub(a, b)
            }
        }
    })
}

fn scale_by(pool: &mut ExprPool, t: &TensorField, c: f64, e: Expr) -> TensorField {
    let factor = pool.scale(c, e);
    t.map(pool, |p, x| p.mul(factor, x))
}

fn weyl_skeleton(
    pool: &mut ExprPool,
    first: Variance,
    space: &mut ConformalSpace,
) -> Result<TensorField> {
    let n = require_dim(space)? as f64;
    let r = space.riemann(pool).clone();
    let c = ricci_contractions(pool, &r, &space.geo.ginv);
    let head = match first {
        Up => r,
        Down => tensorcalc::lower_first(pool, &r, &space.geo.g),
    };
    let b = ricci_block(pool, first, &c.ricci, space).scale(1.0 / (n - 2.0), pool);
    let a = scalar_block(pool, first, space);
    let a = scale_by(pool, &a, -1.0 / ((n - 1.0) * (n - 2.0)), c.scalar);
    Ok(head.add(&b, pool).add(&a, pool))
}

/// `C^i_{jmn}`; requires `N ≥ 3`.
pub fn weyl_conformal(pool: &mut ExprPool, space: &mut ConformalSpace) -> Result<TensorField> {
    weyl_skeleton(pool, Up, space)
}

/// `C_{ijmn}`, assembled from covariant pieces; requires `N ≥ 3`.
pub fn weyl_covariant(pool: &mut ExprPool, space: &mut ConformalSpace) -> Result<TensorField> {
    weyl_skeleton(pool, Down, space)
}

fn weyl_type(
    pool: &mut ExprPool,
    first: Variance,
    space: &mut ConformalSpace,
    rho: &RhoSelector,
    params: &CurvatureParams,
    form: TauForm,
) -> Result<TensorField> {
    let dim = require_dim(space)?;
    let n = dim as f64;
    let c1 = 1.0 / (n - 2.0);
    let c2 = 1.0 / ((n - 1.0) * (n - 2.0));
    let CurvatureParams {
        u,
        u_prime,
        v,
        v_prime,
        w,
    } = *params;
    let ginv = space.geo.ginv.clone();
    let g = space.geo.g.clone();
    let lower = |pool: &mut ExprPool, t: &TensorField| match first {
        Up => t.clone(),
        Down => tensorcalc::lower_first(pool, t, &g),
    };

    let k = space.curvature(pool, params);
    let kc = ricci_contractions(pool, &k, &ginv);
    let mut out = lower(pool, &k);
    let b = ricci_block(pool, first, &kc.ricci, space).scale(c1, pool);
    out = out.add(&b, pool);
    let a = scalar_block(pool, first, space);
    let ka = scale_by(pool, &a, -c2, kc.scalar);
    out = out.add(&ka, pool);

    let swap_mn = [0, 1, 3, 2];
    if u != 0.0 {
        let s = space.sigma(pool, rho.s[0], rho.r[0], form).clone();
        let s = lower(pool, &s).scale(-u, pool);
        out = out.add(&s, pool);
    }
    if u_prime != 0.0 {
        let s = space.sigma(pool, rho.s[1], rho.r[1], form).clone();
        let s = lower(pool, &s.permuted(&swap_mn)).scale(-u_prime, pool);
        out = out.add(&s, pool);
    }
    if v != 0.0 {
        let t = space.theta(pool, rho.r[2], rho.r[3], form).clone();
        let t = lower(pool, &t).scale(v, pool);
        out = out.add(&t, pool);
    }
    if v_prime != 0.0 {
        let t = space.theta(pool, rho.r[4], rho.r[5], form).clone();
        let t = lower(pool, &t.permuted(&swap_mn)).scale(v_prime, pool);
        out = out.add(&t, pool);
    }
    if w != 0.0 {
        // Θ^i_{mnj}: out[i, j, m, n] reads θ[i, m, n, j]
        let t = space.theta(pool, rho.r[6], rho.r[7], form).clone();
        let t = lower(pool, &t.permuted(&[0, 3, 1, 2])).scale(w, pool);
        out = out.add(&t, pool);
    }

    if u != 0.0 {
        let dt = space.torsion_derivative(pool).clone();
        let div = ricci_contractions(pool, &dt, &ginv);
        let b = ricci_block(pool, first, &div.ricci, space).scale(-u * c1, pool);
        out = out.add(&b, pool);
    }
    if v_prime + w != 0.0 {
        let x = tensorcalc::torsion_square_contraction(pool, &space.geo.torsion);
        let trace = tensorcalc::full_trace(pool, &x, &ginv);
        let b = ricci_block(pool, first, &x, space).scale(-(v_prime + w) * c1, pool);
        out = out.add(&b, pool);
        let xa = scale_by(pool, &a, (v_prime + w) * c2, trace);
        out = out.add(&xa, pool);
    }
    Ok(out)
}

/// `C^i_{(ρ)jmn}` for the given selectors and curvature parameters; requires `N ≥ 3`.
pub fn weyl_type_invariant(
    pool: &mut ExprPool,
    space: &mut ConformalSpace,
    rho: &RhoSelector,
    params: &CurvatureParams,
    form: TauForm,
) -> Result<TensorField> {
    weyl_type(pool, Up, space, rho, params, form)
}

/// `C_{(ρ)ijmn}`, every term lowered in place; requires `N ≥ 3`.
pub fn weyl_type_covariant(
    pool: &mut ExprPool,
    space: &mut ConformalSpace,
    rho: &RhoSelector,
    params: &CurvatureParams,
    form: TauForm,
) -> Result<TensorField> {
    weyl_type(pool, Down, space, rho, params, form)
}
