//! Conformal mappings `Ḡ_ij = e^{2ψ}G_ij` and the objects built to be
//! unchanged by them.

mod detect;
mod selectors;
mod weyl;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use detect::{
    detect_conformal, ComponentRatio, Detection, PsiSample, ThomasVerdict, NEGLIGIBLE_COMPONENT,
};
pub use selectors::{RhoSelector, SigmaSelector, TorsionSelector, ZetaKind};

use crate::error::{Error, Result};
use crate::expr::{Expr, ExprPool};
use crate::metric::{Geometry, MetricField};
use crate::tensor::{Down, TensorField, Up};
use crate::tensorcalc::{self, CurvatureParams};

/// Which bracket to use when building `τ_(r)`.
///
/// `Printed` is the five-term contraction. `TraceCompleted` additionally
/// subtracts `ζ^α_{(r2)βα}g^{iβ}F_jk` inside the bracket; that is the term the
/// five-term form drops when `−(g^{iα}F_jk)_{;α}` is rewritten, and with it
/// `T + τ` transforms without the residual `−(N/2)ψ^iF_jk`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauForm {
    #[default]
    Printed,
    TraceCompleted,
}

/// `e^{2ψ}G_ij`, component by component.
pub fn conformal_image(pool: &mut ExprPool, metric: &MetricField, psi: Expr) -> MetricField {
    let two_psi = pool.scale(2.0, psi);
    let factor = pool.exp(two_psi);
    metric.map(pool, |p, e| p.mul(factor, e))
}

/// A base metric, a scalar `ψ`, and the rescaled image metric.
#[derive(Clone, Debug)]
pub struct ConformalPair {
    pub base: MetricField,
    pub psi: Expr,
    pub image: MetricField,
}

impl ConformalPair {
    pub fn new(pool: &mut ExprPool, base: MetricField, psi: Expr) -> Self {
        let image = conformal_image(pool, &base, psi);
        ConformalPair { base, psi, image }
    }

    /// `ψ_j = ψ_{,j}`.
    pub fn psi_gradient(&self, pool: &mut ExprPool) -> TensorField {
        let psi = self.psi;
        TensorField::from_fn(pool, self.base.dim(), &[Down], |p, idx| p.diff(psi, idx[0]))
    }

    /// `ψ^i = g^{iα}ψ_α` with the base inverse.
    pub fn psi_raised(&self, pool: &mut ExprPool, base: &Geometry) -> TensorField {
        let grad = self.psi_gradient(pool);
        tensorcalc::raise_first(pool, &grad, &base.ginv)
    }
}

/// The two determinant-based reconstructions of `ψ_j`.
#[derive(Clone, Debug)]
pub struct PsiGradient {
    /// `(1/N)(γ̄^α_{jα} − γ^α_{jα})`.
    pub from_traces: TensorField,
    /// `(1/2N)(ln|ḡ| − ln|g|)_{,j}`.
    pub from_dets: TensorField,
}

pub fn psi_gradient_from_dets(
    pool: &mut ExprPool,
    base: &Geometry,
    image: &Geometry,
) -> PsiGradient {
    let n = base.dim();
    let inv_n = 1.0 / n as f64;
    let trace = |pool: &mut ExprPool, gamma: &TensorField, j: usize| {
        let terms: Vec<Expr> = (0..n).map(|a| gamma.get(&[a, j, a])).collect();
        pool.sum(terms)
    };
    let from_traces = TensorField::from_fn(pool, n, &[Down], |p, idx| {
        let a = trace(p, &image.gamma, idx[0]);
        let b = trace(p, &base.gamma, idx[0]);
        let d = p.sub(a, b);
        p.scale(inv_n, d)
    });
    let from_dets = TensorField::from_fn(pool, n, &[Down], |p, idx| {
        let d = p.sub(image.log_det_grad.get(idx), base.log_det_grad.get(idx));
        p.scale(0.5 * inv_n, d)
    });
    PsiGradient {
        from_traces,
        from_dets,
    }
}

/// `ζ_(2)^i_{jk} = (1/2N)(l_j δ^i_k + l_k δ^i_j − l_α g^{iα} g_jk)` with `l = (ln|g|)_{,·}`.
pub fn zeta_two(pool: &mut ExprPool, geo: &Geometry) -> TensorField {
    let n = geo.dim();
    let l = &geo.log_det_grad;
    let raised = tensorcalc::raise_first(pool, l, &geo.ginv);
    let c = 1.0 / (2.0 * n as f64);
    TensorField::from_fn(pool, n, &[Up, Down, Down], |p, idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let mut terms = Vec::with_capacity(3);
        if i == k {
            terms.push(l.get(&[j]));
        }
        if i == j {
            terms.push(l.get(&[k]));
        }
        let t = p.mul(raised.get(&[i]), geo.g.get(&[j, k]));
        terms.push(p.neg(t));
        let s = p.sum(terms);
        p.scale(c, s)
    })
}

/// `Σ_b X[a, j, b] g^{ib}` laid out as `out[i, a, j]`.
fn contract_last_with_inverse(
    pool: &mut ExprPool,
    x: &TensorField,
    ginv: &TensorField,
) -> TensorField {
    let n = x.dim();
    TensorField::from_fn(pool, n, &[Up, Up, Down], |p, idx| {
        let (i, a, j) = (idx[0], idx[1], idx[2]);
        let terms: Vec<Expr> = (0..n)
            .map(|b| p.mul(x.get(&[a, j, b]), ginv.get(&[i, b])))
            .collect();
        p.sum(terms)
    })
}

/// A geometry together with memoized conformal objects. Methods that build
/// new expressions take the pool that owns the geometry.
#[derive(Clone, Debug)]
pub struct ConformalSpace {
    pub geo: Geometry,
    zeta2: TensorField,
    /// `g^{αβ}F_{jβ}` laid out as `[α, j]`.
    skew_raised_second: TensorField,
    /// `g^{βα}F_{βk}` laid out as `[α, k]`.
    skew_raised_first: TensorField,
    tau: HashMap<(TorsionSelector, TauForm), TensorField>,
    sigma: HashMap<(SigmaSelector, TorsionSelector, TauForm), TensorField>,
    theta: HashMap<(TorsionSelector, TorsionSelector, TauForm), TensorField>,
    riemann: Option<TensorField>,
    torsion_derivative: Option<TensorField>,
}

impl ConformalSpace {
    pub fn new(pool: &mut ExprPool, metric: &MetricField) -> Result<Self> {
        let geo = Geometry::new(pool, metric)?;
        Ok(Self::from_geometry(pool, geo))
    }

    pub fn from_geometry(pool: &mut ExprPool, geo: Geometry) -> Self {
        let n = geo.dim();
        let zeta2 = zeta_two(pool, &geo);
        let skew_raised_second = TensorField::from_fn(pool, n, &[Up, Down], |p, idx| {
            let (a, j) = (idx[0], idx[1]);
            let terms: Vec<Expr> = (0..n)
                .map(|b| p.mul(geo.ginv.get(&[a, b]), geo.skew.get(&[j, b])))
                .collect();
            p.sum(terms)
        });
        let skew_raised_first = TensorField::from_fn(pool, n, &[Up, Down], |p, idx| {
            let (a, k) = (idx[0], idx[1]);
            let terms: Vec<Expr> = (0..n)
                .map(|b| p.mul(geo.ginv.get(&[b, a]), geo.skew.get(&[b, k])))
                .collect();
            p.sum(terms)
        });
        ConformalSpace {
            geo,
            zeta2,
            skew_raised_second,
            skew_raised_first,
            tau: HashMap::new(),
            sigma: HashMap::new(),
            theta: HashMap::new(),
            riemann: None,
            torsion_derivative: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.geo.dim()
    }

    /// `ζ_(1) = γ`, `ζ_(2)` as in [`zeta_two`].
    pub fn zeta(&self, kind: ZetaKind) -> Result<&TensorField> {
        match kind {
            1 => Ok(&self.geo.gamma),
            2 => Ok(&self.zeta2),
            k => Err(Error::InvalidKind(k)),
        }
    }

    fn zeta_unchecked(&self, kind: ZetaKind) -> &TensorField {
        if kind == 1 {
            &self.geo.gamma
        } else {
            &self.zeta2
        }
    }

    /// `τ^i_{(r)jk} = −½( ζ^i_{(r1)αk}g^{αβ}F_{jβ} − ζ^i_{(r2)βα}g^{βα}F_{jk}
    /// + ζ^i_{(r3)αj}g^{βα}F_{βk} + ζ^α_{(r4)jβ}g^{iβ}F_{αk} + ζ^α_{(r5)kβ}g^{iβ}F_{jα} )`.
    pub fn tau(&mut self, pool: &mut ExprPool, r: TorsionSelector, form: TauForm) -> &TensorField {
        if !self.tau.contains_key(&(r, form)) {
            let t = self.build_tau(pool, r, form);
            self.tau.insert((r, form), t);
        }
        &self.tau[&(r, form)]
    }

    fn build_tau(&self, pool: &mut ExprPool, r: TorsionSelector, form: TauForm) -> TensorField {
        let n = self.dim();
        let [k1, k2, k3, k4, k5] = r.0;
        let (z1, z2, z3) = (
            self.zeta_unchecked(k1),
            self.zeta_unchecked(k2),
            self.zeta_unchecked(k3),
        );
        let ginv = &self.geo.ginv;
        let f = &self.geo.skew;
        let m4 = contract_last_with_inverse(pool, self.zeta_unchecked(k4), ginv);
        let m5 = contract_last_with_inverse(pool, self.zeta_unchecked(k5), ginv);
        // ζ^i_{(r2)βα}g^{βα}
        let trace2 = TensorField::from_fn(pool, n, &[Up], |p, idx| {
            let terms: Vec<Expr> = (0..n)
                .flat_map(|b| (0..n).map(move |a| (b, a)))
                .map(|(b, a)| p.mul(z2.get(&[idx[0], b, a]), ginv.get(&[b, a])))
                .collect();
            p.sum(terms)
        });
        // ζ^α_{(r2)βα}g^{iβ}
        let trace2_raised = match form {
            TauForm::Printed => None,
            TauForm::TraceCompleted => {
                let tr = TensorField::from_fn(pool, n, &[Down], |p, idx| {
                    let terms: Vec<Expr> = (0..n).map(|a| z2.get(&[a, idx[0], a])).collect();
                    p.sum(terms)
                });
                Some(tensorcalc::raise_first(pool, &tr, ginv))
            }
        };
        let h2 = &self.skew_raised_second;
        let h1 = &self.skew_raised_first;
        TensorField::from_fn(pool, n, &[Up, Down, Down], |p, idx| {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            let mut terms = Vec::with_capacity(4 * n + 2);
            for a in 0..n {
                terms.push(p.mul(z1.get(&[i, a, k]), h2.get(&[a, j])));
                terms.push(p.mul(z3.get(&[i, a, j]), h1.get(&[a, k])));
                terms.push(p.mul(m4.get(&[i, a, j]), f.get(&[a, k])));
                terms.push(p.mul(m5.get(&[i, a, k]), f.get(&[j, a])));
            }
            let t2 = p.mul(trace2.get(&[i]), f.get(&[j, k]));
            terms.push(p.neg(t2));
            if let Some(tr) = &trace2_raised {
                let t = p.mul(tr.get(&[i]), f.get(&[j, k]));
                terms.push(p.neg(t));
            }
            let s = p.sum(terms);
            p.scale(-0.5, s)
        })
    }

    /// `𝒯_(r) = Γ − ζ_(2) + τ_(r)`.
    pub fn thomas(
        &mut self,
        pool: &mut ExprPool,
        r: TorsionSelector,
        form: TauForm,
    ) -> TensorField {
        let base = self.geo.christoffel.sub(&self.zeta2, pool);
        let tau = self.tau(pool, r, form).clone();
        base.add(&tau, pool)
    }

    /// `T^i_{jm;n}`.
    pub fn torsion_derivative(&mut self, pool: &mut ExprPool) -> &TensorField {
        if self.torsion_derivative.is_none() {
            let d = tensorcalc::cov_deriv_assoc(pool, &self.geo.torsion, &self.geo.gamma)
                .expect("rank 3");
            self.torsion_derivative = Some(d);
        }
        self.torsion_derivative.as_ref().expect("just built")
    }

    pub fn riemann(&mut self, pool: &mut ExprPool) -> &TensorField {
        if self.riemann.is_none() {
            self.riemann = Some(tensorcalc::riemann_assoc(pool, &self.geo.gamma));
        }
        self.riemann.as_ref().expect("just built")
    }

    pub fn curvature(&mut self, pool: &mut ExprPool, params: &CurvatureParams) -> TensorField {
        let r = self.riemann(pool).clone();
        let geo = &self.geo;
        tensorcalc::curvature_family(pool, params, &r, &geo.torsion, &geo.gamma).expect("rank 3")
    }

    /// `σ^i_{(s)(r)jmn} = τ^i_{(r)jm;n} − ζ^i_{(s1)αn}Q^α_{jm} + ζ^α_{(s2)jn}Q^i_{αm}
    /// + ζ^α_{(s3)mn}Q^i_{jα}` with `Q = T + τ_(r)`.
    pub fn sigma(
        &mut self,
        pool: &mut ExprPool,
        s: SigmaSelector,
        r: TorsionSelector,
        form: TauForm,
    ) -> &TensorField {
        if !self.sigma.contains_key(&(s, r, form)) {
            let tau = self.tau(pool, r, form).clone();
            let dtau = tensorcalc::cov_deriv_assoc(pool, &tau, &self.geo.gamma).expect("rank 3");
            let q = self.geo.torsion.add(&tau, pool);
            let n = self.dim();
            let [k1, k2, k3] = s.0;
            let (z1, z2, z3) = (
                self.zeta_unchecked(k1),
                self.zeta_unchecked(k2),
                self.zeta_unchecked(k3),
            );
            let out = TensorField::from_fn(pool, n, &[Up, Down, Down, Down], |p, idx| {
                let (i, j, m, nn) = (idx[0], idx[1], idx[2], idx[3]);
                let mut terms = Vec::with_capacity(3 * n + 1);
                terms.push(dtau.get(idx));
                for a in 0..n {
                    let t = p.mul(z1.get(&[i, a, nn]), q.get(&[a, j, m]));
                    terms.push(p.neg(t));
                    terms.push(p.mul(z2.get(&[a, j, nn]), q.get(&[i, a, m])));
                    terms.push(p.mul(z3.get(&[a, m, nn]), q.get(&[i, j, a])));
                }
                p.sum(terms)
            });
            self.sigma.insert((s, r, form), out);
        }
        &self.sigma[&(s, r, form)]
    }

    /// `Θ^i_{(r¹)(r²)jmn} = T^α_{jm}τ^i_{(r²)αn} + T^i_{αn}τ^α_{(r¹)jm} + τ^α_{(r¹)jm}τ^i_{(r²)αn}`.
    pub fn theta(
        &mut self,
        pool: &mut ExprPool,
        r1: TorsionSelector,
        r2: TorsionSelector,
        form: TauForm,
    ) -> &TensorField {
        if !self.theta.contains_key(&(r1, r2, form)) {
            let t1 = self.tau(pool, r1, form).clone();
            let t2 = self.tau(pool, r2, form).clone();
            let torsion = &self.geo.torsion;
            let a = tensorcalc::chained_product(pool, torsion, &t2);
            let b = tensorcalc::chained_product(pool, &t1, torsion);
            let c = tensorcalc::chained_product(pool, &t1, &t2);
            let out = a.add(&b, pool).add(&c, pool);
            self.theta.insert((r1, r2, form), out);
        }
        &self.theta[&(r1, r2, form)]
    }
}

pub use weyl::{weyl_conformal, weyl_covariant, weyl_type_covariant, weyl_type_invariant};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Evaluator};
    use crate::tensor::multi_indices;

    fn coords(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("x{k}")).collect()
    }

    #[test]
    fn zero_psi_leaves_metric_unchanged() {
        let mut p = ExprPool::new();
        let m = MetricField::parse(&mut p, &coords(2), &[vec!["1", "x1"], vec!["-x1", "2+x2"]])
            .unwrap();
        let zero = p.zero();
        assert_eq!(conformal_image(&mut p, &m, zero), m);
    }

    #[test]
    fn zeta_two_on_warped_plane() {
        // g = diag(1, x1²): ln|g| = 2 ln x1, so ζ_(2)¹₁₁ = (1/4)(2/x1 + 2/x1 − 2/x1) = 1/(2x1)
        let mut p = ExprPool::new();
        let m =
            MetricField::parse(&mut p, &coords(2), &[vec!["1", "0"], vec!["0", "x1^2"]]).unwrap();
        let space = ConformalSpace::new(&mut p, &m).unwrap();
        let z = space.zeta(2).unwrap().clone();
        let mut ev = Evaluator::new(&p, &[0.8f64, 0.1]);
        let v = ev.eval(z.get(&[0, 0, 0])).unwrap();
        assert!((v - 1.0 / 1.6).abs() < 1e-14);
        assert_eq!(space.zeta(3).unwrap_err(), Error::InvalidKind(3));
    }

    #[test]
    fn flat_zeta_two_vanishes() {
        let mut p = ExprPool::new();
        let m = MetricField::flat(&mut p, coords(3));
        let space = ConformalSpace::new(&mut p, &m).unwrap();
        assert!(space.zeta(2).unwrap().is_identically_zero(&p));
    }

    #[test]
    fn symmetric_metric_has_no_tau_sigma_theta() {
        let mut p = ExprPool::new();
        let m = MetricField::parse(
            &mut p,
            &coords(3),
            &[
                vec!["1+x1^2", "0.1*x2", "0"],
                vec!["0.1*x2", "1", "0"],
                vec!["0", "0", "exp(x3)"],
            ],
        )
        .unwrap();
        let mut space = ConformalSpace::new(&mut p, &m).unwrap();
        for r in TorsionSelector::all() {
            assert!(space
                .tau(&mut p, r, TauForm::Printed)
                .is_identically_zero(&p));
        }
        let s = SigmaSelector([1, 2, 1]);
        let r = TorsionSelector([2, 1, 2, 1, 1]);
        assert!(space
            .sigma(&mut p, s, r, TauForm::Printed)
            .is_identically_zero(&p));
        assert!(space
            .theta(&mut p, r, TorsionSelector::ONES, TauForm::Printed)
            .is_identically_zero(&p));
    }

    #[test]
    fn constant_metric_has_zero_tau() {
        // both ζ vanish for a constant metric, and every τ term carries one
        let mut p = ExprPool::new();
        let m = MetricField::parse(
            &mut p,
            &coords(3),
            &[
                vec!["1", "0.3", "0"],
                vec!["-0.3", "1", "0.1"],
                vec!["0", "-0.1", "1"],
            ],
        )
        .unwrap();
        let mut space = ConformalSpace::new(&mut p, &m).unwrap();
        for r in TorsionSelector::all() {
            assert!(space
                .tau(&mut p, r, TauForm::Printed)
                .is_identically_zero(&p));
        }
    }

    #[test]
    fn tau_antisymmetry_needs_paired_selectors() {
        // swapping j and k maps the first term onto minus the third and the
        // fourth onto minus the fifth, so those slots must pick the same ζ
        let mut p = ExprPool::new();
        let m = MetricField::parse(
            &mut p,
            &coords(3),
            &[
                vec!["1+0.1*x1*x2", "0.2*x3", "0.1*sin(x1)"],
                vec!["-0.2*x3", "1-0.1*x2", "0.05*x1"],
                vec!["-0.1*sin(x1)", "-0.05*x1", "1+0.1*x3^2"],
            ],
        )
        .unwrap();
        let mut space = ConformalSpace::new(&mut p, &m).unwrap();
        let taus: Vec<(TorsionSelector, TensorField)> = TorsionSelector::all()
            .map(|r| (r, space.tau(&mut p, r, TauForm::Printed).clone()))
            .collect();
        let mut ev = Evaluator::new(&p, &[0.2f64, -0.3, 0.4]);
        for (r, t) in &taus {
            let v = t.eval(&mut ev).unwrap();
            let asym = multi_indices(3, 3)
                .map(|idx| (v.get(&idx) + v.get(&[idx[0], idx[2], idx[1]])).abs())
                .fold(0.0, f64::max);
            let paired = r.0[0] == r.0[2] && r.0[3] == r.0[4];
            if paired {
                assert!(asym < 1e-12, "{r}: {asym}");
            } else {
                assert!(asym > 1e-6, "{r}: {asym}");
            }
        }
    }

    #[test]
    fn psi_gradient_forms_for_linear_psi() {
        let mut p = ExprPool::new();
        let m = MetricField::parse(
            &mut p,
            &coords(2),
            &[vec!["1", "0.1*x2"], vec!["-0.1*x2", "1+0.2*x1"]],
        )
        .unwrap();
        let psi = parse_expr(&mut p, "0.1*x1", &coords(2)).unwrap();
        let pair = ConformalPair::new(&mut p, m, psi);
        let base = Geometry::new(&mut p, &pair.base).unwrap();
        let image = Geometry::new(&mut p, &pair.image).unwrap();
        let grad = psi_gradient_from_dets(&mut p, &base, &image);
        let mut ev = Evaluator::new(&p, &[0.3f64, -0.2]);
        for form in [&grad.from_traces, &grad.from_dets] {
            let v = form.eval(&mut ev).unwrap();
            assert!((v.data[0] - 0.1).abs() < 1e-12);
            assert!(v.data[1].abs() < 1e-12);
        }
    }
}
