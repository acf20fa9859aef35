use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{CheckRecord, Environment, VerificationReport};
use super::{random_psi, random_space, sample_points, InstanceSpec};
use crate::conformal::{
    psi_gradient_from_dets, weyl_conformal, weyl_covariant, weyl_type_covariant,
    weyl_type_invariant, ConformalPair, ConformalSpace, RhoSelector, SigmaSelector, TauForm,
    TorsionSelector,
};
use crate::error::{Error, Result};
use crate::expr::{Evaluator, Expr, ExprPool};
use crate::metric::MetricField;
use crate::scalar::Scalar;
use crate::tensor::{Down, TensorField, Up};
use crate::tensorcalc::{self, CurvatureParams};

/// Tolerance groups. Each check belongs to exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceClass {
    /// Pointwise algebraic identities.
    Identity,
    /// Relations between separately built objects.
    Relation,
    /// Connection-level invariants and transformation laws.
    FirstOrder,
    /// The classical Weyl tensor.
    Weyl,
    /// Torsion-corrected curvature-level invariants.
    Curvature,
}

impl ToleranceClass {
    const ALL: [ToleranceClass; 5] = [
        ToleranceClass::Identity,
        ToleranceClass::Relation,
        ToleranceClass::FirstOrder,
        ToleranceClass::Weyl,
        ToleranceClass::Curvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToleranceClass::Identity => "identity",
            ToleranceClass::Relation => "relation",
            ToleranceClass::FirstOrder => "first-order",
            ToleranceClass::Weyl => "weyl",
            ToleranceClass::Curvature => "curvature",
        }
    }

    fn default_tolerance(self) -> f64 {
        match self {
            ToleranceClass::Identity => 1e-10,
            ToleranceClass::Relation => 1e-9,
            ToleranceClass::FirstOrder => 1e-8,
            ToleranceClass::Weyl => 1e-8,
            ToleranceClass::Curvature => 1e-7,
        }
    }
}

/// Per-class tolerances plus overrides keyed by check-name prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub classes: BTreeMap<ToleranceClass, f64>,
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            classes: ToleranceClass::ALL
                .iter()
                .map(|&c| (c, c.default_tolerance()))
                .collect(),
            overrides: BTreeMap::new(),
        }
    }
}

impl Tolerances {
    /// `name` is a class name or a check-name prefix.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidSelector(format!("{name}={value}")));
        }
        match ToleranceClass::ALL.iter().find(|c| c.name() == name) {
            Some(c) => {
                self.classes.insert(*c, value);
            }
            None => {
                self.overrides.insert(name.to_string(), value);
            }
        }
        Ok(())
    }

    /// Parses `NAME=VALUE`.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidSelector(assignment.to_string()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSelector(assignment.to_string()))?;
        self.set(name.trim(), value)
    }

    pub fn for_check(&self, name: &str, class: ToleranceClass) -> f64 {
        self.overrides
            .iter()
            .filter(|(prefix, _)| name.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|(_, &v)| v)
            .unwrap_or_else(|| {
                self.classes
                    .get(&class)
                    .copied()
                    .unwrap_or(class.default_tolerance())
            })
    }
}

/// What to run and how.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Seeds the selector and parameter draws.
    pub seed: u64,
    pub tolerances: Tolerances,
    pub tau_form: TauForm,
    /// Adds `diag(0.1·x1, 0, …)` to the image so it is no longer conformal.
    pub corrupt: bool,
    pub sigma_draws: usize,
    pub rho_draws: usize,
    pub ricci_tuples: usize,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        SuiteConfig {
            seed,
            tolerances: Tolerances::default(),
            tau_form: TauForm::Printed,
            corrupt: false,
            sigma_draws: 8,
            rho_draws: 20,
            ricci_tuples: 5,
        }
    }
}

const DRAW_STREAM: u64 = 4;

fn random_params(rng: &mut ChaCha8Rng) -> CurvatureParams {
    let mut c = || rng.gen_range(-1.0..=1.0);
    CurvatureParams::new(c(), c(), c(), c(), c())
}

/// A named comparison of tensor pairs; its deviation is the worst over pairs.
struct Check {
    name: String,
    selector: Option<String>,
    params: Option<CurvatureParams>,
    class: ToleranceClass,
    pairs: Vec<(TensorField, TensorField)>,
}

impl Check {
    fn new(
        name: impl Into<String>,
        class: ToleranceClass,
        lhs: TensorField,
        rhs: TensorField,
    ) -> Self {
        Check {
            name: name.into(),
            selector: None,
            params: None,
            class,
            pairs: vec![(lhs, rhs)],
        }
    }

    /// A check whose pairs are pushed afterwards.
    fn group(name: impl Into<String>, class: ToleranceClass) -> Self {
        Check {
            name: name.into(),
            selector: None,
            params: None,
            class,
            pairs: Vec::new(),
        }
    }

    fn selector(mut self, s: impl ToString) -> Self {
        self.selector = Some(s.to_string());
        self
    }

    fn params(mut self, p: CurvatureParams) -> Self {
        self.params = Some(p);
        self
    }
}

fn zeros_like(pool: &ExprPool, t: &TensorField) -> TensorField {
    TensorField::zeros(pool, t.dim(), t.signature())
}

fn negated_swap(pool: &mut ExprPool, t: &TensorField) -> TensorField {
    let r = t.rank();
    let mut perm: Vec<usize> = (0..r).collect();
    perm.swap(r - 2, r - 1);
    t.permuted(&perm).map(pool, |p, e| p.neg(e))
}

fn sel_name(prefix: &str, parts: &[&dyn std::fmt::Display]) -> String {
    let mut s = prefix.to_string();
    for p in parts {
        s.push('/');
        s.push_str(&p.to_string());
    }
    s
}

fn identity_checks(
    pool: &mut ExprPool,
    base: &mut ConformalSpace,
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    use ToleranceClass::*;
    let n = base.dim();
    let geo = base.geo.clone();
    let mut checks = Vec::new();

    let recombined = geo.g.add(&geo.skew, pool);
    checks.push(Check::new(
        "identity/split-recombination",
        Identity,
        recombined,
        geo.metric.as_tensor(),
    ));

    let product = TensorField::from_fn(pool, n, &[Down, Up], |p, idx| {
        let terms: Vec<Expr> = (0..n)
            .map(|a| p.mul(geo.g.get(&[idx[0], a]), geo.ginv.get(&[a, idx[1]])))
            .collect();
        p.sum(terms)
    });
    let delta = TensorField::from_fn(pool, n, &[Down, Up], |p, idx| {
        if idx[0] == idx[1] {
            p.one()
        } else {
            p.zero()
        }
    });
    checks.push(Check::new(
        "identity/inverse-residual",
        Relation,
        product,
        delta,
    ));

    let gamma_trace = TensorField::from_fn(pool, n, &[Down], |p, idx| {
        let terms: Vec<Expr> = (0..n).map(|a| geo.gamma.get(&[a, idx[0], a])).collect();
        p.sum(terms)
    });
    let half_l = geo.log_det_grad.scale(0.5, pool);
    checks.push(Check::new(
        "identity/gamma-trace",
        Identity,
        gamma_trace,
        half_l,
    ));

    let torsion_trace = TensorField::from_fn(pool, n, &[Down], |p, idx| {
        let terms: Vec<Expr> = (0..n).map(|a| geo.torsion.get(&[a, idx[0], a])).collect();
        p.sum(terms)
    });
    let z = zeros_like(pool, &torsion_trace);
    checks.push(Check::new(
        "identity/torsion-trace",
        Identity,
        torsion_trace,
        z,
    ));

    let metricity = tensorcalc::cov_deriv_assoc(pool, &geo.g, &geo.gamma).expect("rank 2");
    let z = zeros_like(pool, &metricity);
    checks.push(Check::new("identity/metricity", Identity, metricity, z));

    let from_skew =
        tensorcalc::torsion_from_skew_derivatives(pool, &geo.skew, &geo.ginv, &geo.gamma)
            .expect("rank 2");
    checks.push(Check::new(
        "identity/skew-derivative-torsion",
        Relation,
        from_skew,
        geo.torsion.clone(),
    ));

    let f_swap = negated_swap(pool, &geo.skew);
    checks.push(Check::new(
        "identity/skew-antisymmetry",
        Identity,
        geo.skew.clone(),
        f_swap,
    ));
    let t_swap = negated_swap(pool, &geo.torsion);
    checks.push(Check::new(
        "identity/torsion-antisymmetry",
        Identity,
        geo.torsion.clone(),
        t_swap,
    ));
    let r = base.riemann(pool).clone();
    let r_swap = negated_swap(pool, &r);
    checks.push(Check::new(
        "identity/riemann-antisymmetry",
        Identity,
        r,
        r_swap,
    ));

    // antisymmetric in (m, n) only for u' = −u, v' = −v
    let (u, v, w) = (
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(-1.0..=1.0),
    );
    let params = CurvatureParams::new(u, -u, v, -v, w);
    let k = base.curvature(pool, &params);
    let k_swap = negated_swap(pool, &k);
    checks.push(Check::new("identity/curvature-antisymmetry", Identity, k, k_swap).params(params));
    checks
}

fn lower_pair_checks(
    pool: &mut ExprPool,
    pair: &ConformalPair,
    base: &mut ConformalSpace,
    image: &mut ConformalSpace,
    config: &SuiteConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    use ToleranceClass::*;
    let n = base.dim();
    let form = config.tau_form;
    let mut checks = Vec::new();

    let contraction = |pool: &mut ExprPool, s: &ConformalSpace| {
        TensorField::from_fn(pool, n, &[Up, Up, Down, Down], |p, idx| {
            p.mul(
                s.geo.ginv.get(&[idx[0], idx[1]]),
                s.geo.metric.get(idx[2], idx[3]),
            )
        })
    };
    let lhs = contraction(pool, image);
    let rhs = contraction(pool, base);
    checks.push(Check::new(
        "metric-contraction-invariance",
        Relation,
        lhs,
        rhs,
    ));

    let minus_two_psi = pool.scale(-2.0, pair.psi);
    let shrink = pool.exp(minus_two_psi);
    let rescaled = base.geo.ginv.map(pool, |p, e| p.mul(shrink, e));
    checks.push(Check::new(
        "inverse-rescaling",
        Relation,
        image.geo.ginv.clone(),
        rescaled,
    ));

    let analytic = pair.psi_gradient(pool);
    let forms = psi_gradient_from_dets(pool, &base.geo, &image.geo);
    checks.push(Check::new(
        "psi-gradient/traces",
        Relation,
        forms.from_traces.clone(),
        analytic.clone(),
    ));
    checks.push(Check::new(
        "psi-gradient/dets",
        Relation,
        forms.from_dets.clone(),
        analytic,
    ));
    checks.push(Check::new(
        "psi-gradient/forms-agree",
        Identity,
        forms.from_traces,
        forms.from_dets,
    ));

    let dgamma = image.geo.gamma.sub(&base.geo.gamma, pool);
    let z2b = base.zeta(2).expect("kind 2").clone();
    let z2i = image.zeta(2).expect("kind 2").clone();
    let dzeta = z2i.sub(&z2b, pool);
    checks.push(Check::new("zeta-difference", Relation, dgamma, dzeta));

    let mut antisym = Check::group("tau-antisymmetry", Identity).selector("all");
    let mut basic = Check::group("basic-equation", FirstOrder).selector("all");
    let dgam_full = image.geo.christoffel.sub(&base.geo.christoffel, pool);
    for r in TorsionSelector::all() {
        let tb = base.thomas(pool, r, form);
        let ti = image.thomas(pool, r, form);
        checks.push(Check::new(sel_name("thomas", &[&r]), FirstOrder, ti, tb).selector(r));

        let tau_b = base.tau(pool, r, form).clone();
        let tau_i = image.tau(pool, r, form).clone();
        let swapped = negated_swap(pool, &tau_b);
        antisym.pairs.push((tau_b.clone(), swapped));
        // Γ̄ − Γ = (ζ̄_(2) − ζ_(2)) + (τ_(r) − τ̄_(r))
        let rhs = z2i.sub(&z2b, pool);
        let dtau = tau_b.sub(&tau_i, pool);
        let rhs = rhs.add(&dtau, pool);
        basic.pairs.push((dgam_full.clone(), rhs));
    }
    checks.push(antisym);
    checks.push(basic);

    let tb_d = base.torsion_derivative(pool).clone();
    let ti_d = image.torsion_derivative(pool).clone();
    let dtorsion = ti_d.sub(&tb_d, pool);
    let tt =
        |pool: &mut ExprPool, s: &ConformalSpace| tensorcalc::torsion_square(pool, &s.geo.torsion);
    let tt_b = tt(pool, base);
    let tt_i = tt(pool, image);
    let dtt = tt_i.sub(&tt_b, pool);
    for k in 0..config.sigma_draws {
        let s = SigmaSelector::random(rng);
        let r = TorsionSelector::random(rng);
        let r2 = TorsionSelector::random(rng);
        let tag = format!("{k:02}");

        let tau = base.tau(pool, r, form).clone();
        let qb = base.geo.torsion.add(&tau, pool);
        let tau = image.tau(pool, r, form).clone();
        let qi = image.geo.torsion.add(&tau, pool);
        checks.push(
            Check::new(
                sel_name("laws/torsion-plus-tau", &[&tag]),
                FirstOrder,
                qi.clone(),
                qb.clone(),
            )
            .selector(r),
        );

        // T̄_{|n} = T_{;n} + σ̄ − σ
        let sb = base.sigma(pool, s, r, form).clone();
        let si = image.sigma(pool, s, r, form).clone();
        let dsigma = si.sub(&sb, pool);
        checks.push(
            Check::new(
                sel_name("laws/sigma", &[&tag]),
                FirstOrder,
                dtorsion.clone(),
                dsigma,
            )
            .selector(format!("{s},{r}")),
        );

        // T̄T̄ = TT + Θ − Θ̄
        let thb = base.theta(pool, r, r2, form).clone();
        let thi = image.theta(pool, r, r2, form).clone();
        let dtheta = thb.sub(&thi, pool);
        checks.push(
            Check::new(
                sel_name("laws/theta", &[&tag]),
                FirstOrder,
                dtt.clone(),
                dtheta,
            )
            .selector(format!("{r},{r2}")),
        );

        let tau = base.tau(pool, r2, form).clone();
        let qb2 = base.geo.torsion.add(&tau, pool);
        let tau = image.tau(pool, r2, form).clone();
        let qi2 = image.geo.torsion.add(&tau, pool);
        let prod_b = tensorcalc::chained_product(pool, &qb, &qb2);
        let prod_i = tensorcalc::chained_product(pool, &qi, &qi2);
        checks.push(
            Check::new(
                sel_name("laws/theta-product", &[&tag]),
                FirstOrder,
                prod_i,
                prod_b,
            )
            .selector(format!("{r},{r2}")),
        );
    }
    checks
}

fn curvature_checks(
    pool: &mut ExprPool,
    pair: &ConformalPair,
    base: &mut ConformalSpace,
    image: &mut ConformalSpace,
    config: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    skipped: &mut Vec<String>,
) -> Result<Vec<Check>> {
    use ToleranceClass::*;
    let form = config.tau_form;
    let mut checks = Vec::new();

    let ginv = base.geo.ginv.clone();
    let r = base.riemann(pool).clone();
    let rc = tensorcalc::ricci_contractions(pool, &r, &ginv);
    let dt = base.torsion_derivative(pool).clone();
    let div = tensorcalc::ricci_contractions(pool, &dt, &ginv).ricci;
    let x = tensorcalc::torsion_square_contraction(pool, &base.geo.torsion);
    for k in 0..config.ricci_tuples {
        let params = random_params(rng);
        let kf = base.curvature(pool, &params);
        let kc = tensorcalc::ricci_contractions(pool, &kf, &ginv);
        let a = div.scale(params.u, pool);
        let b = x.scale(params.v_prime + params.w, pool);
        let rhs = rc.ricci.add(&a, pool).add(&b, pool);
        checks.push(
            Check::new(format!("ricci-relation/{k:02}"), Relation, kc.ricci, rhs).params(params),
        );
    }

    if base.dim() < 3 {
        skipped.push("weyl: requires dimension at least 3".to_string());
        skipped.push("weyl-type: requires dimension at least 3".to_string());
        return Ok(checks);
    }
    let cb = weyl_conformal(pool, base)?;
    let ci = weyl_conformal(pool, image)?;
    checks.push(Check::new("weyl/invariance", Weyl, ci, cb));
    let cb = weyl_covariant(pool, base)?;
    let ci = weyl_covariant(pool, image)?;
    checks.push(Check::new(
        "weyl/covariant-invariance",
        Weyl,
        ci.clone(),
        cb.clone(),
    ));
    let minus_two_psi = pool.scale(-2.0, pair.psi);
    let shrink = pool.exp(minus_two_psi);
    let ci_scaled = ci.map(pool, |p, e| p.mul(shrink, e));
    checks.push(Check::new("weyl/covariant-rescaled", Weyl, ci_scaled, cb));

    for (k, rho) in RhoSelector::sample(rng, config.rho_draws)
        .into_iter()
        .enumerate()
    {
        let params = random_params(rng);
        let tag = format!("{k:02}");
        let b = weyl_type_invariant(pool, base, &rho, &params, form)?;
        let i = weyl_type_invariant(pool, image, &rho, &params, form)?;
        checks.push(
            Check::new(sel_name("weyl-type", &[&tag]), Curvature, i, b)
                .selector(rho)
                .params(params),
        );
        let b = weyl_type_covariant(pool, base, &rho, &params, form)?;
        let i = weyl_type_covariant(pool, image, &rho, &params, form)?;
        checks.push(
            Check::new(sel_name("weyl-type-covariant", &[&tag]), Curvature, i, b)
                .selector(rho)
                .params(params),
        );
    }
    Ok(checks)
}

fn evaluate<S: Scalar>(pool: &ExprPool, checks: &[Check], point: &[f64]) -> Result<Vec<S>> {
    let pt: Vec<S> = point.iter().map(|&v| S::lit(v)).collect();
    let mut ev = Evaluator::new(pool, &pt);
    checks
        .iter()
        .map(|c| {
            let mut worst = S::zero();
            for (a, b) in &c.pairs {
                let d = a
                    .eval(&mut ev)
                    .and_then(|x| Ok(x.scaled_deviation(&b.eval(&mut ev)?)))
                    .map_err(|e| Error::InCheck {
                        check: c.name.clone(),
                        source: Box::new(e),
                    })?;
                worst = if d.is_nan() || worst.is_nan() {
                    S::nan()
                } else {
                    worst.max(d)
                };
            }
            Ok(worst)
        })
        .collect()
}

/// Runs every check on `base` and its conformal image under `psi` at the
/// given points. Construction or evaluation errors abort; failed checks do not.
pub fn run_pair_suite(
    pool: &mut ExprPool,
    base: &MetricField,
    psi: Expr,
    points: &[Vec<f64>],
    config: &SuiteConfig,
) -> Result<VerificationReport> {
    let n = base.dim();
    let mut pair = ConformalPair::new(pool, base.clone(), psi);
    if config.corrupt {
        let x1 = pool.coord(0);
        let bump = pool.scale(0.1, x1);
        let g00 = pool.add(pair.image.get(0, 0), bump);
        let image = pair.image.clone();
        pair.image = MetricField::from_fn(pool, image.coords().to_vec(), |_, i, j| {
            if (i, j) == (0, 0) {
                g00
            } else {
                image.get(i, j)
            }
        });
    }
    let mut base_space = ConformalSpace::new(pool, &pair.base)?;
    let mut image_space = ConformalSpace::new(pool, &pair.image)?;
    for point in points {
        if point.len() != n {
            return Err(Error::PointDimension {
                point: point.clone(),
                got: point.len(),
                expected: n,
            });
        }
        let mut ev = Evaluator::new(pool, point);
        base_space.geo.check_point(&mut ev)?;
        image_space.geo.check_point(&mut ev)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(DRAW_STREAM);
    let mut skipped = Vec::new();
    let mut checks = identity_checks(pool, &mut base_space, &mut rng);
    checks.extend(lower_pair_checks(
        pool,
        &pair,
        &mut base_space,
        &mut image_space,
        config,
        &mut rng,
    ));
    checks.extend(curvature_checks(
        pool,
        &pair,
        &mut base_space,
        &mut image_space,
        config,
        &mut rng,
        &mut skipped,
    )?);

    let pool: &ExprPool = pool;
    let per_point: Vec<Vec<f64>> = points
        .par_iter()
        .map(|pt| evaluate::<f64>(pool, &checks, pt))
        .collect::<Result<_>>()?;

    let mut records: Vec<CheckRecord> = checks
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let deviation = per_point.iter().map(|d| d[k]).fold(0.0, |m: f64, d| {
                if d.is_nan() || m.is_nan() {
                    f64::NAN
                } else {
                    m.max(d)
                }
            });
            let tolerance = config.tolerances.for_check(&c.name, c.class);
            CheckRecord {
                name: c.name.clone(),
                selector: c.selector.clone(),
                params: c.params,
                class: c.class,
                deviation,
                tolerance,
                passed: deviation <= tolerance,
            }
        })
        .collect();
    records.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(VerificationReport {
        environment: Environment {
            seed: config.seed,
            dimension: n,
            points: points.len(),
            tau_form: config.tau_form,
            corrupted: config.corrupt,
        },
        passed: records.iter().all(|r| r.passed),
        skipped,
        records,
    })
}

/// Generates a random instance from `spec` and runs the full suite on it.
pub fn run_suite(spec: &InstanceSpec, tolerances: &Tolerances) -> Result<VerificationReport> {
    let mut pool = ExprPool::new();
    let base = random_space(&mut pool, spec)?;
    let psi = random_psi(&mut pool, spec);
    let points = sample_points(spec);
    let mut config = SuiteConfig::new(spec.seed);
    config.tolerances = tolerances.clone();
    run_pair_suite(&mut pool, &base, psi, &points, &config)
}
