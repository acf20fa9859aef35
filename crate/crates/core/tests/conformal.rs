use grweyl::conformal::{
    conformal_image, weyl_conformal, weyl_covariant, weyl_type_invariant, ConformalPair,
};
use grweyl::verify::{random_psi, random_space, sample_points, InstanceSpec};
use grweyl::{
    parse_expr, ConformalSpace, CurvatureParams, Evaluator, ExprPool, MetricField, RhoSelector,
    SigmaSelector, TauForm, TensorField, TorsionSelector, Variance,
};

struct Pair {
    pool: ExprPool,
    pair: ConformalPair,
    base: ConformalSpace,
    image: ConformalSpace,
    points: Vec<Vec<f64>>,
}

/// Seed 0 at `N = 3` has non-closed skew part, so its torsion is nonzero.
fn torsion_pair(dim: usize, seed: u64) -> Pair {
    let spec = InstanceSpec::new(dim, seed);
    let mut pool = ExprPool::new();
    let metric = random_space(&mut pool, &spec).unwrap();
    let psi = random_psi(&mut pool, &spec);
    let pair = ConformalPair::new(&mut pool, metric, psi);
    let base = ConformalSpace::new(&mut pool, &pair.base).unwrap();
    let image = ConformalSpace::new(&mut pool, &pair.image).unwrap();
    Pair {
        pool,
        pair,
        base,
        image,
        points: sample_points(&spec),
    }
}

fn symmetric_pair(dim: usize, seed: u64) -> Pair {
    let spec = InstanceSpec::new(dim, seed);
    let mut pool = ExprPool::new();
    let metric = random_space(&mut pool, &spec).unwrap();
    let metric = MetricField::from_fn(&mut pool, spec.coords(), |p, i, j| {
        let s = p.add(metric.get(i, j), metric.get(j, i));
        p.scale(0.5, s)
    });
    let psi = random_psi(&mut pool, &spec);
    let pair = ConformalPair::new(&mut pool, metric, psi);
    let base = ConformalSpace::new(&mut pool, &pair.base).unwrap();
    let image = ConformalSpace::new(&mut pool, &pair.image).unwrap();
    Pair {
        pool,
        pair,
        base,
        image,
        points: sample_points(&spec),
    }
}

fn deviation(pool: &ExprPool, a: &TensorField, b: &TensorField, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|x| {
            let mut ev = Evaluator::new(pool, x);
            a.eval(&mut ev)
                .unwrap()
                .scaled_deviation(&b.eval(&mut ev).unwrap())
        })
        .fold(0.0, f64::max)
}

fn max_abs(pool: &ExprPool, a: &TensorField, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|x| a.eval(&mut Evaluator::new(pool, x)).unwrap().max_abs())
        .fold(0.0, f64::max)
}

fn torsion_plus_tau(
    pool: &mut ExprPool,
    s: &mut ConformalSpace,
    r: TorsionSelector,
    form: TauForm,
) -> TensorField {
    let tau = s.tau(pool, r, form).clone();
    s.geo.torsion.add(&tau, pool)
}

#[test]
fn printed_tau_misses_trace_term() {
    let Pair {
        mut pool,
        pair,
        mut base,
        mut image,
        points,
    } = torsion_pair(3, 0);
    let n = 3.0;
    let psi_up = pair.psi_raised(&mut pool, &base.geo);
    let skew = base.geo.skew.clone();
    // −(N/2) ψ^i F_jk
    let predicted = TensorField::from_fn(
        &mut pool,
        3,
        &[Variance::Up, Variance::Down, Variance::Down],
        |p, idx| {
            let t = p.mul(psi_up.get(&[idx[0]]), skew.get(&[idx[1], idx[2]]));
            p.scale(-n / 2.0, t)
        },
    );
    assert!(max_abs(&pool, &predicted, &points) > 1e-3);
    for r in [
        TorsionSelector::ONES,
        TorsionSelector::TWOS,
        "12121".parse().unwrap(),
    ] {
        let qi = torsion_plus_tau(&mut pool, &mut image, r, TauForm::Printed);
        let qb = torsion_plus_tau(&mut pool, &mut base, r, TauForm::Printed);
        let residual = qi.sub(&qb, &mut pool);
        assert!(deviation(&pool, &residual, &predicted, &points) < 1e-12);
    }
}

#[test]
fn trace_completed_tau_gives_invariant_thomas() {
    let Pair {
        mut pool,
        mut base,
        mut image,
        points,
        ..
    } = torsion_pair(3, 0);
    let form = TauForm::TraceCompleted;
    for r in TorsionSelector::all() {
        let qi = torsion_plus_tau(&mut pool, &mut image, r, form);
        let qb = torsion_plus_tau(&mut pool, &mut base, r, form);
        assert!(deviation(&pool, &qi, &qb, &points) < 1e-12, "{r}");
        let ti = image.thomas(&mut pool, r, form);
        let tb = base.thomas(&mut pool, r, form);
        assert!(deviation(&pool, &ti, &tb, &points) < 1e-12, "{r}");
    }
}

#[test]
fn printed_thomas_invariant_without_skew_part() {
    let Pair {
        mut pool,
        mut base,
        mut image,
        points,
        ..
    } = symmetric_pair(3, 0);
    for r in TorsionSelector::all() {
        let ti = image.thomas(&mut pool, r, TauForm::Printed);
        let tb = base.thomas(&mut pool, r, TauForm::Printed);
        assert!(deviation(&pool, &ti, &tb, &points) < 1e-12, "{r}");
    }
}

#[test]
fn sigma_and_theta_laws_with_trace_completed_tau() {
    let Pair {
        mut pool,
        mut base,
        mut image,
        points,
        ..
    } = torsion_pair(3, 0);
    let form = TauForm::TraceCompleted;
    let tb_d = base.torsion_derivative(&mut pool).clone();
    let ti_d = image.torsion_derivative(&mut pool).clone();
    let lhs = ti_d.sub(&tb_d, &mut pool);
    assert!(max_abs(&pool, &lhs, &points) > 1e-4);
    let tt_b = grweyl::tensorcalc::torsion_square(&mut pool, &base.geo.torsion);
    let tt_i = grweyl::tensorcalc::torsion_square(&mut pool, &image.geo.torsion);
    let dtt = tt_i.sub(&tt_b, &mut pool);
    let draws: [(&str, &str, &str); 4] = [
        ("111", "11111", "22222"),
        ("212", "12112", "21121"),
        ("122", "22211", "11221"),
        ("221", "21212", "12121"),
    ];
    for (s, r, r2) in draws {
        let s: SigmaSelector = s.parse().unwrap();
        let r: TorsionSelector = r.parse().unwrap();
        let r2: TorsionSelector = r2.parse().unwrap();
        let sb = base.sigma(&mut pool, s, r, form).clone();
        let si = image.sigma(&mut pool, s, r, form).clone();
        // T̄_|n − T_;n = σ − σ̄; the opposite sign fails by 2|σ − σ̄|
        let flipped = sb.sub(&si, &mut pool);
        assert!(deviation(&pool, &lhs, &flipped, &points) < 1e-12, "{s},{r}");
        let printed = si.sub(&sb, &mut pool);
        assert!(deviation(&pool, &lhs, &printed, &points) > 1e-4, "{s},{r}");

        let thb = base.theta(&mut pool, r, r2, form).clone();
        let thi = image.theta(&mut pool, r, r2, form).clone();
        let dtheta = thb.sub(&thi, &mut pool);
        assert!(deviation(&pool, &dtt, &dtheta, &points) < 1e-12, "{r},{r2}");
    }
}

#[test]
fn weyl_type_without_sigma_terms_is_invariant_with_trace_completed_tau() {
    let Pair {
        mut pool,
        mut base,
        mut image,
        points,
        ..
    } = torsion_pair(3, 0);
    let rho: RhoSelector = "121,212,12121,22111,11112,21212,12222,11111,22222,21121"
        .parse()
        .unwrap();
    for params in [
        CurvatureParams::new(0.0, 0.0, 0.7, -0.4, 0.9),
        CurvatureParams::new(0.0, 0.0, 1.0, 0.0, 0.0),
    ] {
        let cb = weyl_type_invariant(&mut pool, &mut base, &rho, &params, TauForm::TraceCompleted)
            .unwrap();
        let ci = weyl_type_invariant(
            &mut pool,
            &mut image,
            &rho,
            &params,
            TauForm::TraceCompleted,
        )
        .unwrap();
        assert!(deviation(&pool, &ci, &cb, &points) < 1e-10);
    }
}

#[test]
fn weyl_type_reduces_to_weyl_for_symmetric_metrics() {
    let Pair {
        mut pool,
        mut base,
        mut image,
        points,
        ..
    } = symmetric_pair(4, 3);
    let w = weyl_conformal(&mut pool, &mut base).unwrap();
    assert!(max_abs(&pool, &w, &points) > 1e-3);
    let rho = RhoSelector::TWOS;
    let params = CurvatureParams::new(0.3, -0.8, 0.5, 0.2, -1.1);
    let c = weyl_type_invariant(&mut pool, &mut base, &rho, &params, TauForm::Printed).unwrap();
    assert!(deviation(&pool, &c, &w, &points) < 1e-12);
    let wi = weyl_conformal(&mut pool, &mut image).unwrap();
    assert!(deviation(&pool, &wi, &w, &points) < 1e-10);
    let ci = weyl_type_invariant(&mut pool, &mut image, &rho, &params, TauForm::Printed).unwrap();
    assert!(deviation(&pool, &ci, &c, &points) < 1e-10);
}

#[test]
fn weyl_vanishes_in_three_dimensions_and_on_conformally_flat_metrics() {
    let Pair {
        mut pool,
        mut base,
        points,
        ..
    } = symmetric_pair(3, 7);
    let w = weyl_conformal(&mut pool, &mut base).unwrap();
    assert!(max_abs(&pool, &w, &points) < 1e-12);

    let mut pool = ExprPool::new();
    let coords: Vec<String> = (1..=4).map(|k| format!("x{k}")).collect();
    let flat = MetricField::flat(&mut pool, coords.clone());
    let psi = parse_expr(&mut pool, "0.2*x1 - 0.1*x2*x3 + 0.3*sin(x4)", &coords).unwrap();
    let image = conformal_image(&mut pool, &flat, psi);
    let mut space = ConformalSpace::new(&mut pool, &image).unwrap();
    let w = weyl_conformal(&mut pool, &mut space).unwrap();
    let riemann = space.riemann(&mut pool).clone();
    let pts = sample_points(&InstanceSpec::new(4, 1));
    assert!(max_abs(&pool, &riemann, &pts) > 1e-2);
    assert!(max_abs(&pool, &w, &pts) < 1e-12);
}

#[test]
fn lowered_weyl_picks_up_the_conformal_factor() {
    let Pair {
        mut pool,
        pair,
        mut base,
        mut image,
        points,
    } = symmetric_pair(4, 3);
    let cb = weyl_covariant(&mut pool, &mut base).unwrap();
    let ci = weyl_covariant(&mut pool, &mut image).unwrap();
    assert!(deviation(&pool, &ci, &cb, &points) > 1e-4);
    let two_psi = pool.scale(2.0, pair.psi);
    let grow = pool.exp(two_psi);
    let expected = cb.map(&mut pool, |p, e| p.mul(grow, e));
    assert!(deviation(&pool, &ci, &expected, &points) < 1e-10);
}
