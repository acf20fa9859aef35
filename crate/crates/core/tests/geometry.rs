use grweyl::tensorcalc::{self, cov_deriv_kind, ricci_contractions};
use grweyl::verify::{random_space, sample_points, summand_rank, InstanceSpec};
use grweyl::{
    CurvatureParams, Evaluator, Evaluator32, ExprPool, Geometry, MetricField, NumTensor64,
    TensorField, Variance,
};
use nalgebra::DMatrix;

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}

fn sphere(p: &mut ExprPool) -> MetricField {
    MetricField::parse(p, &names(2), &[vec!["1", "0"], vec!["0", "sin(x1)^2"]]).unwrap()
}

fn eval(p: &ExprPool, t: &TensorField, x: &[f64]) -> NumTensor64 {
    t.eval(&mut Evaluator::new(p, x)).unwrap()
}

fn instances() -> Vec<InstanceSpec> {
    vec![
        InstanceSpec::new(3, 1),
        InstanceSpec::new(3, 2),
        InstanceSpec::new(3, 3),
        InstanceSpec::new(4, 4),
        InstanceSpec::new(4, 5),
    ]
}

/// Numeric `G_ij` at a point.
fn metric_at(p: &ExprPool, m: &MetricField, x: &[f64]) -> DMatrix<f64> {
    let n = m.dim();
    let mut ev = Evaluator::new(p, x);
    DMatrix::from_fn(n, n, |i, j| ev.eval(m.get(i, j)).unwrap())
}

/// `Γ^i_{jk}` from central differences of the numeric metric.
fn christoffel_oracle(p: &ExprPool, m: &MetricField, x: &[f64]) -> Vec<f64> {
    let n = m.dim();
    let h = 1e-5;
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            let mut hi = x.to_vec();
            hi[k] += h;
            let mut lo = x.to_vec();
            lo[k] -= h;
            (metric_at(p, m, &hi) - metric_at(p, m, &lo)) / (2.0 * h)
        })
        .collect();
    let big = metric_at(p, m, x);
    let sym = (&big + big.transpose()) * 0.5;
    let inv = sym.try_inverse().unwrap();
    let lower =
        |i: usize, j: usize, k: usize| 0.5 * (dg[k][(j, i)] - dg[i][(j, k)] + dg[j][(i, k)]);
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = (0..n).map(|a| inv[(i, a)] * lower(a, j, k)).sum();
            }
        }
    }
    out
}

#[test]
fn sphere_connection_and_scalar_curvature() {
    let mut p = ExprPool::new();
    let m = sphere(&mut p);
    let geo = Geometry::new(&mut p, &m).unwrap();
    let r = tensorcalc::riemann_assoc(&mut p, &geo.gamma);
    let c = ricci_contractions(&mut p, &r, &geo.ginv);
    for x1 in [0.4, 1.0, 1.3, 2.5] {
        let x = [x1, 0.7];
        let gamma = eval(&p, &geo.gamma, &x);
        assert!((gamma.get(&[0, 1, 1]) + x1.sin() * x1.cos()).abs() < 1e-14);
        assert!((gamma.get(&[1, 0, 1]) - x1.cos() / x1.sin()).abs() < 1e-14);
        assert!((gamma.get(&[1, 1, 0]) - x1.cos() / x1.sin()).abs() < 1e-14);
        let s = Evaluator::new(&p, &x).eval(c.scalar).unwrap();
        assert!((s - 2.0).abs() < 1e-12, "{s}");
        // R_jm = g_jm on the unit sphere
        let ricci = eval(&p, &c.ricci, &x);
        let g = eval(&p, &geo.g, &x);
        assert!(ricci.scaled_deviation(&g) < 1e-12);
    }
}

#[test]
fn christoffel_matches_finite_differences() {
    for spec in instances() {
        let mut p = ExprPool::new();
        let m = random_space(&mut p, &spec).unwrap();
        let geo = Geometry::new(&mut p, &m).unwrap();
        for x in sample_points(&spec).iter().take(3) {
            let exact = eval(&p, &geo.christoffel, x);
            let oracle = christoffel_oracle(&p, &m, x);
            for (a, b) in exact.data.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8, "seed {}: {a} vs {b}", spec.seed);
            }
        }
    }
}

#[test]
fn torsion_example_values() {
    let mut p = ExprPool::new();
    let m = MetricField::parse(
        &mut p,
        &names(3),
        &[
            vec!["1", "x3", "0"],
            vec!["-x3", "1", "0"],
            vec!["0", "0", "1"],
        ],
    )
    .unwrap();
    let geo = Geometry::new(&mut p, &m).unwrap();
    let x = [0.3, -0.8, 1.7];
    let big = eval(&p, &geo.christoffel, &x);
    let t = eval(&p, &geo.torsion, &x);
    assert!((big.get(&[0, 1, 2]) + 0.5).abs() < 1e-15);
    assert!((t.get(&[0, 1, 2]) + 0.5).abs() < 1e-15);
    assert!((t.get(&[1, 0, 2]) - 0.5).abs() < 1e-15);
    assert!((t.get(&[2, 0, 1]) + 0.5).abs() < 1e-15);
}

#[test]
fn trace_identities_and_metricity() {
    for spec in instances() {
        let mut p = ExprPool::new();
        let m = random_space(&mut p, &spec).unwrap();
        let geo = Geometry::new(&mut p, &m).unwrap();
        let n = spec.dimension;
        let metricity = tensorcalc::cov_deriv_assoc(&mut p, &geo.g, &geo.gamma).unwrap();
        for x in sample_points(&spec) {
            let gamma = eval(&p, &geo.gamma, &x);
            let t = eval(&p, &geo.torsion, &x);
            // ½ (ln|det g|)_{,j} from a numeric determinant
            let h = 1e-6;
            for j in 0..n {
                let mut hi = x.clone();
                hi[j] += h;
                let mut lo = x.clone();
                lo[j] -= h;
                let sym = |y: &[f64]| {
                    let big = metric_at(&p, &m, y);
                    ((&big + big.transpose()) * 0.5).determinant().abs().ln()
                };
                let half_log = 0.25 * (sym(&hi) - sym(&lo)) / h;
                let trace: f64 = (0..n).map(|a| gamma.get(&[a, j, a])).sum();
                assert!((trace - half_log).abs() < 1e-8, "{trace} vs {half_log}");
                let ttrace: f64 = (0..n).map(|a| t.get(&[a, j, a])).sum();
                assert!(ttrace.abs() < 1e-12);
            }
            assert!(eval(&p, &metricity, &x).max_abs() < 1e-10);
        }
    }
}

#[test]
fn exact_antisymmetries() {
    let mut p = ExprPool::new();
    let spec = InstanceSpec::new(3, 9);
    let m = random_space(&mut p, &spec).unwrap();
    let geo = Geometry::new(&mut p, &m).unwrap();
    let r = tensorcalc::riemann_assoc(&mut p, &geo.gamma);
    let params = CurvatureParams::new(0.4, -0.4, 0.3, -0.3, 0.8);
    let k = tensorcalc::curvature_family(&mut p, &params, &r, &geo.torsion, &geo.gamma).unwrap();
    let n = 3;
    for i in 0..n {
        for j in 0..n {
            assert_eq!(p.neg(geo.skew.get(&[i, j])), geo.skew.get(&[j, i]));
            for a in 0..n {
                assert_eq!(
                    p.neg(geo.torsion.get(&[i, j, a])),
                    geo.torsion.get(&[i, a, j])
                );
                for b in 0..n {
                    assert_eq!(p.neg(r.get(&[i, j, a, b])), r.get(&[i, j, b, a]));
                }
            }
        }
    }
    let swapped = k.permuted(&[0, 1, 3, 2]);
    for x in sample_points(&spec) {
        let a = eval(&p, &k, &x);
        let b = eval(&p, &swapped, &x);
        let sum: f64 = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(u, v)| (u + v).abs())
            .fold(0.0, f64::max);
        assert!(sum < 1e-12);
    }
}

#[test]
fn skew_derivative_form_of_torsion() {
    for spec in instances() {
        let mut p = ExprPool::new();
        let m = random_space(&mut p, &spec).unwrap();
        let geo = Geometry::new(&mut p, &m).unwrap();
        let rebuilt =
            tensorcalc::torsion_from_skew_derivatives(&mut p, &geo.skew, &geo.ginv, &geo.gamma)
                .unwrap();
        for x in sample_points(&spec) {
            assert!(eval(&p, &rebuilt, &x).scaled_deviation(&eval(&p, &geo.torsion, &x)) < 1e-9);
        }
    }
}

#[test]
fn kind_difference_identity() {
    let mut p = ExprPool::new();
    let spec = InstanceSpec::new(3, 21);
    let m = random_space(&mut p, &spec).unwrap();
    let geo = Geometry::new(&mut p, &m).unwrap();
    let n = 3;
    let field = MetricField::parse(
        &mut p,
        &names(3),
        &[
            vec!["x1*x2", "sin(x3)", "1"],
            vec!["x3", "2+x1", "cos(x2)"],
            vec!["exp(0.3*x1)", "0", "x2^2"],
        ],
    )
    .unwrap();
    let a = TensorField::from_components(
        n,
        &[Variance::Up, Variance::Down],
        field.components().to_vec(),
    )
    .unwrap();
    let k1 = cov_deriv_kind(&mut p, 1, &a, &geo.christoffel).unwrap();
    let k2 = cov_deriv_kind(&mut p, 2, &a, &geo.christoffel).unwrap();
    for x in sample_points(&spec) {
        let d1 = eval(&p, &k1, &x);
        let d2 = eval(&p, &k2, &x);
        let t = eval(&p, &geo.torsion, &x);
        let av = eval(&p, &a, &x);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let expect: f64 = (0..n)
                        .map(|al| {
                            2.0 * t.get(&[i, al, k]) * av.get(&[al, j])
                                + 2.0 * t.get(&[al, k, j]) * av.get(&[i, al])
                        })
                        .sum();
                    let got = d1.get(&[i, j, k]) - d2.get(&[i, j, k]);
                    assert!((got - expect).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn kinds_on_identity_field() {
    let mut p = ExprPool::new();
    let spec = InstanceSpec::new(3, 22);
    let m = random_space(&mut p, &spec).unwrap();
    let geo = Geometry::new(&mut p, &m).unwrap();
    let n = 3;
    let delta = TensorField::from_fn(&mut p, n, &[Variance::Up, Variance::Down], |p, idx| {
        if idx[0] == idx[1] {
            p.one()
        } else {
            p.zero()
        }
    });
    let kinds: Vec<TensorField> = (1..=4)
        .map(|k| cov_deriv_kind(&mut p, k, &delta, &geo.christoffel).unwrap())
        .collect();
    for x in sample_points(&spec) {
        let t = eval(&p, &geo.torsion, &x);
        assert!(eval(&p, &kinds[0], &x).max_abs() < 1e-14);
        assert!(eval(&p, &kinds[1], &x).max_abs() < 1e-14);
        let k3 = eval(&p, &kinds[2], &x);
        let k4 = eval(&p, &kinds[3], &x);
        for (idx, tv) in t.data.iter().enumerate() {
            assert!((k3.data[idx] - 2.0 * tv).abs() < 1e-14);
            assert!((k4.data[idx] + 2.0 * tv).abs() < 1e-14);
        }
    }
}

#[test]
fn kinds_coincide_for_symmetric_metric() {
    let mut p = ExprPool::new();
    let mut spec = InstanceSpec::new(3, 23);
    spec.epsilon = 0.2;
    let m = random_space(&mut p, &spec).unwrap();
    let m = MetricField::from_fn(&mut p, spec.coords(), |p, i, j| {
        let s = p.add(m.get(i, j), m.get(j, i));
        p.scale(0.5, s)
    });
    let geo = Geometry::new(&mut p, &m).unwrap();
    let a = TensorField::from_fn(&mut p, 3, &[Variance::Up, Variance::Down], |p, idx| {
        let x = p.coord(idx[0]);
        let y = p.coord(idx[1]);
        let s = p.sin(y);
        p.mul(x, s)
    });
    let assoc = tensorcalc::cov_deriv_assoc(&mut p, &a, &geo.gamma).unwrap();
    for k in 1..=4 {
        let d = cov_deriv_kind(&mut p, k, &a, &geo.christoffel).unwrap();
        for x in sample_points(&spec) {
            assert!(eval(&p, &d, &x).scaled_deviation(&eval(&p, &assoc, &x)) < 1e-14);
        }
    }
}

#[test]
fn ricci_relation_between_r_and_k() {
    let spec = InstanceSpec::new(3, 31);
    let mut p = ExprPool::new();
    let m = random_space(&mut p, &spec).unwrap();
    let geo = Geometry::new(&mut p, &m).unwrap();
    let r = tensorcalc::riemann_assoc(&mut p, &geo.gamma);
    let rc = ricci_contractions(&mut p, &r, &geo.ginv);
    let dt = tensorcalc::cov_deriv_assoc(&mut p, &geo.torsion, &geo.gamma).unwrap();
    let div = ricci_contractions(&mut p, &dt, &geo.ginv).ricci;
    let x = tensorcalc::torsion_square_contraction(&mut p, &geo.torsion);
    let tuples = [
        [0.3, -1.2, 0.5, 0.9, -0.4],
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0],
        [-0.7, 0.2, 1.5, -0.3, 0.6],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    for [u, up, v, vp, w] in tuples {
        let params = CurvatureParams::new(u, up, v, vp, w);
        let k =
            tensorcalc::curvature_family(&mut p, &params, &r, &geo.torsion, &geo.gamma).unwrap();
        let kc = ricci_contractions(&mut p, &k, &geo.ginv);
        for pt in sample_points(&spec) {
            let kr = eval(&p, &kc.ricci, &pt);
            let rr = eval(&p, &rc.ricci, &pt);
            let d = eval(&p, &div, &pt);
            let xx = eval(&p, &x, &pt);
            for i in 0..kr.data.len() {
                let residual = kr.data[i] - rr.data[i] - u * d.data[i] - (vp + w) * xx.data[i];
                assert!(residual.abs() < 1e-9, "{residual}");
            }
        }
    }
}

#[test]
fn inverse_residual_and_dimension_limit() {
    for spec in instances() {
        let mut p = ExprPool::new();
        let m = random_space(&mut p, &spec).unwrap();
        let geo = Geometry::new(&mut p, &m).unwrap();
        let n = spec.dimension;
        for x in sample_points(&spec) {
            let g = eval(&p, &geo.g, &x);
            let gi = eval(&p, &geo.ginv, &x);
            let gm = DMatrix::from_row_slice(n, n, &g.data);
            let gim = DMatrix::from_row_slice(n, n, &gi.data);
            assert!((gim * gm - DMatrix::identity(n, n)).amax() < 1e-9);
        }
    }
    let mut p = ExprPool::new();
    let flat = MetricField::flat(&mut p, names(5));
    assert!(Geometry::new(&mut p, &flat).is_err());
}

#[test]
fn quadratic_summands_satisfy_cyclic_identity() {
    // lowered torsion is totally antisymmetric, so for N <= 4
    // T^a_{jm}T^i_{an} - T^a_{jn}T^i_{am} + T^a_{mn}T^i_{aj} = 0
    for spec in [
        InstanceSpec::new(3, 0),
        InstanceSpec::new(4, 2),
        InstanceSpec::new(4, 42),
    ] {
        let mut p = ExprPool::new();
        let m = random_space(&mut p, &spec).unwrap();
        let geo = Geometry::new(&mut p, &m).unwrap();
        let [_, _, sq, sq_swapped, sq_cyclic] =
            tensorcalc::torsion_summands(&mut p, &geo.torsion, &geo.gamma).unwrap();
        for x in sample_points(&spec) {
            let a = eval(&p, &sq, &x);
            let b = eval(&p, &sq_swapped, &x);
            let c = eval(&p, &sq_cyclic, &x);
            let scale = a.max_abs();
            assert!(scale > 1e-8);
            for k in 0..a.data.len() {
                assert!((a.data[k] - b.data[k] + c.data[k]).abs() < 1e-14 * (1.0 + scale));
            }
        }
        let probe = summand_rank(&mut p, &m, &sample_points(&spec)[0]).unwrap();
        assert_eq!(probe.rank, 4, "{:?}", probe.singular_values);
    }
}

#[test]
fn closed_skew_part_gives_no_torsion() {
    let spec = InstanceSpec::new(3, 42);
    let mut p = ExprPool::new();
    let m = random_space(&mut p, &spec).unwrap();
    assert_eq!(
        summand_rank(&mut p, &m, &sample_points(&spec)[0])
            .unwrap()
            .rank,
        0
    );
}

#[test]
fn single_precision_tracks_double() {
    let spec = InstanceSpec::new(3, 8);
    let mut p = ExprPool::new();
    let m = random_space(&mut p, &spec).unwrap();
    let geo = Geometry::new(&mut p, &m).unwrap();
    for x in sample_points(&spec) {
        let wide = eval(&p, &geo.christoffel, &x);
        let narrow_x: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let narrow = geo
            .christoffel
            .eval(&mut Evaluator32::new(&p, &narrow_x))
            .unwrap();
        for (a, b) in wide.data.iter().zip(&narrow.data) {
            assert!((a - *b as f64).abs() < 1e-5);
        }
    }
}
