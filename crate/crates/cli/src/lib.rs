//! Command-line front end: reads JSON space files, evaluates tensors and
//! invariants at points, and runs the conformal invariance suite.

pub mod args;
pub mod error;
pub mod space;

use std::io::Write;
use std::path::Path;

use grweyl::conformal::{
    detect_conformal, weyl_conformal, weyl_covariant, weyl_type_covariant, weyl_type_invariant,
};
use grweyl::tensorcalc::{self, ricci_contractions};
use grweyl::verify::{random_psi, random_space, run_pair_suite, InstanceSpec, SuiteConfig};
use grweyl::{
    ConformalSpace, CurvatureParams, Evaluator, ExprPool, Geometry, RhoSelector, TauForm,
    TensorField, TorsionSelector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub use args::{Cli, Command, Common};
pub use error::{CliError, Outcome};
use space::{Sampler, Space, SpaceFile};

/// Stream used for `--rho random:K` draws.
const RHO_STREAM: u64 = 5;
/// Failed checks echoed to stderr by `verify`.
const MAX_LISTED: usize = 12;

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .map_err(|e| CliError::Io(p.display().to_string(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| CliError::Io("stdout".into(), e))
        }
    }
}

fn to_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value")
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad point `{text}`")))
        })
        .collect()
}

struct Loaded {
    pool: ExprPool,
    space: Space,
    points: Vec<Vec<f64>>,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    if let Some(n) = common.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let file = SpaceFile::read(&common.input)?;
    let mut pool = ExprPool::new();
    let space = file.parse(&mut pool)?;
    let points = if common.points.is_empty() {
        file.evaluation_points()
    } else {
        common
            .points
            .iter()
            .map(|p| parse_point(p))
            .collect::<Result<_, _>>()?
    };
    if points.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no evaluation points (give `points`, `sampler`, or --point)",
            common.input.display()
        )));
    }
    for p in &points {
        if p.len() != file.dimension {
            return Err(CliError::Usage(format!(
                "point {p:?} does not have {} coordinates",
                file.dimension
            )));
        }
    }
    Ok(Loaded {
        pool,
        space,
        points,
    })
}

fn parse_params(text: &str) -> Result<CurvatureParams, CliError> {
    Ok(text.parse::<CurvatureParams>()?)
}

/// Evaluates named fields at each point after checking the metric there.
fn dump(
    pool: &ExprPool,
    geo: &Geometry,
    points: &[Vec<f64>],
    fields: &[(String, TensorField)],
) -> Result<Value, CliError> {
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let mut ev = Evaluator::new(pool, p);
        geo.check_point(&mut ev)?;
        let mut entry = Map::new();
        entry.insert("point".into(), json!(p));
        for (name, field) in fields {
            entry.insert(name.clone(), field.eval(&mut ev)?.to_nested());
        }
        out.push(Value::Object(entry));
    }
    Ok(Value::Array(out))
}

fn header(space: &Space) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("dimension".into(), json!(space.file.dimension));
    m.insert("coords".into(), json!(space.file.coords));
    m
}

fn cmd_tensors(common: &Common, params: &str) -> Result<Outcome, CliError> {
    let params = parse_params(params)?;
    let Loaded {
        mut pool,
        space,
        points,
    } = load(common)?;
    let geo = Geometry::new(&mut pool, &space.metric)?;
    let r = tensorcalc::riemann_assoc(&mut pool, &geo.gamma);
    let c = ricci_contractions(&mut pool, &r, &geo.ginv);
    let k = tensorcalc::curvature_family(&mut pool, &params, &r, &geo.torsion, &geo.gamma)?;
    let fields = vec![
        ("g".to_string(), geo.g.clone()),
        ("F".to_string(), geo.skew.clone()),
        ("g_inverse".to_string(), geo.ginv.clone()),
        ("Gamma".to_string(), geo.christoffel.clone()),
        ("gamma".to_string(), geo.gamma.clone()),
        ("T".to_string(), geo.torsion.clone()),
        ("R".to_string(), r),
        ("R_ricci".to_string(), c.ricci),
        ("R_mixed".to_string(), c.mixed),
        ("R_scalar".to_string(), TensorField::scalar(c.scalar)),
        ("K".to_string(), k),
    ];
    let mut out = header(&space);
    out.insert("params".into(), json!(params));
    out.insert("points".into(), dump(&pool, &geo, &points, &fields)?);
    write_output(common.output.as_deref(), &to_pretty(&Value::Object(out)))?;
    Ok(Outcome::Pass)
}

fn cmd_curvature(common: &Common, params: &str) -> Result<Outcome, CliError> {
    let params = parse_params(params)?;
    let Loaded {
        mut pool,
        space,
        points,
    } = load(common)?;
    let geo = Geometry::new(&mut pool, &space.metric)?;
    let r = tensorcalc::riemann_assoc(&mut pool, &geo.gamma);
    let rc = ricci_contractions(&mut pool, &r, &geo.ginv);
    let k = tensorcalc::curvature_family(&mut pool, &params, &r, &geo.torsion, &geo.gamma)?;
    let kc = ricci_contractions(&mut pool, &k, &geo.ginv);
    let fields = vec![
        ("R".to_string(), r),
        ("R_ricci".to_string(), rc.ricci),
        ("R_mixed".to_string(), rc.mixed),
        ("R_scalar".to_string(), TensorField::scalar(rc.scalar)),
        ("K".to_string(), k),
        ("K_ricci".to_string(), kc.ricci),
        ("K_mixed".to_string(), kc.mixed),
        ("K_scalar".to_string(), TensorField::scalar(kc.scalar)),
    ];
    let mut out = header(&space);
    out.insert("params".into(), json!(params));
    out.insert("points".into(), dump(&pool, &geo, &points, &fields)?);
    write_output(common.output.as_deref(), &to_pretty(&Value::Object(out)))?;
    Ok(Outcome::Pass)
}

fn parse_torsion_selectors(text: &str) -> Result<Vec<TorsionSelector>, CliError> {
    if text == "all" {
        Ok(TorsionSelector::all().collect())
    } else {
        Ok(vec![text.parse()?])
    }
}

fn cmd_thomas(common: &Common, selector: &str, form: TauForm) -> Result<Outcome, CliError> {
    let selectors = parse_torsion_selectors(selector)?;
    let Loaded {
        mut pool,
        space,
        points,
    } = load(common)?;
    let mut cs = ConformalSpace::new(&mut pool, &space.metric)?;
    let fields: Vec<(String, TensorField)> = selectors
        .iter()
        .map(|&r| (r.to_string(), cs.thomas(&mut pool, r, form)))
        .collect();
    let mut out = header(&space);
    out.insert("tau_form".into(), json!(form));
    out.insert("points".into(), dump(&pool, &cs.geo, &points, &fields)?);
    write_output(common.output.as_deref(), &to_pretty(&Value::Object(out)))?;
    Ok(Outcome::Pass)
}

/// `random:K` draws `K` selectors plus the two corners from `--seed`.
fn parse_rho(text: &str, seed: u64) -> Result<Vec<RhoSelector>, CliError> {
    match text.strip_prefix("random:") {
        Some(k) => {
            let k: usize = k
                .parse()
                .map_err(|_| CliError::Usage(format!("bad rho count in `{text}`")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(RHO_STREAM);
            Ok(RhoSelector::sample(&mut rng, k))
        }
        None => Ok(vec![text.parse()?]),
    }
}

fn cmd_weyl(
    common: &Common,
    rho: &str,
    params: &str,
    form: TauForm,
    covariant: bool,
) -> Result<Outcome, CliError> {
    let rhos = parse_rho(rho, common.seed)?;
    let params = parse_params(params)?;
    let Loaded {
        mut pool,
        space,
        points,
    } = load(common)?;
    let mut cs = ConformalSpace::new(&mut pool, &space.metric)?;
    let weyl = if covariant {
        weyl_covariant(&mut pool, &mut cs)?
    } else {
        weyl_conformal(&mut pool, &mut cs)?
    };
    let mut fields = vec![("weyl".to_string(), weyl)];
    for rho in &rhos {
        let c = if covariant {
            weyl_type_covariant(&mut pool, &mut cs, rho, &params, form)?
        } else {
            weyl_type_invariant(&mut pool, &mut cs, rho, &params, form)?
        };
        fields.push((format!("weyl_type[{rho}]"), c));
    }
    let mut out = header(&space);
    out.insert("params".into(), json!(params));
    out.insert("tau_form".into(), json!(form));
    out.insert("covariant".into(), json!(covariant));
    out.insert(
        "rho".into(),
        json!(rhos.iter().map(|r| r.to_string()).collect::<Vec<_>>()),
    );
    out.insert("points".into(), dump(&pool, &cs.geo, &points, &fields)?);
    write_output(common.output.as_deref(), &to_pretty(&Value::Object(out)))?;
    Ok(Outcome::Pass)
}

struct VerifyOptions<'a> {
    tolerances: &'a [String],
    report: Option<&'a Path>,
    corrupt: bool,
    auto_psi: Option<u64>,
    form: TauForm,
}

fn cmd_verify(common: &Common, opts: VerifyOptions<'_>) -> Result<Outcome, CliError> {
    let mut config = SuiteConfig::new(common.seed);
    for t in opts.tolerances {
        config.tolerances.apply(t)?;
    }
    config.corrupt = opts.corrupt;
    config.tau_form = opts.form;
    let Loaded {
        mut pool,
        space,
        points,
    } = load(common)?;
    let psi = match (opts.auto_psi, space.psi) {
        (Some(seed), _) => random_psi(&mut pool, &InstanceSpec::new(space.file.dimension, seed)),
        (None, Some(psi)) => psi,
        (None, None) => {
            return Err(CliError::Usage(format!(
                "{}: no `psi` in the file and no --auto-psi seed",
                common.input.display()
            )))
        }
    };
    let report = run_pair_suite(&mut pool, &space.metric, psi, &points, &config)?;
    let failed = report.failures().count();
    eprintln!("{} checks, {} failed", report.records.len(), failed);
    for r in report.failures().take(MAX_LISTED) {
        eprintln!(
            "FAIL {} deviation {:e} > {:e}",
            r.name, r.deviation, r.tolerance
        );
    }
    if failed > MAX_LISTED {
        eprintln!("... and {} more in the report", failed - MAX_LISTED);
    }
    write_output(opts.report.or(common.output.as_deref()), &report.to_json())?;
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn cmd_detect(common: &Common, against: &Path) -> Result<Outcome, CliError> {
    let Loaded {
        mut pool,
        space,
        points,
    } = load(common)?;
    let other = SpaceFile::read(against)?.parse(&mut pool)?;
    let detection = detect_conformal(&mut pool, &space.metric, &other.metric, &points)?;
    let text = serde_json::to_string_pretty(&detection).expect("detection is plain data");
    write_output(common.output.as_deref(), &text)?;
    Ok(if detection.conformal {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn cmd_generate(
    dimension: usize,
    seed: u64,
    epsilon: f64,
    count: usize,
    output: Option<&Path>,
) -> Result<Outcome, CliError> {
    let mut spec = InstanceSpec::new(dimension, seed);
    spec.epsilon = epsilon;
    spec.points = count;
    let mut pool = ExprPool::new();
    let metric = random_space(&mut pool, &spec)?;
    let psi = random_psi(&mut pool, &spec);
    let mut file = SpaceFile::from_fields(&pool, &metric, Some(psi));
    file.sampler = Some(Sampler {
        count,
        seed,
        sample_box: spec.sample_box,
    });
    write_output(output, &file.to_json())?;
    Ok(Outcome::Pass)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Tensors { common, params } => cmd_tensors(common, params),
        Command::Curvature { common, params } => cmd_curvature(common, params),
        Command::Thomas {
            common,
            selector,
            tau_form,
        } => cmd_thomas(common, selector, (*tau_form).into()),
        Command::Weyl {
            common,
            rho,
            params,
            tau_form,
            covariant,
        } => cmd_weyl(common, rho, params, (*tau_form).into(), *covariant),
        Command::Verify {
            common,
            tolerances,
            report,
            corrupt,
            auto_psi,
            tau_form,
        } => cmd_verify(
            common,
            VerifyOptions {
                tolerances,
                report: report.as_deref(),
                corrupt: *corrupt,
                auto_psi: *auto_psi,
                form: (*tau_form).into(),
            },
        ),
        Command::Detect { common, against } => cmd_detect(common, against),
        Command::Generate {
            dimension,
            seed,
            epsilon,
            points,
            output,
        } => cmd_generate(*dimension, *seed, *epsilon, *points, output.as_deref()),
    }
}
