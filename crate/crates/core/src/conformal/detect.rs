use serde::{Deserialize, Serialize};

use super::{ConformalSpace, TauForm, TorsionSelector};
use crate::error::{Error, Result};
use crate::expr::{Evaluator, ExprPool};
use crate::metric::MetricField;
use crate::tensor::TensorField;

/// Components of the first metric with magnitude at or below this are ignored.
pub const NEGLIGIBLE_COMPONENT: f64 = 1e-12;
/// Ratio spread tolerated for a conformal verdict.
const RATIO_TOLERANCE: f64 = 1e-9;
/// Thomas-invariant deviation tolerated for the cross-check verdict.
const THOMAS_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiSample {
    pub point: Vec<f64>,
    pub psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRatio {
    pub i: usize,
    pub j: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThomasVerdict {
    pub invariant: bool,
    pub max_deviation: f64,
    pub worst_selector: TorsionSelector,
    pub tolerance: f64,
}

/// Outcome of [`detect_conformal`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub conformal: bool,
    /// `½ ln(B_ij / A_ij)` at each decided point (only when conformal).
    pub psi_samples: Vec<PsiSample>,
    /// Two components whose ratios disagree, or a non-positive ratio.
    pub witness: Option<(Vec<f64>, ComponentRatio, ComponentRatio)>,
    /// Points where every component of the first metric is negligible.
    pub skipped: Vec<Vec<f64>>,
    pub thomas: ThomasVerdict,
    /// True when the ratio verdict and the Thomas verdict coincide.
    pub verdicts_agree: bool,
}

fn ratio_witness(
    a: &[f64],
    b: &[f64],
    n: usize,
) -> std::result::Result<Option<f64>, (ComponentRatio, ComponentRatio)> {
    let mut reference: Option<ComponentRatio> = None;
    for i in 0..n {
        for j in 0..n {
            let av = a[i * n + j];
            if av.abs() <= NEGLIGIBLE_COMPONENT {
                continue;
            }
            let here = ComponentRatio {
                i,
                j,
                ratio: b[i * n + j] / av,
            };
            match &reference {
                None => {
                    if here.ratio <= 0.0 || !here.ratio.is_finite() {
                        return Err((here.clone(), here));
                    }
                    reference = Some(here);
                }
                Some(r) => {
                    if (here.ratio - r.ratio).abs() > RATIO_TOLERANCE * (1.0 + r.ratio.abs()) {
                        return Err((r.clone(), here));
                    }
                }
            }
        }
    }
    Ok(reference.map(|r| r.ratio))
}

/// Decides whether `b = e^{2ψ}a` at the given points from component ratios,
/// and cross-checks by comparing all 32 Thomas-type invariants of both metrics.
pub fn detect_conformal(
    pool: &mut ExprPool,
    a: &MetricField,
    b: &MetricField,
    points: &[Vec<f64>],
) -> Result<Detection> {
    if a.coords() != b.coords() {
        return Err(Error::ShapeMismatch(format!(
            "coordinate lists differ: {:?} vs {:?}",
            a.coords(),
            b.coords()
        )));
    }
    let n = a.dim();
    let mut space_a = ConformalSpace::new(pool, a)?;
    let mut space_b = ConformalSpace::new(pool, b)?;
    let selectors: Vec<TorsionSelector> = TorsionSelector::all().collect();
    let pairs: Vec<(TensorField, TensorField)> = selectors
        .iter()
        .map(|&r| {
            (
                space_a.thomas(pool, r, TauForm::Printed),
                space_b.thomas(pool, r, TauForm::Printed),
            )
        })
        .collect();
    let pool: &ExprPool = pool;

    let mut conformal = true;
    let mut psi_samples = Vec::new();
    let mut witness = None;
    let mut skipped = Vec::new();
    let mut worst = (0.0f64, TorsionSelector::ONES);
    for point in points {
        let mut ev = Evaluator::new(pool, point);
        space_a.geo.check_point(&mut ev)?;
        let mut ev_b = Evaluator::new(pool, point);
        space_b.geo.check_point(&mut ev_b)?;
        let av: Vec<f64> = a
            .components()
            .iter()
            .map(|&e| ev.eval(e))
            .collect::<Result<_>>()?;
        let bv: Vec<f64> = b
            .components()
            .iter()
            .map(|&e| ev.eval(e))
            .collect::<Result<_>>()?;
        match ratio_witness(&av, &bv, n) {
            Ok(Some(ratio)) => psi_samples.push(PsiSample {
                point: point.clone(),
                psi: 0.5 * ratio.ln(),
            }),
            Ok(None) => skipped.push(point.clone()),
            Err((first, second)) => {
                conformal = false;
                if witness.is_none() {
                    witness = Some((point.clone(), first, second));
                }
            }
        }
        for (r, (ta, tb)) in selectors.iter().zip(&pairs) {
            let dev = ta.eval(&mut ev)?.scaled_deviation(&tb.eval(&mut ev)?);
            if dev > worst.0 || dev.is_nan() {
                worst = (dev, *r);
            }
        }
    }
    if !points.is_empty() && skipped.len() == points.len() {
        return Err(Error::AllComponentsNegligible(points[0].clone()));
    }
    if !conformal {
        psi_samples.clear();
    }
    let thomas = ThomasVerdict {
        invariant: worst.0 <= THOMAS_TOLERANCE,
        max_deviation: worst.0,
        worst_selector: worst.1,
        tolerance: THOMAS_TOLERANCE,
    };
    Ok(Detection {
        conformal,
        verdicts_agree: conformal == thomas.invariant,
        psi_samples,
        witness,
        skipped,
        thomas,
    })
}
