//! Compress-and-forward rate conditions in their equivalent published forms.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use super::{evaluate_new_scheme, strict_condition_holds, RateReport};
use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::prob::{neumaier_sum, Alphabet, ConditionalKernel, JointDistribution, Var, MASS_TOL};
use crate::process::NewSchemeParams;
use crate::simplex;

/// Independent inputs `p(x) p(x1)` and a compressor `p(ŷ1 | y1, x1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CafParams {
    pub yhat_alpha: Alphabet,
    pub input_law: Vec<f64>,
    pub relay_law: Vec<f64>,
    /// Given `(y1, x1)`, out `yh`.
    pub compressor: ConditionalKernel,
}

fn check_law(name: &str, law: &[f64]) -> Result<()> {
    if law.is_empty() {
        return Err(Error::Shape(format!("{name} is empty")));
    }
    if let Some(p) = law.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::Validation(format!("{name} has invalid entry {p}")));
    }
    let s = neumaier_sum(law.iter().copied());
    if (s - 1.0).abs() > MASS_TOL {
        return Err(Error::Validation(format!("{name} sums to {s}")));
    }
    Ok(())
}

impl CafParams {
    /// `compressor` is indexed `[y1][x1][ŷ1]`.
    pub fn from_rows(input_law: &[f64], relay_law: &[f64], compressor: &[Vec<Vec<f64>>]) -> Result<Self> {
        check_law("input_law", input_law)?;
        check_law("relay_law", relay_law)?;
        let nx1 = relay_law.len();
        let ny1 = compressor.len();
        if ny1 == 0 || compressor.iter().any(|r| r.len() != nx1) {
            return Err(Error::Shape(format!(
                "compressor must be indexed [y1][x1] with {nx1} relay inputs"
            )));
        }
        let nyh = compressor[0][0].len();
        if nyh == 0 {
            return Err(Error::Shape("compressor rows are empty".into()));
        }
        let yhat = Alphabet::new("Yhat1", nyh);
        let flat: Vec<Vec<f64>> = compressor.iter().flatten().cloned().collect();
        Ok(CafParams {
            compressor: ConditionalKernel::from_rows(
                vec![
                    Var::new("y1", Alphabet::new("Y1", ny1)),
                    Var::new("x1", Alphabet::new("X1", nx1)),
                ],
                vec![Var::new("yh", yhat.clone())],
                &flat,
            )?,
            yhat_alpha: yhat,
            input_law: input_law.to_vec(),
            relay_law: relay_law.to_vec(),
        })
    }

    pub fn random<R: Rng + ?Sized>(ch: &RelayChannel, yhat_size: usize, rng: &mut R) -> Self {
        let [nx, nx1, _, ny1] = ch.sizes();
        let input = simplex::dirichlet_row(nx, rng);
        let relay = simplex::dirichlet_row(nx1, rng);
        let comp: Vec<Vec<_>> = (0..ny1)
            .map(|_| (0..nx1).map(|_| simplex::dirichlet_row(yhat_size, rng)).collect())
            .collect();
        CafParams::from_rows(&input, &relay, &comp).expect("dirichlet rows are stochastic")
    }

    pub fn uniform(ch: &RelayChannel, yhat_size: usize) -> Self {
        let [nx, nx1, _, ny1] = ch.sizes();
        CafParams::from_rows(
            &simplex::uniform_row(nx),
            &simplex::uniform_row(nx1),
            &vec![vec![simplex::uniform_row(yhat_size); nx1]; ny1],
        )
        .expect("uniform rows are stochastic")
    }

    pub fn compressor_rows(&self) -> Vec<Vec<Vec<f64>>> {
        let nx1 = self.relay_law.len();
        self.compressor
            .rows()
            .collect::<Vec<_>>()
            .chunks(nx1)
            .map(|c| c.iter().map(|r| r.to_vec()).collect())
            .collect()
    }

    /// The same laws as memoryless parameters of the correlation-preserving scheme.
    pub fn lift(&self) -> NewSchemeParams {
        let nx = self.input_law.len();
        let nyh = self.yhat_alpha.size;
        NewSchemeParams::from_rows(
            &vec![self.input_law.clone(); nx],
            &vec![self.relay_law.clone(); nyh],
            &self.compressor_rows(),
        )
        .expect("lifting preserves stochastic rows")
    }

    fn check_against(&self, ch: &RelayChannel) -> Result<()> {
        let [nx, nx1, _, ny1] = ch.sizes();
        if self.input_law.len() != nx
            || self.relay_law.len() != nx1
            || self.compressor.given_size() != ny1 * nx1
        {
            return Err(Error::Shape(format!(
                "compress-and-forward parameters do not match channel alphabets {:?}",
                ch.sizes()
            )));
        }
        Ok(())
    }

    /// Single-letter joint over `x, x1, y, y1, yh`.
    pub fn joint(&self, ch: &RelayChannel) -> Result<JointDistribution> {
        self.check_against(ch)?;
        let mut probs = Vec::with_capacity(self.input_law.len() * self.relay_law.len());
        for &px in &self.input_law {
            probs.extend(self.relay_law.iter().map(|q| px * q));
        }
        let roots = JointDistribution::from_parts(
            vec![
                Var::new("x", ch.x_alpha.clone()),
                Var::new("x1", ch.x1_alpha.clone()),
            ],
            probs,
        );
        JointDistribution::compose(&roots, &[ch.kernel().clone(), self.compressor.clone()])
    }
}

/// The published statements of the compress-and-forward conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CafForm {
    Theorem2,
    Form1,
    Form2,
    Form3,
    Compact,
}

impl CafForm {
    pub const ALL: [CafForm; 5] = [
        CafForm::Theorem2,
        CafForm::Form1,
        CafForm::Form2,
        CafForm::Form3,
        CafForm::Compact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CafForm::Theorem2 => "theorem2",
            CafForm::Form1 => "form1",
            CafForm::Form2 => "form2",
            CafForm::Form3 => "form3",
            CafForm::Compact => "compact",
        }
    }
}

impl fmt::Display for CafForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CafForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CafForm::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown form `{s}` (expected theorem2, form1, form2, form3 or compact)"
                ))
            })
    }
}

/// One condition of a form evaluated at `R = 0`.
///
/// For a rate condition `R ≤ bound` the slack is `bound`, the largest
/// admissible rate. For a rate-free condition `lhs < rhs` it is `rhs − lhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionGap {
    pub id: &'static str,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CafReport {
    pub form: CafForm,
    pub achievable_rate: f64,
    pub feasible: bool,
    pub condition_gaps: Vec<ConditionGap>,
}

impl CafReport {
    pub fn gap(&self, id: &str) -> Option<f64> {
        self.condition_gaps.iter().find(|g| g.id == id).map(|g| g.slack)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CafReport {
            achievable_rate: self.achievable_rate * factor,
            condition_gaps: self
                .condition_gaps
                .iter()
                .map(|g| ConditionGap {
                    slack: g.slack * factor,
                    ..g.clone()
                })
                .collect(),
            ..self.clone()
        }
    }
}

pub(crate) const RATE_LIMIT: &str = "rate_limit";
pub(crate) const SUM_RATE_LIMIT: &str = "sum_rate_limit";
pub(crate) const COMPRESSION: &str = "compression";

enum Condition {
    Rate(&'static str, f64),
    Strict(&'static str, f64, f64),
}

fn mi(j: &JointDistribution, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    j.conditional_mutual_information(a, b, c)
}

fn conditions(j: &JointDistribution, form: CafForm) -> Result<Vec<Condition>> {
    use Condition::*;
    let none: &[&str] = &[];
    Ok(match form {
        CafForm::Theorem2 => vec![
            Rate(RATE_LIMIT, mi(j, &["x"], &["y", "yh"], &["x1"])?),
            Strict(
                COMPRESSION,
                mi(j, &["y1"], &["yh"], &["x1", "y"])?,
                mi(j, &["x1"], &["y"], none)?,
            ),
        ],
        CafForm::Form1 => vec![
            Rate(RATE_LIMIT, form1_rate_limit(j)?),
            Strict(
                COMPRESSION,
                mi(j, &["y1"], &["yh"], &["x1"])?,
                mi(j, &["yh"], &["y"], &["x1"])? + mi(j, &["x1"], &["y"], none)?,
            ),
        ],
        CafForm::Form2 => vec![
            Rate(RATE_LIMIT, form1_rate_limit(j)?),
            Rate(SUM_RATE_LIMIT, form2_sum_rate_limit(j)?),
        ],
        CafForm::Form3 => vec![
            Rate(RATE_LIMIT, form1_rate_limit(j)?),
            Rate(SUM_RATE_LIMIT, form2_sum_rate_limit(j)?),
            Strict(
                COMPRESSION,
                mi(j, &["yh"], &["y1"], &["x1", "x"])?,
                mi(j, &["yh"], &["y"], &["x1", "x"])? + mi(j, &["x1"], &["y"], &["x"])?,
            ),
        ],
        CafForm::Compact => vec![
            Rate(RATE_LIMIT, mi(j, &["x"], &["y", "yh"], &["x1"])?),
            Strict(
                COMPRESSION,
                mi(j, &["yh"], &["y1"], &["x1", "x"])?,
                mi(j, &["yh", "x1"], &["y"], &["x"])?,
            ),
            Rate(
                SUM_RATE_LIMIT,
                mi(j, &["x", "yh", "x1"], &["y"], none)? - mi(j, &["y1"], &["yh"], &["x1", "x"])?,
            ),
        ],
    })
}

fn form1_rate_limit(j: &JointDistribution) -> Result<f64> {
    Ok(mi(j, &["x"], &["yh"], &["x1"])? + mi(j, &["x"], &["y"], &["yh", "x1"])?)
}

fn form2_sum_rate_limit(j: &JointDistribution) -> Result<f64> {
    Ok(mi(j, &["x", "yh"], &["y"], &["x1"])? + mi(j, &["x1"], &["y"], &[])?
        + mi(j, &["x"], &["yh"], &["x1"])?
        - mi(j, &["y1"], &["yh"], &["x1"])?)
}

pub(crate) fn evaluate_joint(j: &JointDistribution, form: CafForm) -> Result<CafReport> {
    let conds = conditions(j, form)?;
    let mut feasible = true;
    let mut rate = f64::INFINITY;
    let mut gaps = Vec::with_capacity(conds.len());
    for c in conds {
        match c {
            Condition::Rate(id, bound) => {
                rate = rate.min(bound);
                gaps.push(ConditionGap {
                    id,
                    slack: bound,
                    holds: bound >= 0.0,
                });
            }
            Condition::Strict(id, lhs, rhs) => {
                let holds = strict_condition_holds(lhs, rhs);
                feasible &= holds;
                gaps.push(ConditionGap {
                    id,
                    slack: rhs - lhs,
                    holds,
                });
            }
        }
    }
    let achievable_rate = if feasible { rate.max(0.0) } else { 0.0 };
    Ok(CafReport {
        form,
        achievable_rate,
        feasible,
        condition_gaps: gaps,
    })
}

pub fn evaluate_caf(ch: &RelayChannel, p: &CafParams, form: CafForm) -> Result<CafReport> {
    evaluate_joint(&p.joint(ch)?, form)
}

/// Side-by-side values of the correlation-preserving conditions at
/// memoryless parameters and the compact compress-and-forward conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Degeneration {
    pub new_scheme: RateReport,
    pub caf: CafReport,
    /// Largest of the three pairwise differences.
    pub max_abs_gap: f64,
}

pub fn check_degeneration(ch: &RelayChannel, p: &CafParams) -> Result<Degeneration> {
    let new_scheme = evaluate_new_scheme(ch, &p.lift())?;
    let caf = evaluate_caf(ch, p, CafForm::Compact)?;
    let pairs = [
        (new_scheme.rate_bound_a, caf.gap(RATE_LIMIT)),
        (new_scheme.feasibility_gap_b, caf.gap(COMPRESSION)),
        (new_scheme.rate_bound_c, caf.gap(SUM_RATE_LIMIT)),
    ];
    let max_abs_gap = pairs
        .iter()
        .map(|(a, b)| (a - b.expect("compact form reports all three conditions")).abs())
        .fold(0.0, f64::max);
    Ok(Degeneration {
        new_scheme,
        caf,
        max_abs_gap,
    })
}
