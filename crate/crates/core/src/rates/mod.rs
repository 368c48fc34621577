//! Achievable-rate conditions for the correlation-preserving block-Markov
//! scheme and for compress-and-forward.
//!
//! Every evaluator solves its conditions for the largest rate `R` (the
//! conditions are linear in `R`), so no block length or codebook size is
//! fixed here. Strict inequalities that do not involve `R` are checked with
//! [`strict_condition_holds`].

mod caf;
mod multiblock;
mod repair;

pub use caf::{check_degeneration, evaluate_caf, CafForm, CafParams, CafReport, ConditionGap, Degeneration};
pub use multiblock::{verify_appendix_b_bounds, BoundCheck, BoundKind};
pub use repair::repair_auxiliary;

use serde::Serialize;

use crate::channel::RelayChannel;
use crate::error::Result;
use crate::process::{names::*, BlockProcess, ElevenVarJoint, NewSchemeParams};

/// Slack a strict inequality needs before it counts as satisfied.
pub const STRICT_TOL: f64 = 1e-12;

/// Decides `lhs < rhs` for a rate-free condition.
///
/// The left side is always a compression cost `I(Ŷ1; …)`. When it vanishes
/// there is no index to deliver and the condition holds as long as the right
/// side is not negative; otherwise the slack must exceed [`STRICT_TOL`].
pub fn strict_condition_holds(lhs: f64, rhs: f64) -> bool {
    rhs - lhs > STRICT_TOL || (lhs <= STRICT_TOL && rhs - lhs >= -STRICT_TOL)
}

/// Information parts of the per-block cost and capacity terms, in nats.
///
/// `c1` and `c2` would carry the rate itself; only their information parts
/// are stored, so `c1 == c3` and `c2 == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `I(Y; X, Ŷ1, X1 | X̃̃, X̃1, Ỹ)`
    pub d1: f64,
    /// `I(X; Y, Ŷ1 | X1, Ỹ, Ŷ̃1, X̃1, X̃̃)`
    pub d2: f64,
    /// `I(Y; Ŷ1, X1 | X, Ỹ, X̃, X̃1)`
    pub d3: f64,
}

pub fn compute_rate_terms(j: &ElevenVarJoint) -> Result<RateTerms> {
    let joint = &j.joint;
    let c3 = joint.conditional_mutual_information(&[YH], &[Y1], &[X1, X])?;
    let d1 = joint.conditional_mutual_information(&[Y], &[X, YH, X1], &[X_TT, X1_T, Y_T])?;
    let d2 = joint.conditional_mutual_information(&[X], &[Y, YH], &[X1, Y_T, YH_T, X1_T, X_TT])?;
    let d3 = joint.conditional_mutual_information(&[Y], &[YH, X1], &[X, Y_T, X_T, X1_T])?;
    Ok(RateTerms {
        c1: c3,
        c2: 0.0,
        c3,
        d1,
        d2,
        d3,
    })
}

/// Evaluation of the correlation-preserving scheme at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// Largest `R` allowed by `R ≤ D2`.
    pub rate_bound_a: f64,
    /// `D3 − C3`; must be positive.
    pub feasibility_gap_b: f64,
    /// Largest `R` allowed by `R + C3 ≤ D1`.
    pub rate_bound_c: f64,
    pub achievable_rate: f64,
    pub feasible: bool,
    pub terms: RateTerms,
    pub stationary_residual: f64,
    pub non_unique_warning: bool,
}

impl RateReport {
    fn from_terms(terms: RateTerms, bp: &BlockProcess) -> Self {
        let rate_bound_a = terms.d2;
        let feasibility_gap_b = terms.d3 - terms.c3;
        let rate_bound_c = terms.d1 - terms.c3;
        let feasible = strict_condition_holds(terms.c3, terms.d3);
        let achievable_rate = if feasible {
            rate_bound_a.min(rate_bound_c).max(0.0)
        } else {
            0.0
        };
        RateReport {
            rate_bound_a,
            feasibility_gap_b,
            rate_bound_c,
            achievable_rate,
            feasible,
            terms,
            stationary_residual: bp.residual,
            non_unique_warning: bp.non_unique_warning,
        }
    }

    /// Same report with every information quantity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let t = self.terms;
        RateReport {
            rate_bound_a: self.rate_bound_a * factor,
            feasibility_gap_b: self.feasibility_gap_b * factor,
            rate_bound_c: self.rate_bound_c * factor,
            achievable_rate: self.achievable_rate * factor,
            terms: RateTerms {
                c1: t.c1 * factor,
                c2: t.c2 * factor,
                c3: t.c3 * factor,
                d1: t.d1 * factor,
                d2: t.d2 * factor,
                d3: t.d3 * factor,
            },
            ..self.clone()
        }
    }
}

pub fn evaluate_new_scheme(ch: &RelayChannel, p: &NewSchemeParams) -> Result<RateReport> {
    let bp = BlockProcess::new(ch, p)?;
    evaluate_process(&bp)
}

pub fn evaluate_process(bp: &BlockProcess) -> Result<RateReport> {
    let j = bp.eleven_variable_joint()?;
    let terms = compute_rate_terms(&j)?;
    Ok(RateReport::from_terms(terms, bp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::JointDistribution;

    fn flip(a: usize, b: usize, p: f64) -> f64 {
        if a == b {
            1.0 - p
        } else {
            p
        }
    }

    #[test]
    fn strictness_rule() {
        assert!(strict_condition_holds(0.0, 0.0));
        assert!(strict_condition_holds(0.1, 0.2));
        assert!(!strict_condition_holds(0.1, 0.1));
        assert!(!strict_condition_holds(0.1, 0.05));
    }

    #[test]
    fn memoryless_terms_match_single_block() {
        let ch = RelayChannel::from_fn([2, 2, 2, 2], |x, x1, y, y1| {
            flip(x ^ x1, y, 0.15) * flip(x, y1, 0.05)
        })
        .unwrap();
        let p = NewSchemeParams::from_rows(
            &[vec![0.4, 0.6], vec![0.4, 0.6]],
            &[vec![0.3, 0.7], vec![0.3, 0.7]],
            &[vec![vec![0.9, 0.1], vec![0.8, 0.2]], vec![vec![0.25, 0.75], vec![0.1, 0.9]]],
        )
        .unwrap();
        let bp = BlockProcess::new(&ch, &p).unwrap();
        let t = compute_rate_terms(&bp.eleven_variable_joint().unwrap()).unwrap();
        let single: &JointDistribution = &bp.stationary;
        let d1 = single.mutual_information(&["y"], &["x", "yh", "x1"]).unwrap();
        let d2 = single
            .conditional_mutual_information(&["x"], &["y", "yh"], &["x1"])
            .unwrap();
        let d3 = single
            .conditional_mutual_information(&["y"], &["yh", "x1"], &["x"])
            .unwrap();
        assert!((t.d1 - d1).abs() < 1e-12);
        assert!((t.d2 - d2).abs() < 1e-12);
        assert!((t.d3 - d3).abs() < 1e-12);
        assert_eq!(t.c1, t.c3);
        assert_eq!(t.c2, 0.0);
    }

    #[test]
    fn constant_yhat_has_zero_compression_cost() {
        let ch = RelayChannel::from_fn([2, 2, 2, 2], |x, x1, y, y1| {
            flip(x ^ x1, y, 0.15) * flip(x, y1, 0.05)
        })
        .unwrap();
        let p = NewSchemeParams::from_rows(
            &[vec![0.8, 0.2], vec![0.3, 0.7]],
            &[vec![0.3, 0.7], vec![0.6, 0.4]],
            &vec![vec![vec![1.0, 0.0]; 2]; 2],
        )
        .unwrap();
        let r = evaluate_new_scheme(&ch, &p).unwrap();
        assert!(r.terms.c3.abs() < 1e-15);
    }

    #[test]
    fn constant_output_collapses_terms() {
        let ch = RelayChannel::from_fn([2, 2, 1, 2], |x, _, _, y1| flip(x, y1, 0.1)).unwrap();
        let p = NewSchemeParams::from_rows(
            &[vec![0.8, 0.2], vec![0.3, 0.7]],
            &[vec![0.3, 0.7], vec![0.6, 0.4]],
            &[vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![vec![0.4, 0.6], vec![0.7, 0.3]]],
        )
        .unwrap();
        let bp = BlockProcess::new(&ch, &p).unwrap();
        let j = bp.eleven_variable_joint().unwrap();
        let t = compute_rate_terms(&j).unwrap();
        assert!(t.d1.abs() < 1e-14 && t.d3.abs() < 1e-14);
        let d2 = j
            .joint
            .conditional_mutual_information(&[X], &[YH], &[X1, Y_T, YH_T, X1_T, X_TT])
            .unwrap();
        assert!((t.d2 - d2).abs() < 1e-12);
        let r = evaluate_new_scheme(&ch, &p).unwrap();
        assert_eq!(r.achievable_rate, 0.0);
        assert!(!r.feasible);
    }

    #[test]
    fn deaf_relay_reduces_to_direct_terms() {
        // Y1 carries nothing and Ŷ1 is constant.
        let ch = RelayChannel::from_fn([2, 2, 2, 1], |x, x1, y, _| flip(x ^ x1, y, 0.2)).unwrap();
        let p = NewSchemeParams::from_rows(
            &[vec![0.7, 0.3], vec![0.2, 0.8]],
            &[vec![0.5, 0.5]],
            &[vec![vec![1.0], vec![1.0]]],
        )
        .unwrap();
        let bp = BlockProcess::new(&ch, &p).unwrap();
        let r = evaluate_process(&bp).unwrap();
        assert!(r.feasible);
        let j = bp.eleven_variable_joint().unwrap().joint;
        let a = j
            .conditional_mutual_information(&[X], &[Y], &[X1, Y_T, X1_T, X_TT])
            .unwrap();
        let c = j
            .conditional_mutual_information(&[Y], &[X, X1], &[X_TT, X1_T, Y_T])
            .unwrap();
        assert!((r.achievable_rate - a.min(c)).abs() < 1e-12);
    }
}
