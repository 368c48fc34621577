//! Degrades a compressor until the stricter compress-and-forward statement
//! holds at a rate the looser one allows.

use super::caf::{evaluate_joint, CafForm, CafParams, COMPRESSION, RATE_LIMIT, SUM_RATE_LIMIT};
use super::STRICT_TOL;
use crate::channel::RelayChannel;
use crate::error::{Error, Result};

const BISECTION_STEPS: usize = 30;

/// `λ·p + (1 − λ)·δ0` row by row; `λ = 0` makes `Ŷ1` constant.
fn mix_toward_constant(p: &CafParams, lambda: f64) -> CafParams {
    let rows: Vec<Vec<Vec<f64>>> = p
        .compressor_rows()
        .into_iter()
        .map(|by_x1| {
            by_x1
                .into_iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(i, v)| lambda * v + if i == 0 { 1.0 - lambda } else { 0.0 })
                        .collect()
                })
                .collect()
        })
        .collect();
    CafParams::from_rows(&p.input_law, &p.relay_law, &rows).expect("mixture rows are stochastic")
}

fn form1_holds_at(ch: &RelayChannel, p: &CafParams, rate: f64) -> Result<bool> {
    let r = evaluate_joint(&p.joint(ch)?, CafForm::Form1)?;
    let limit = r.gap(RATE_LIMIT).expect("form1 has a rate limit");
    Ok(r.feasible && rate <= limit + STRICT_TOL)
}

/// Returns a compressor whose joint satisfies the stricter statement at `rate`.
///
/// The input must satisfy the two-condition statement at `rate`. The result
/// is `p` itself when nothing needs fixing, the constant compressor when the
/// direct link alone supports `rate`, and otherwise the least-degraded
/// mixture `λ·p + (1 − λ)·δ0` that keeps the rate limit above `rate`.
pub fn repair_auxiliary(ch: &RelayChannel, p: &CafParams, rate: f64) -> Result<CafParams> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Argument(format!("rate must be a finite non-negative number, got {rate}")));
    }
    let joint = p.joint(ch)?;
    let loose = evaluate_joint(&joint, CafForm::Form2)?;
    let limit = loose.gap(RATE_LIMIT).expect("form2 has a rate limit");
    let sum_limit = loose.gap(SUM_RATE_LIMIT).expect("form2 has a sum-rate limit");
    if rate > limit + STRICT_TOL || rate > sum_limit + STRICT_TOL {
        return Err(Error::Argument(format!(
            "rate {rate} violates the two-condition statement (limits {limit}, {sum_limit})"
        )));
    }
    if form1_holds_at(ch, p, rate)? {
        return Ok(p.clone());
    }
    let direct = joint.conditional_mutual_information(&["x"], &["y"], &["x1"])?;
    if rate <= direct + STRICT_TOL {
        return Ok(mix_toward_constant(p, 0.0));
    }
    let rate_limit = |lambda: f64| -> Result<f64> {
        let r = evaluate_joint(&mix_toward_constant(p, lambda).joint(ch)?, CafForm::Form1)?;
        Ok(r.gap(RATE_LIMIT).expect("form1 has a rate limit"))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if rate_limit(mid)? >= rate {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let repaired = mix_toward_constant(p, hi);
    if form1_holds_at(ch, &repaired, rate)? {
        Ok(repaired)
    } else {
        let r = evaluate_joint(&repaired.joint(ch)?, CafForm::Form1)?;
        Err(Error::Repair(format!(
            "best mixture λ = {hi:.9} leaves compression slack {:e} at rate {rate}",
            r.gap(COMPRESSION).unwrap_or(f64::NAN)
        )))
    }
}
