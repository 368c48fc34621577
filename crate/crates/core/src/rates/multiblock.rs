//! Checks the per-block lower bounds used in the error analysis on an
//! explicit multi-block joint.

use serde::Serialize;

use super::compute_rate_terms;
use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::process::{block_var, BlockProcess, NewSchemeParams, MAX_BLOCKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `j = k`: first wrong message and first wrong quantization index coincide.
    Equal,
    /// `j < k`
    MessageFirst,
    /// `j > k`
    IndexFirst,
}

/// One `(j, k)` error event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub j: usize,
    pub k: usize,
    pub kind: BoundKind,
    /// Exact multi-block mutual information.
    pub lhs_exact: f64,
    /// Sum of per-block terms that should not exceed it.
    pub rhs_lower_bound: f64,
    /// `lhs_exact − rhs_lower_bound`
    pub residual: f64,
}

fn names(stem: &str, range: std::ops::RangeInclusive<usize>) -> Vec<String> {
    range.map(|l| block_var(stem, l)).collect()
}

/// Evaluates every `(j, k)` with `1 ≤ j, k ≤ blocks − 1`.
pub fn verify_appendix_b_bounds(
    ch: &RelayChannel,
    p: &NewSchemeParams,
    blocks: usize,
) -> Result<Vec<BoundCheck>> {
    if blocks < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 blocks, got {blocks}"
        )));
    }
    if blocks > MAX_BLOCKS {
        return Err(Error::Size(format!(
            "multi-block verification supports at most {MAX_BLOCKS} blocks, got {blocks}"
        )));
    }
    let bp = BlockProcess::new(ch, p)?;
    let t = compute_rate_terms(&bp.eleven_variable_joint()?)?;
    let joint = bp.anchored_joint(blocks)?;
    let b = blocks;
    let mut out = Vec::new();
    for j in 1..b {
        for k in 1..b {
            let (first, second, cond, bound, kind) = if j == k {
                let mut first = names("x", j..=b - 1);
                first.extend(names("yh", j..=b - 1));
                first.extend(names("x1", j + 1..=b));
                let mut second = names("y", j..=b);
                second.push(block_var("yh", b));
                second.push(block_var("x", b));
                let cond = vec![block_var("x", j - 1), block_var("x1", j)];
                (first, second, cond, (b - j) as f64 * t.d1, BoundKind::Equal)
            } else if j < k {
                let mut first = names("x", j..=b - 1);
                first.extend(names("yh", k..=b - 1));
                first.extend(names("x1", k + 1..=b));
                let mut second = names("y", j..=b);
                second.push(block_var("yh", b));
                second.push(block_var("x", b));
                second.extend(names("yh", j..=k - 1));
                second.extend(names("x1", j + 1..=k));
                let cond = vec![block_var("x", j - 1), block_var("x1", j)];
                let bound = (k - j) as f64 * t.d2 + (b - k) as f64 * t.d1;
                (first, second, cond, bound, BoundKind::MessageFirst)
            } else {
                let mut first = names("x", j..=b - 1);
                first.extend(names("yh", k..=b - 1));
                first.extend(names("x1", k + 1..=b));
                let mut second = names("y", k..=b);
                second.push(block_var("yh", b));
                second.push(block_var("x", b));
                let mut cond = names("x", k..=j - 1);
                cond.push(block_var("x1", k));
                let bound = (j - k) as f64 * t.d3 + (b - j) as f64 * t.d1;
                (first, second, cond, bound, BoundKind::IndexFirst)
            };
            let lhs = joint.conditional_mutual_information(&first, &second, &cond)?;
            out.push(BoundCheck {
                j,
                k,
                kind,
                lhs_exact: lhs,
                rhs_lower_bound: bound,
                residual: lhs - bound,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_count_limits() {
        let ch = RelayChannel::from_fn([2, 2, 2, 2], |x, x1, y, y1| {
            f64::from(u8::from(y == (x ^ x1) && y1 == x))
        })
        .unwrap();
        let p = NewSchemeParams::uniform(&ch, 2);
        assert!(matches!(verify_appendix_b_bounds(&ch, &p, 5), Err(Error::Size(_))));
        assert!(matches!(verify_appendix_b_bounds(&ch, &p, 1), Err(Error::Argument(_))));
        let checks = verify_appendix_b_bounds(&ch, &p, 3).unwrap();
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(|c| c.residual >= -1e-9));
    }
}
