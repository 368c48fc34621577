//! Empirical-frequency typicality tests.

use crate::prob::LOG_ZERO;

/// Absorbs rounding in `count / n` so boundary cases are not decided by it.
const EDGE: f64 = 1e-12;

/// Strong typicality against a fixed law on a finite cell set.
///
/// A sequence of cells is typical when every empirical frequency is within
/// `delta` of the law and no cell of probability zero occurs.
#[derive(Debug, Clone)]
pub struct JointTypicality {
    law: Vec<f64>,
    /// Cells whose probability exceeds `delta`; they must occur at least once.
    required: Vec<usize>,
    delta: f64,
}

impl JointTypicality {
    pub fn new(law: Vec<f64>, delta: f64) -> Self {
        let required = law
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > delta + EDGE)
            .map(|(i, _)| i)
            .collect();
        JointTypicality {
            law,
            required,
            delta,
        }
    }

    pub fn cells(&self) -> usize {
        self.law.len()
    }

    /// `counts` is scratch space of length [`cells`](Self::cells), all zero
    /// on entry and on return.
    pub fn test(&self, cells: impl Iterator<Item = usize>, counts: &mut [u32]) -> bool {
        let mut touched = Vec::new();
        let mut n = 0u32;
        let mut ok = true;
        for c in cells {
            n += 1;
            if self.law[c] <= LOG_ZERO {
                ok = false;
            }
            if counts[c] == 0 {
                touched.push(c);
            }
            counts[c] += 1;
        }
        let n = f64::from(n.max(1));
        if ok {
            ok = touched
                .iter()
                .all(|&c| (f64::from(counts[c]) / n - self.law[c]).abs() <= self.delta + EDGE)
                && self.required.iter().all(|&c| counts[c] > 0);
        }
        for c in touched {
            counts[c] = 0;
        }
        ok
    }
}

/// Conditional strong typicality of a sequence `b` given a context `a`
/// under `W(b | a)`: `|N(a, b) − N(a)·W(b | a)| ≤ δ·n`, and `N(a, b) = 0`
/// wherever `W(b | a) = 0`.
#[derive(Debug, Clone)]
pub struct ConditionalTypicality {
    /// Row-major `W[a][b]`.
    w: Vec<f64>,
    nb: usize,
    delta: f64,
}

impl ConditionalTypicality {
    pub fn new(w: Vec<f64>, nb: usize, delta: f64) -> Self {
        ConditionalTypicality { w, nb, delta }
    }

    fn context_counts(&self, a: &[u32]) -> Vec<usize> {
        let mut na = vec![0usize; self.w.len() / self.nb];
        for &s in a {
            na[s as usize] += 1;
        }
        na
    }

    pub fn test(&self, a: &[u32], b: &[u32]) -> bool {
        let n = a.len() as f64;
        let na = self.context_counts(a);
        let mut nab = vec![0usize; self.w.len()];
        for (&x, &y) in a.iter().zip(b) {
            nab[x as usize * self.nb + y as usize] += 1;
        }
        nab.iter().enumerate().all(|(cell, &count)| {
            let w = self.w[cell];
            let expected = na[cell / self.nb] as f64 * w;
            if w <= LOG_ZERO {
                count == 0
            } else {
                (count as f64 - expected).abs() <= self.delta * n + EDGE
            }
        })
    }

    /// Whether any `b` sequence is typical given the context `a`.
    ///
    /// Per context symbol the admissible counts form integer intervals; a
    /// typical completion exists iff every interval is nonempty and their
    /// bounds bracket the number of occurrences of that symbol.
    pub fn has_typical_completion(&self, a: &[u32]) -> bool {
        let slack = self.delta * a.len() as f64 + EDGE;
        self.context_counts(a).iter().enumerate().all(|(sym, &count)| {
            if count == 0 {
                return true;
            }
            let row = &self.w[sym * self.nb..(sym + 1) * self.nb];
            let (mut lo_sum, mut hi_sum) = (0usize, 0usize);
            for &w in row {
                let (lo, hi) = if w <= LOG_ZERO {
                    (0, 0)
                } else {
                    let e = count as f64 * w;
                    let lo = (e - slack).ceil().max(0.0) as usize;
                    let hi = ((e + slack).floor().max(-1.0) as i64).min(count as i64);
                    if hi < lo as i64 {
                        return false;
                    }
                    (lo, hi as usize)
                };
                lo_sum += lo;
                hi_sum += hi;
            }
            lo_sum <= count && count <= hi_sum
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_test_checks_every_cell() {
        let t = JointTypicality::new(vec![0.5, 0.5, 0.0], 0.1);
        let mut scratch = vec![0; 3];
        assert!(t.test([0, 1, 0, 1].into_iter(), &mut scratch));
        assert!(!t.test([0, 0, 0, 1].into_iter(), &mut scratch));
        assert!(!t.test([0, 1, 2, 1].into_iter(), &mut scratch));
        assert!(!t.test([0, 0].into_iter(), &mut scratch));
        assert!(scratch.iter().all(|&c| c == 0));
    }

    #[test]
    fn conditional_test() {
        // W(b|a): a = 0 → uniform, a = 1 → always 1.
        let t = ConditionalTypicality::new(vec![0.5, 0.5, 0.0, 1.0], 2, 0.1);
        assert!(t.test(&[0, 0, 1, 1], &[0, 1, 1, 1]));
        assert!(!t.test(&[0, 0, 1, 1], &[0, 1, 0, 1]));
        assert!(!t.test(&[0, 0, 1, 1], &[0, 0, 1, 1]));
        assert!(t.has_typical_completion(&[0, 0, 1, 1]));
        // Three zeros cannot split evenly within 0.1 · 3.
        assert!(!t.has_typical_completion(&[0, 0, 0]));
    }
}
