//! The discrete memoryless relay channel `p(y, y1 | x, x1)` and its JSON form.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{neumaier_sum, Alphabet, ConditionalKernel, Var};

/// Slices farther than this from unit mass are rejected rather than renormalized.
pub const NORMALIZE_TOL: f64 = 1e-9;

/// Deviations this small are left untouched so that files written at full
/// precision reload bit-exactly.
const EXACT_TOL: f64 = 1e-14;

/// Upper bound on `|X|·|X1|·|Y|·|Y1|` accepted from a document.
pub const MAX_KERNEL_ENTRIES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RelayChannel {
    pub x_alpha: Alphabet,
    pub x1_alpha: Alphabet,
    pub y_alpha: Alphabet,
    pub y1_alpha: Alphabet,
    kernel: ConditionalKernel,
}

impl RelayChannel {
    pub fn new(
        x_alpha: Alphabet,
        x1_alpha: Alphabet,
        y_alpha: Alphabet,
        y1_alpha: Alphabet,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let kernel = ConditionalKernel::new(
            vec![Var::new("x", x_alpha.clone()), Var::new("x1", x1_alpha.clone())],
            vec![Var::new("y", y_alpha.clone()), Var::new("y1", y1_alpha.clone())],
            probs,
        )?;
        Ok(RelayChannel {
            x_alpha,
            x1_alpha,
            y_alpha,
            y1_alpha,
            kernel,
        })
    }

    /// Builds a channel from `p(y, y1 | x, x1)` given as a closure.
    pub fn from_fn(
        sizes: [usize; 4],
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let [nx, nx1, ny, ny1] = sizes;
        let mut probs = Vec::with_capacity(nx * nx1 * ny * ny1);
        for x in 0..nx {
            for x1 in 0..nx1 {
                for y in 0..ny {
                    for y1 in 0..ny1 {
                        probs.push(f(x, x1, y, y1));
                    }
                }
            }
        }
        let [ax, ax1, ay, ay1] = default_alphabets(sizes);
        RelayChannel::new(ax, ax1, ay, ay1, probs)
    }

    /// Every `(x, x1)` row drawn from a flat Dirichlet law.
    pub fn random<R: Rng + ?Sized>(sizes: [usize; 4], rng: &mut R) -> Self {
        let [nx, nx1, ny, ny1] = sizes;
        let mut probs = Vec::with_capacity(nx * nx1 * ny * ny1);
        for _ in 0..nx * nx1 {
            probs.extend(crate::simplex::dirichlet_row(ny * ny1, rng));
        }
        let [ax, ax1, ay, ay1] = default_alphabets(sizes);
        RelayChannel::new(ax, ax1, ay, ay1, probs).expect("dirichlet rows are stochastic")
    }

    pub fn sizes(&self) -> [usize; 4] {
        [
            self.x_alpha.size,
            self.x1_alpha.size,
            self.y_alpha.size,
            self.y1_alpha.size,
        ]
    }

    pub fn kernel(&self) -> &ConditionalKernel {
        &self.kernel
    }

    pub fn prob(&self, x: usize, x1: usize, y: usize, y1: usize) -> f64 {
        let [_, nx1, _, ny1] = self.sizes();
        self.kernel.get(x * nx1 + x1, y * ny1 + y1)
    }

    /// The `(y, y1)` slice for one input pair, laid out `y`-major.
    pub fn row(&self, x: usize, x1: usize) -> &[f64] {
        self.kernel.row(x * self.x1_alpha.size + x1)
    }

    /// One channel use. Deterministic given the generator state.
    pub fn sample_output<R: Rng + ?Sized>(
        &self,
        x: usize,
        x1: usize,
        rng: &mut R,
    ) -> Result<(usize, usize)> {
        if x >= self.x_alpha.size || x1 >= self.x1_alpha.size {
            return Err(Error::Argument(format!(
                "input pair ({x}, {x1}) outside the channel alphabets"
            )));
        }
        let k = sample_index(self.row(x, x1), rng);
        Ok((k / self.y1_alpha.size, k % self.y1_alpha.size))
    }

    pub fn to_document(&self) -> ChannelDoc {
        let [nx, nx1, ny, ny1] = self.sizes();
        let mut kernel = Vec::with_capacity(nx * nx1);
        for x in 0..nx {
            for x1 in 0..nx1 {
                let row = self.row(x, x1);
                kernel.push(KernelEntry {
                    x,
                    x1,
                    rows: row.chunks(ny1).map(<[f64]>::to_vec).collect(),
                });
            }
        }
        debug_assert!(kernel.iter().all(|e| e.rows.len() == ny));
        ChannelDoc {
            alphabets: AlphabetSizes {
                x: nx,
                x1: nx1,
                y: ny,
                y1: ny1,
            },
            kernel,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("channel serializes")
    }
}

fn default_alphabets(sizes: [usize; 4]) -> [Alphabet; 4] {
    [
        Alphabet::new("X", sizes[0]),
        Alphabet::new("X1", sizes[1]),
        Alphabet::new("Y", sizes[2]),
        Alphabet::new("Y1", sizes[3]),
    ]
}

/// Inverse-CDF draw from a probability row.
pub(crate) fn sample_index<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphabetSizes {
    pub x: usize,
    pub x1: usize,
    pub y: usize,
    pub y1: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelEntry {
    pub x: usize,
    pub x1: usize,
    /// `rows[y][y1] = p(y, y1 | x, x1)`.
    pub rows: Vec<Vec<f64>>,
}

/// On-disk channel description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub alphabets: AlphabetSizes,
    pub kernel: Vec<KernelEntry>,
}

/// Normalizes a probability slice in place per the file-loading policy.
pub(crate) fn normalize_slice(slice: &mut [f64], what: &str) -> Result<()> {
    if let Some(p) = slice.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::Validation(format!("{what}: invalid probability {p}")));
    }
    let s = neumaier_sum(slice.iter().copied());
    let dev = (s - 1.0).abs();
    if dev >= NORMALIZE_TOL {
        return Err(Error::Validation(format!("{what}: sums to {s}")));
    }
    if dev > EXACT_TOL {
        for p in slice.iter_mut() {
            *p /= s;
        }
    }
    Ok(())
}

pub fn load_channel(text: &str) -> Result<RelayChannel> {
    let doc: ChannelDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel document: {e}")))?;
    channel_from_document(&doc)
}

pub fn channel_from_document(doc: &ChannelDoc) -> Result<RelayChannel> {
    let a = &doc.alphabets;
    let sizes = [a.x, a.x1, a.y, a.y1];
    if sizes.contains(&0) {
        return Err(Error::Validation("alphabet sizes must be at least 1".into()));
    }
    let total = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&t| t <= MAX_KERNEL_ENTRIES)
        .ok_or_else(|| Error::Validation("channel alphabets too large".into()))?;
    let width = a.y * a.y1;
    let mut probs = vec![0.0; total];
    let mut seen = vec![false; a.x * a.x1];
    for entry in &doc.kernel {
        if entry.x >= a.x || entry.x1 >= a.x1 {
            return Err(Error::Validation(format!(
                "kernel entry ({}, {}) outside the input alphabets",
                entry.x, entry.x1
            )));
        }
        let r = entry.x * a.x1 + entry.x1;
        if std::mem::replace(&mut seen[r], true) {
            return Err(Error::Validation(format!(
                "kernel entry ({}, {}) given twice",
                entry.x, entry.x1
            )));
        }
        if entry.rows.len() != a.y || entry.rows.iter().any(|row| row.len() != a.y1) {
            return Err(Error::Validation(format!(
                "kernel entry ({}, {}) must be a {}x{} array",
                entry.x, entry.x1, a.y, a.y1
            )));
        }
        let slice = &mut probs[r * width..(r + 1) * width];
        for (dst, src) in slice.iter_mut().zip(entry.rows.iter().flatten()) {
            *dst = *src;
        }
        normalize_slice(slice, &format!("kernel entry ({}, {})", entry.x, entry.x1))?;
    }
    if let Some(r) = seen.iter().position(|s| !s) {
        return Err(Error::Validation(format!(
            "kernel entry ({}, {}) missing",
            r / a.x1,
            r % a.x1
        )));
    }
    let [ax, ax1, ay, ay1] = default_alphabets(sizes);
    RelayChannel::new(ax, ax1, ay, ay1, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const IDENTITY: &str = r#"{
        "alphabets": {"x": 2, "x1": 2, "y": 2, "y1": 2},
        "kernel": [
            {"x": 0, "x1": 0, "rows": [[1, 0], [0, 0]]},
            {"x": 0, "x1": 1, "rows": [[1, 0], [0, 0]]},
            {"x": 1, "x1": 0, "rows": [[0, 0], [0, 1]]},
            {"x": 1, "x1": 1, "rows": [[0, 0], [0, 1]]}
        ]
    }"#;

    #[test]
    fn identity_channel_is_point_masses() {
        let ch = load_channel(IDENTITY).unwrap();
        for x in 0..2 {
            for x1 in 0..2 {
                let row = ch.row(x, x1);
                assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1);
                assert_eq!(ch.prob(x, x1, x, x), 1.0);
            }
        }
    }

    #[test]
    fn short_row_is_rejected() {
        let text = IDENTITY.replace("[[1, 0], [0, 0]]},\n            {\"x\": 0, \"x1\": 1", "[[0.9, 0], [0, 0]]},\n            {\"x\": 0, \"x1\": 1");
        assert!(matches!(load_channel(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn small_deviation_is_renormalized() {
        let text = IDENTITY.replace("[[0, 0], [0, 1]]", "[[0, 0], [0, 1.0000000001]]");
        let ch = load_channel(&text).unwrap();
        assert_eq!(ch.prob(1, 0, 1, 1), 1.0);
    }

    #[test]
    fn negative_entry_is_rejected() {
        let text = IDENTITY.replace("[[1, 0], [0, 0]]", "[[1.1, -0.1], [0, 0]]");
        assert!(matches!(load_channel(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_document_is_parse_error() {
        assert!(matches!(load_channel("{\"alphabets\": 3"), Err(Error::Parse(_))));
        assert!(matches!(load_channel("[]"), Err(Error::Parse(_))));
    }

    #[test]
    fn missing_and_duplicate_entries() {
        let missing = r#"{"alphabets": {"x": 1, "x1": 2, "y": 1, "y1": 1},
            "kernel": [{"x": 0, "x1": 0, "rows": [[1]]}]}"#;
        assert!(matches!(load_channel(missing), Err(Error::Validation(_))));
        let dup = r#"{"alphabets": {"x": 1, "x1": 1, "y": 1, "y1": 1},
            "kernel": [{"x": 0, "x1": 0, "rows": [[1]]}, {"x": 0, "x1": 0, "rows": [[1]]}]}"#;
        assert!(matches!(load_channel(dup), Err(Error::Validation(_))));
    }

    #[test]
    fn independent_bscs_factor() {
        let flip = |a: usize, b: usize, p: f64| if a == b { 1.0 - p } else { p };
        let ch = RelayChannel::from_fn([2, 2, 2, 2], |x, _x1, y, y1| {
            flip(x, y, 0.1) * flip(x, y1, 0.2)
        })
        .unwrap();
        let reloaded = load_channel(&ch.to_json()).unwrap();
        assert_eq!(reloaded, ch);
        assert!((reloaded.prob(0, 1, 1, 0) - 0.1 * 0.8).abs() < 1e-15);
        assert!((reloaded.prob(1, 0, 1, 0) - 0.9 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn identity_sampling_is_deterministic() {
        let ch = load_channel(IDENTITY).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(ch.sample_output(1, 0, &mut rng).unwrap(), (1, 1));
        }
    }

    #[test]
    fn same_state_same_draw() {
        let mut seed_rng = ChaCha8Rng::seed_from_u64(11);
        let ch = RelayChannel::random([2, 3, 3, 2], &mut seed_rng);
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..50).map(|_| ch.sample_output(1, 2, &mut rng).unwrap()).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<_> = (0..50).map(|_| ch.sample_output(1, 2, &mut rng).unwrap()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_input() {
        let ch = load_channel(IDENTITY).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(ch.sample_output(2, 0, &mut rng), Err(Error::Argument(_))));
    }

    #[test]
    fn bsc_flip_frequency() {
        let ch = RelayChannel::from_fn([2, 1, 2, 1], |x, _, y, _| if x == y { 0.9 } else { 0.1 })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| ch.sample_output(0, 0, &mut rng).unwrap().0 == 1)
            .count();
        let frac = ones as f64 / n as f64;
        // 3 sigma of a binomial(1e5, 0.1) frequency is below 0.003
        assert!((frac - 0.1).abs() <= 0.01, "{frac}");
    }
}
