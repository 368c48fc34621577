//! Monte Carlo realization of the block-Markov scheme at desk scale.
//!
//! The transmitter and the relay use tree-structured random codebooks, the
//! relay quantizes what it hears against its current context, and the
//! receiver runs an exhaustive joint-typicality decoder over all blocks.
//! The tail of the transmission (`x[B]`, `ŷ1[B]`) and the first relay
//! codeword `x1[1]` are handed to the decoder as side information, so the
//! reported effective rate is `((B − 1) / B) · ln(M) / n`.

mod typical;

pub use typical::{ConditionalTypicality, JointTypicality};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{sample_index, RelayChannel};
use crate::error::{Error, Result};
use crate::process::{block_var, BlockProcess, NewSchemeParams};
use crate::prob::ConditionalKernel;

/// Upper bound on `M^(B−1) · L^(B−1)`, the number of decoder hypotheses.
pub const MAX_SEARCH_SPACE: u64 = 10_000_000;

/// Rejection-sampling attempts per quantizer sequence.
pub const MAX_QUANTIZER_TRIES: usize = 100_000;

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Block length.
    pub n: usize,
    /// Number of blocks.
    pub blocks: usize,
    /// Messages per block.
    pub messages: usize,
    /// Quantizer sequences per relay context.
    pub quantizers: usize,
    /// Per-cell slack of the typicality tests.
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.blocks < 2 || self.messages == 0 || self.quantizers == 0 {
            return Err(Error::Argument(
                "need n ≥ 1, blocks ≥ 2, messages ≥ 1 and quantizers ≥ 1".into(),
            ));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Argument(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        let per_block = (self.messages as u64).checked_mul(self.quantizers as u64);
        let space = per_block.and_then(|b| {
            (1..self.blocks).try_fold(1u64, |acc, _| acc.checked_mul(b))
        });
        match space {
            Some(s) if s <= MAX_SEARCH_SPACE => Ok(()),
            _ => Err(Error::Size(format!(
                "decoder search space (M·L)^(B−1) exceeds {MAX_SEARCH_SPACE}"
            ))),
        }
    }

    /// Nats per channel use with the tail delivered for free.
    pub fn effective_rate(&self) -> f64 {
        (self.blocks - 1) as f64 / self.blocks as f64 * (self.messages as f64).ln() / self.n as f64
    }
}

type Seq = Vec<u32>;

/// Random codebooks for one transmission.
///
/// Level `l − 1` of each vector holds block `l`. Transmitter node `p` at
/// depth `l` has children `p·M + m`; relay node `q` at depth `l` owns
/// quantizer sequences `q·L + c`, and quantizer `q·L + c` owns the relay
/// codeword of node `q·L + c` at depth `l + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookTree {
    /// `x[0]`, known to everyone.
    pub root_x: Seq,
    /// `ŷ1[0]`, known to everyone.
    pub root_yhat: Seq,
    /// Blocks `1..=B`; block `B` has one sequence per depth-`(B − 1)` node.
    pub tx_tree: Vec<Vec<Seq>>,
    /// Blocks `1..=B − 1`.
    pub relay_quantizers: Vec<Vec<Seq>>,
    /// Relay codewords for blocks `1..=B`.
    pub relay_codewords: Vec<Vec<Seq>>,
}

/// Zero or several typical hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecodeFailure {
    /// Number of typical hypotheses found, counted up to 2.
    pub typical_tuples: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub decoded: std::result::Result<Vec<usize>, DecodeFailure>,
    /// The relay's choice per block; `None` when no candidate was typical
    /// and candidate 0 was used.
    pub relay_choices: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub error_count: usize,
    pub trials: usize,
    pub p_e_hat: f64,
    pub effective_rate: f64,
    pub wilson_interval: (f64, f64),
    /// Relay blocks in which no quantizer candidate was typical.
    pub relay_fallbacks: usize,
}

/// 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Laws derived once from the channel and the scheme parameters.
#[derive(Debug, Clone)]
pub struct SimModel {
    ch: RelayChannel,
    params: NewSchemeParams,
    sizes: [usize; 5],
    /// Stationary law over block states `(x, ŷ1, x1, y, y1)`.
    state_law: Vec<f64>,
    /// `π(ŷ1 | x1)`, row-major.
    quantizer_law: Vec<f64>,
    /// Stationary law of `(x1, y1, ŷ1)`.
    relay_law: Vec<f64>,
    /// Stationary law of two consecutive observable blocks `(x, ŷ1, x1, y)`.
    pair_law: Vec<f64>,
}

impl SimModel {
    pub fn new(ch: &RelayChannel, p: &NewSchemeParams) -> Result<Self> {
        let bp = BlockProcess::new(ch, p)?;
        let [nx, nx1, ny, ny1] = ch.sizes();
        let nyh = p.yhat_alpha.size;
        let relay = bp.stationary.marginalize(&["x1", "y1", "yh"])?;
        let x1_yh = bp.stationary.marginalize(&["x1", "yh"])?;
        let mut quantizer_law = Vec::with_capacity(nx1 * nyh);
        for row in x1_yh.probs().chunks(nyh) {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                quantizer_law.extend(row.iter().map(|v| v / total));
            } else {
                quantizer_law.extend(std::iter::repeat_n(1.0 / nyh as f64, nyh));
            }
        }
        let mut keep = Vec::new();
        for l in 1..=2 {
            for stem in ["x", "yh", "x1", "y"] {
                keep.push(block_var(stem, l));
            }
        }
        let pair = bp.k_block_joint(2)?.marginalize(&keep)?;
        Ok(SimModel {
            ch: ch.clone(),
            params: p.clone(),
            sizes: [nx, nyh, nx1, ny, ny1],
            state_law: bp.stationary.probs().to_vec(),
            quantizer_law,
            relay_law: relay.probs().to_vec(),
            pair_law: pair.probs().to_vec(),
        })
    }

    fn draw(row: &[f64], rng: &mut ChaCha8Rng) -> u32 {
        sample_index(row, rng) as u32
    }

    fn child(kernel: &ConditionalKernel, parent: &[u32], rng: &mut ChaCha8Rng) -> Seq {
        parent
            .iter()
            .map(|&s| Self::draw(kernel.row(s as usize), rng))
            .collect()
    }

    fn quantizer_test(&self, delta: f64) -> ConditionalTypicality {
        ConditionalTypicality::new(self.quantizer_law.clone(), self.sizes[1], delta)
    }

    fn relay_test(&self, delta: f64) -> JointTypicality {
        JointTypicality::new(self.relay_law.clone(), delta)
    }

    fn pair_test(&self, delta: f64) -> JointTypicality {
        JointTypicality::new(self.pair_law.clone(), delta)
    }

    /// Whether `(x1, y1, ŷ1)` is jointly typical under the stationary law.
    pub fn relay_typical(&self, delta: f64, x1: &[u32], y1: &[u32], yhat: &[u32]) -> bool {
        let [_, nyh, _, _, ny1] = self.sizes;
        let t = self.relay_test(delta);
        let mut scratch = vec![0; t.cells()];
        let cells = (0..x1.len())
            .map(|i| (x1[i] as usize * ny1 + y1[i] as usize) * nyh + yhat[i] as usize);
        t.test(cells, &mut scratch)
    }

    /// Whether `ŷ1` lies in the conditional typical set given the context `x1`.
    pub fn quantizer_typical(&self, delta: f64, x1: &[u32], yhat: &[u32]) -> bool {
        self.quantizer_test(delta).test(x1, yhat)
    }

    pub fn build_codebooks(&self, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<CodebookTree> {
        cfg.validate()?;
        let (n, b, m, l) = (cfg.n, cfg.blocks, cfg.messages, cfg.quantizers);
        let [_, nyh, nx1, ny, ny1] = self.sizes;
        let state_size = self.state_law.len();
        debug_assert_eq!(state_size, self.sizes.iter().product::<usize>());
        let tail = nyh * nx1 * ny * ny1;
        let mut root_x = Vec::with_capacity(n);
        let mut root_yhat = Vec::with_capacity(n);
        for _ in 0..n {
            let s = sample_index(&self.state_law, rng);
            root_x.push((s / tail) as u32);
            root_yhat.push(((s / (nx1 * ny * ny1)) % nyh) as u32);
        }

        let mut tx_tree: Vec<Vec<Seq>> = Vec::with_capacity(b);
        for depth in 1..=b {
            let level: Vec<Seq> = if depth == 1 {
                (0..m)
                    .map(|_| Self::child(&self.params.input_chain, &root_x, rng))
                    .collect()
            } else {
                let parents = &tx_tree[depth - 2];
                let fan = if depth == b { 1 } else { m };
                parents
                    .iter()
                    .flat_map(|p| (0..fan).map(move |_| p))
                    .map(|p| Self::child(&self.params.input_chain, p, rng))
                    .collect()
            };
            tx_tree.push(level);
        }

        let test = self.quantizer_test(cfg.delta);
        let mut relay_codewords: Vec<Vec<Seq>> =
            vec![vec![Self::child(&self.params.relay_map, &root_yhat, rng)]];
        let mut relay_quantizers: Vec<Vec<Seq>> = Vec::with_capacity(b - 1);
        for depth in 1..b {
            let mut quant = Vec::with_capacity(relay_codewords[depth - 1].len() * l);
            for (q, context) in relay_codewords[depth - 1].iter().enumerate() {
                if !test.has_typical_completion(context) {
                    return Err(Error::Construction(format!(
                        "block {depth}, relay context {q}: conditional typical set is empty"
                    )));
                }
                for c in 0..l {
                    quant.push(self.sample_quantizer(&test, context, rng).ok_or_else(|| {
                        Error::Construction(format!(
                            "block {depth}, relay context {q}, candidate {c}: no typical sequence \
                             after {MAX_QUANTIZER_TRIES} draws"
                        ))
                    })?);
                }
            }
            let next: Vec<Seq> = quant
                .iter()
                .map(|yh| Self::child(&self.params.relay_map, yh, rng))
                .collect();
            relay_quantizers.push(quant);
            relay_codewords.push(next);
        }
        Ok(CodebookTree {
            root_x,
            root_yhat,
            tx_tree,
            relay_quantizers,
            relay_codewords,
        })
    }

    fn sample_quantizer(&self, test: &ConditionalTypicality, context: &[u32], rng: &mut ChaCha8Rng) -> Option<Seq> {
        let nyh = self.sizes[1];
        for _ in 0..MAX_QUANTIZER_TRIES {
            let cand: Seq = context
                .iter()
                .map(|&a| {
                    let a = a as usize;
                    Self::draw(&self.quantizer_law[a * nyh..(a + 1) * nyh], rng)
                })
                .collect();
            if test.test(context, &cand) {
                return Some(cand);
            }
        }
        None
    }

    /// Sends `messages` (one per block `1..B`) through the channel and decodes.
    pub fn run_trial(
        &self,
        cfg: &SimConfig,
        tree: &CodebookTree,
        messages: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Result<TrialOutcome> {
        cfg.validate()?;
        let (b, m, l) = (cfg.blocks, cfg.messages, cfg.quantizers);
        if messages.len() != b - 1 || messages.iter().any(|&w| w >= m) {
            return Err(Error::Argument(format!(
                "need {} messages in 0..{m}",
                b - 1
            )));
        }
        let relay_test = self.relay_test(cfg.delta);
        let mut scratch = vec![0; relay_test.cells()];
        let [_, nyh, _, _, ny1] = self.sizes;

        let mut path = 0usize;
        let mut node = 0usize;
        let mut received = Vec::with_capacity(b);
        let mut relay_choices = Vec::with_capacity(b - 1);
        let mut last = (Seq::new(), Seq::new());
        for depth in 1..=b {
            let x = if depth < b {
                path = path * m + messages[depth - 1];
                &tree.tx_tree[depth - 1][path]
            } else {
                &tree.tx_tree[b - 1][path]
            };
            let x1 = &tree.relay_codewords[depth - 1][node];
            let mut y = Vec::with_capacity(cfg.n);
            let mut y1 = Vec::with_capacity(cfg.n);
            for i in 0..cfg.n {
                let (a, c) = self.ch.sample_output(x[i] as usize, x1[i] as usize, rng)?;
                y.push(a as u32);
                y1.push(c as u32);
            }
            if depth < b {
                let cands = &tree.relay_quantizers[depth - 1][node * l..(node + 1) * l];
                let choice = cands.iter().position(|yh| {
                    let cells = (0..cfg.n).map(|i| {
                        (x1[i] as usize * ny1 + y1[i] as usize) * nyh + yh[i] as usize
                    });
                    relay_test.test(cells, &mut scratch)
                });
                relay_choices.push(choice);
                node = node * l + choice.unwrap_or(0);
            } else {
                let yhat: Seq = (0..cfg.n)
                    .map(|i| {
                        let g = y1[i] as usize * self.sizes[2] + x1[i] as usize;
                        Self::draw(self.params.compressor.row(g), rng)
                    })
                    .collect();
                last = (x.clone(), yhat);
            }
            received.push(y);
        }
        let decoded = self.decode(cfg, tree, &received, &last.0, &last.1);
        Ok(TrialOutcome {
            decoded,
            relay_choices,
        })
    }

    /// Exhaustive joint-typicality decoding.
    ///
    /// Hypotheses are enumerated depth-first; a branch is dropped as soon as
    /// one of its adjacent block pairs fails the test, which every
    /// completion of that branch would also fail. The search stops once two
    /// typical hypotheses are known, since the outcome is then fixed.
    fn decode(
        &self,
        cfg: &SimConfig,
        tree: &CodebookTree,
        received: &[Seq],
        x_last: &[u32],
        yhat_last: &[u32],
    ) -> std::result::Result<Vec<usize>, DecodeFailure> {
        let test = self.pair_test(cfg.delta);
        let mut search = Search {
            model: self,
            cfg,
            tree,
            received,
            x_last,
            yhat_last,
            test,
            scratch: Vec::new(),
            stack: Vec::with_capacity(cfg.blocks),
            found: Vec::new(),
        };
        search.scratch = vec![0; search.test.cells()];
        search.descend(1, 0, 0, None);
        match search.found.len() {
            1 => Ok(search.found.pop().expect("one hypothesis")),
            k => Err(DecodeFailure { typical_tuples: k }),
        }
    }

    fn observable(&self, x: u32, yh: u32, x1: u32, y: u32) -> usize {
        let [_, nyh, nx1, ny, _] = self.sizes;
        ((x as usize * nyh + yh as usize) * nx1 + x1 as usize) * ny + y as usize
    }
}

#[derive(Clone, Copy)]
struct Block<'a> {
    x: &'a [u32],
    yh: &'a [u32],
    x1: &'a [u32],
    y: &'a [u32],
}

struct Search<'a> {
    model: &'a SimModel,
    cfg: &'a SimConfig,
    tree: &'a CodebookTree,
    received: &'a [Seq],
    x_last: &'a [u32],
    yhat_last: &'a [u32],
    test: JointTypicality,
    scratch: Vec<u32>,
    stack: Vec<usize>,
    found: Vec<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn pair_typical(&mut self, a: Block<'_>, b: Block<'_>) -> bool {
        let m = self.model;
        let [nx, nyh, nx1, ny, _] = m.sizes;
        let width = nx * nyh * nx1 * ny;
        let cells = (0..self.cfg.n).map(|i| {
            m.observable(a.x[i], a.yh[i], a.x1[i], a.y[i]) * width
                + m.observable(b.x[i], b.yh[i], b.x1[i], b.y[i])
        });
        self.test.test(cells, &mut self.scratch)
    }

    fn descend(&mut self, depth: usize, parent: usize, node: usize, prev: Option<Block<'a>>) {
        let (b, m, l) = (self.cfg.blocks, self.cfg.messages, self.cfg.quantizers);
        let tree = self.tree;
        for w in 0..m {
            let path = parent * m + w;
            for c in 0..l {
                if self.found.len() >= 2 {
                    return;
                }
                let here = Block {
                    x: &tree.tx_tree[depth - 1][path],
                    yh: &tree.relay_quantizers[depth - 1][node * l + c],
                    x1: &tree.relay_codewords[depth - 1][node],
                    y: &self.received[depth - 1],
                };
                if let Some(p) = prev {
                    if !self.pair_typical(p, here) {
                        continue;
                    }
                }
                self.stack.push(w);
                if depth == b - 1 {
                    let tail = Block {
                        x: self.x_last,
                        yh: self.yhat_last,
                        x1: &tree.relay_codewords[b - 1][node * l + c],
                        y: &self.received[b - 1],
                    };
                    if self.pair_typical(here, tail) {
                        self.found.push(self.stack.clone());
                    }
                } else {
                    self.descend(depth + 1, path, node * l + c, Some(here));
                }
                self.stack.pop();
            }
        }
    }
}

/// Per-trial generator: the shared seed with the trial index as stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `cfg.trials` independent trials, each with fresh codebooks and
/// uniformly drawn messages.
pub fn estimate_error_probability(
    cfg: &SimConfig,
    ch: &RelayChannel,
    p: &NewSchemeParams,
) -> Result<SimResult> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(Error::Argument("trials must be positive".into()));
    }
    let model = SimModel::new(ch, p)?;
    let outcomes: Vec<(bool, usize)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let tree = model.build_codebooks(cfg, &mut rng)?;
            let messages: Vec<usize> = (1..cfg.blocks)
                .map(|_| rng.random_range(0..cfg.messages))
                .collect();
            let out = model.run_trial(cfg, &tree, &messages, &mut rng)?;
            let fallbacks = out.relay_choices.iter().filter(|c| c.is_none()).count();
            Ok((out.decoded.as_ref() != Ok(&messages), fallbacks))
        })
        .collect::<Result<_>>()?;
    let error_count = outcomes.iter().filter(|o| o.0).count();
    Ok(SimResult {
        error_count,
        trials: cfg.trials,
        p_e_hat: error_count as f64 / cfg.trials as f64,
        effective_rate: cfg.effective_rate(),
        wilson_interval: wilson_interval(error_count, cfg.trials),
        relay_fallbacks: outcomes.iter().map(|o| o.1).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(0, 200);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.018_845).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5);
    }

    #[test]
    fn config_guards() {
        let cfg = SimConfig {
            n: 4,
            blocks: 3,
            messages: 2,
            quantizers: 1,
            delta: 0.2,
            trials: 1,
            seed: 0,
        };
        assert!(cfg.validate().is_ok());
        assert!(matches!(SimConfig { blocks: 1, ..cfg }.validate(), Err(Error::Argument(_))));
        assert!(matches!(SimConfig { delta: 0.0, ..cfg }.validate(), Err(Error::Argument(_))));
        assert!(matches!(
            SimConfig { messages: 100, quantizers: 40, ..cfg }.validate(),
            Err(Error::Size(_))
        ));
        assert!((cfg.effective_rate() - 2.0 / 3.0 * 2f64.ln() / 4.0).abs() < 1e-15);
    }
}
