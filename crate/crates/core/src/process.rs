//! The stationary block process `G = (X, Ŷ1, X1, Y, Y1)` driven by the
//! correlation-preserving scheme, and joints over several consecutive blocks.
//!
//! One block transition factors as
//! `p(x | x̃) · p(y, y1 | x, x1) · p(x1 | ŷ̃1) · p(ŷ1 | y1, x1)`,
//! so a block depends on its predecessor only through `(x̃, ŷ̃1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::prob::{total_abs_diff, Alphabet, ConditionalKernel, JointDistribution, Var};
use crate::simplex;

/// Target total-variation residual of the stationary law.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Iteration budget, counted in single applications of the kernel.
pub const MAX_ITERATIONS: u64 = 1_000_000;
/// Two runs whose laws differ by more than this flag a non-unique law.
pub const UNIQUENESS_TOL: f64 = 1e-6;
/// Largest number of blocks in a dense multi-block joint.
pub const MAX_BLOCKS: usize = 4;
/// Hard cap on dense joint entries.
pub const MAX_JOINT_ENTRIES: usize = 1 << 23;

const PLAIN_ITERATIONS: u64 = 2_000;

/// Per-block variable stems in state order.
pub const STATE_STEMS: [&str; 5] = ["x", "yh", "x1", "y", "y1"];

/// Variable names of the eleven-variable joint, oldest first.
pub mod names {
    pub const X_TT: &str = "x~~";
    pub const X_T: &str = "x~";
    pub const YH_T: &str = "yh~";
    pub const X1_T: &str = "x1~";
    pub const Y_T: &str = "y~";
    pub const Y1_T: &str = "y1~";
    pub const X: &str = "x";
    pub const YH: &str = "yh";
    pub const X1: &str = "x1";
    pub const Y: &str = "y";
    pub const Y1: &str = "y1";

    pub const CURRENT: [&str; 5] = [X, YH, X1, Y, Y1];
    pub const PREVIOUS: [&str; 5] = [X_T, YH_T, X1_T, Y_T, Y1_T];
}

/// Variable name of `stem` in block `l`, e.g. `x1[3]`.
pub fn block_var(stem: &str, l: usize) -> String {
    format!("{stem}[{l}]")
}

/// The free conditional laws of the correlation-preserving scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct NewSchemeParams {
    pub yhat_alpha: Alphabet,
    /// `p(x | x̃)`
    pub input_chain: ConditionalKernel,
    /// `p(x1 | ŷ̃1)`
    pub relay_map: ConditionalKernel,
    /// `p(ŷ1 | y1, x1)`
    pub compressor: ConditionalKernel,
}

impl NewSchemeParams {
    /// Rows are `input_chain[x̃][x]`, `relay_map[ŷ̃1][x1]`, `compressor[y1][x1][ŷ1]`.
    pub fn from_rows(
        input_chain: &[Vec<f64>],
        relay_map: &[Vec<f64>],
        compressor: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let nx = input_chain.len();
        let nyh = relay_map.len();
        let nx1 = relay_map.first().map_or(0, Vec::len);
        let ny1 = compressor.len();
        if nx == 0 || nyh == 0 || nx1 == 0 || ny1 == 0 {
            return Err(Error::Shape("empty parameter table".into()));
        }
        if compressor.iter().any(|r| r.len() != nx1) {
            return Err(Error::Shape(format!(
                "compressor must be indexed [y1][x1] with {nx1} relay inputs"
            )));
        }
        let flat: Vec<Vec<f64>> = compressor.iter().flatten().cloned().collect();
        let yhat = Alphabet::new("Yhat1", nyh);
        Ok(NewSchemeParams {
            input_chain: ConditionalKernel::from_rows(
                vec![Var::new("x~", Alphabet::new("X", nx))],
                vec![Var::new("x", Alphabet::new("X", nx))],
                input_chain,
            )?,
            relay_map: ConditionalKernel::from_rows(
                vec![Var::new("yh~", yhat.clone())],
                vec![Var::new("x1", Alphabet::new("X1", nx1))],
                relay_map,
            )?,
            compressor: ConditionalKernel::from_rows(
                vec![
                    Var::new("y1", Alphabet::new("Y1", ny1)),
                    Var::new("x1", Alphabet::new("X1", nx1)),
                ],
                vec![Var::new("yh", yhat.clone())],
                &flat,
            )?,
            yhat_alpha: yhat,
        })
    }

    /// Flat-Dirichlet rows for every conditional law.
    pub fn random<R: Rng + ?Sized>(ch: &RelayChannel, yhat_size: usize, rng: &mut R) -> Self {
        let [nx, nx1, _, ny1] = ch.sizes();
        let chain: Vec<_> = (0..nx).map(|_| simplex::dirichlet_row(nx, rng)).collect();
        let relay: Vec<_> = (0..yhat_size)
            .map(|_| simplex::dirichlet_row(nx1, rng))
            .collect();
        let comp: Vec<Vec<_>> = (0..ny1)
            .map(|_| {
                (0..nx1)
                    .map(|_| simplex::dirichlet_row(yhat_size, rng))
                    .collect()
            })
            .collect();
        NewSchemeParams::from_rows(&chain, &relay, &comp).expect("dirichlet rows are stochastic")
    }

    pub fn uniform(ch: &RelayChannel, yhat_size: usize) -> Self {
        let [nx, nx1, _, ny1] = ch.sizes();
        NewSchemeParams::from_rows(
            &vec![simplex::uniform_row(nx); nx],
            &vec![simplex::uniform_row(nx1); yhat_size],
            &vec![vec![simplex::uniform_row(yhat_size); nx1]; ny1],
        )
        .expect("uniform rows are stochastic")
    }

    pub fn input_chain_rows(&self) -> Vec<Vec<f64>> {
        self.input_chain.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn relay_map_rows(&self) -> Vec<Vec<f64>> {
        self.relay_map.rows().map(<[f64]>::to_vec).collect()
    }

    /// `compressor[y1][x1][ŷ1]`.
    pub fn compressor_rows(&self) -> Vec<Vec<Vec<f64>>> {
        let nx1 = self.compressor.given()[1].size();
        self.compressor
            .rows()
            .collect::<Vec<_>>()
            .chunks(nx1)
            .map(|c| c.iter().map(|r| r.to_vec()).collect())
            .collect()
    }

    /// True when neither the input chain nor the relay map looks at the past.
    pub fn is_memoryless(&self) -> bool {
        self.input_chain.is_constant_in_given(0.0) && self.relay_map.is_constant_in_given(0.0)
    }
}

fn state_vars(ch: &RelayChannel, yhat: &Alphabet, suffix: &str) -> Vec<Var> {
    vec![
        Var::new(format!("x{suffix}"), ch.x_alpha.clone()),
        Var::new(format!("yh{suffix}"), yhat.clone()),
        Var::new(format!("x1{suffix}"), ch.x1_alpha.clone()),
        Var::new(format!("y{suffix}"), ch.y_alpha.clone()),
        Var::new(format!("y1{suffix}"), ch.y1_alpha.clone()),
    ]
}

/// Dense state→state kernel of one block transition.
pub fn build_block_transition(ch: &RelayChannel, p: &NewSchemeParams) -> Result<ConditionalKernel> {
    let [nx, nx1, ny, ny1] = ch.sizes();
    let nyh = p.yhat_alpha.size;
    let shape_ok = p.input_chain.given_size() == nx
        && p.input_chain.out_size() == nx
        && p.relay_map.given_size() == nyh
        && p.relay_map.out_size() == nx1
        && p.compressor.given_size() == ny1 * nx1
        && p.compressor.out_size() == nyh;
    if !shape_ok {
        return Err(Error::Shape(format!(
            "scheme parameters do not match channel alphabets {:?} with |Ŷ1| = {nyh}",
            ch.sizes()
        )));
    }
    let s = nx * nyh * nx1 * ny * ny1;
    let mut probs = vec![0.0; s * s];
    // Rows depend only on (x̃, ŷ̃1); build one per pair, then copy.
    for xp in 0..nx {
        for yhp in 0..nyh {
            let mut row = vec![0.0; s];
            for x in 0..nx {
                let px = p.input_chain.get(xp, x);
                if px == 0.0 {
                    continue;
                }
                for x1 in 0..nx1 {
                    let px1 = px * p.relay_map.get(yhp, x1);
                    if px1 == 0.0 {
                        continue;
                    }
                    for y in 0..ny {
                        for y1 in 0..ny1 {
                            let pc = px1 * ch.prob(x, x1, y, y1);
                            if pc == 0.0 {
                                continue;
                            }
                            for yh in 0..nyh {
                                let idx = (((x * nyh + yh) * nx1 + x1) * ny + y) * ny1 + y1;
                                row[idx] = pc * p.compressor.get(y1 * nx1 + x1, yh);
                            }
                        }
                    }
                }
            }
            let block = s / (nx * nyh);
            for rest in 0..block {
                let prev = (xp * nyh + yhp) * block + rest;
                probs[prev * s..(prev + 1) * s].copy_from_slice(&row);
            }
        }
    }
    Ok(ConditionalKernel::from_parts(
        state_vars(ch, &p.yhat_alpha, "~"),
        state_vars(ch, &p.yhat_alpha, ""),
        probs,
    ))
}

/// Output of [`stationary_distribution`].
#[derive(Debug, Clone)]
pub struct StationaryLaw {
    pub law: JointDistribution,
    /// `‖πT − π‖_TV` of the returned law.
    pub residual: f64,
    pub non_unique_warning: bool,
}

fn step(pi: &[f64], t: &[f64], s: usize) -> Vec<f64> {
    let mut next = vec![0.0; s];
    for (i, &w) in pi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (n, &q) in next.iter_mut().zip(&t[i * s..(i + 1) * s]) {
            *n += w * q;
        }
    }
    next
}

fn square(m: &[f64], s: usize) -> Vec<f64> {
    let mut out = vec![0.0; s * s];
    for i in 0..s {
        for k in 0..s {
            let a = m[i * s + k];
            if a == 0.0 {
                continue;
            }
            for j in 0..s {
                out[i * s + j] += a * m[k * s + j];
            }
        }
    }
    out
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * total_abs_diff(a, b)
}

/// Power iteration from `start`; returns the law and its own residual.
///
/// Runs plain iterations first, then iterates with `T^(2^k)` so that slowly
/// mixing chains still reach the budget of [`MAX_ITERATIONS`] kernel
/// applications. A 2-cycle (periodic chain) is resolved by averaging.
fn power_iterate(t: &[f64], s: usize, start: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let mut pi = start;
    let mut prev: Option<Vec<f64>> = None;
    let mut last_residual = f64::INFINITY;
    let check = |pi: &[f64], next: &[f64], prev: &Option<Vec<f64>>| -> Option<(Vec<f64>, f64)> {
        let r = tv(next, pi);
        if r <= STATIONARY_TOL {
            return Some((pi.to_vec(), r));
        }
        if let Some(pp) = prev {
            if tv(next, pp) <= STATIONARY_TOL {
                let avg: Vec<f64> = pi.iter().zip(next).map(|(a, b)| 0.5 * (a + b)).collect();
                let ra = tv(&step(&avg, t, s), &avg);
                if ra <= STATIONARY_TOL {
                    return Some((avg, ra));
                }
            }
        }
        None
    };
    let mut used = 0u64;
    while used < PLAIN_ITERATIONS {
        let next = step(&pi, t, s);
        used += 1;
        if let Some(done) = check(&pi, &next, &prev) {
            return Ok(done);
        }
        last_residual = tv(&next, &pi);
        prev = Some(std::mem::replace(&mut pi, next));
    }
    let mut power = t.to_vec();
    let mut span = 1u64;
    while used + span <= MAX_ITERATIONS {
        power = square(&power, s);
        span *= 2;
        pi = step(&pi, &power, s);
        used += span;
        let next = step(&pi, t, s);
        let after = step(&next, t, s);
        // Treat (pi, next, after) as a fresh window for the 2-cycle test.
        if let Some(done) = check(&pi, &next, &None) {
            return Ok(done);
        }
        if let Some(done) = check(&next, &after, &Some(pi.clone())) {
            return Ok(done);
        }
        last_residual = tv(&next, &pi);
    }
    Err(Error::Convergence {
        residual: last_residual,
    })
}

/// Stationary law of a square row-stochastic kernel by power iteration from
/// the uniform law, plus a uniqueness probe from a seeded random start.
pub fn stationary_distribution(transition: &ConditionalKernel) -> Result<StationaryLaw> {
    let s = transition.out_size();
    if transition.given_size() != s {
        return Err(Error::Shape("stationary law needs a square kernel".into()));
    }
    let t = transition.probs();
    let (law, residual) = power_iterate(t, s, simplex::uniform_row(s))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f57_a7a7);
    let alt_start = simplex::dirichlet_row(s, &mut rng);
    let non_unique_warning = match power_iterate(t, s, alt_start) {
        Ok((alt, _)) => tv(&alt, &law) > UNIQUENESS_TOL,
        Err(_) => true,
    };
    Ok(StationaryLaw {
        law: JointDistribution::from_parts(transition.out().to_vec(), law),
        residual,
        non_unique_warning,
    })
}

/// The stationary block process for one channel and parameter choice.
#[derive(Debug, Clone)]
pub struct BlockProcess {
    pub state_vars: Vec<Var>,
    pub transition: ConditionalKernel,
    pub stationary: JointDistribution,
    pub residual: f64,
    pub non_unique_warning: bool,
}

impl BlockProcess {
    pub fn new(ch: &RelayChannel, p: &NewSchemeParams) -> Result<Self> {
        let transition = build_block_transition(ch, p)?;
        let st = stationary_distribution(&transition)?;
        Ok(BlockProcess {
            state_vars: transition.out().to_vec(),
            transition,
            stationary: st.law,
            residual: st.residual,
            non_unique_warning: st.non_unique_warning,
        })
    }

    pub fn state_size(&self) -> usize {
        self.transition.out_size()
    }

    fn block_vars(&self, l: usize) -> Vec<Var> {
        self.state_vars
            .iter()
            .zip(STATE_STEMS)
            .map(|(v, stem)| Var::new(block_var(stem, l), v.alphabet.clone()))
            .collect()
    }

    fn transition_into(&self, l: usize) -> ConditionalKernel {
        ConditionalKernel::from_parts(
            self.block_vars(l - 1),
            self.block_vars(l),
            self.transition.probs().to_vec(),
        )
    }

    /// Stationary law with variables named for block `l`.
    pub fn block_law(&self, l: usize) -> JointDistribution {
        JointDistribution::from_parts(self.block_vars(l), self.stationary.probs().to_vec())
    }

    fn guard(&self, extra_factor: usize, blocks: usize) -> Result<()> {
        if blocks == 0 || blocks > MAX_BLOCKS {
            return Err(Error::Size(format!(
                "block count {blocks} outside 1..={MAX_BLOCKS}"
            )));
        }
        let entries = (0..blocks).try_fold(extra_factor, |acc, _| acc.checked_mul(self.state_size()));
        match entries {
            Some(e) if e <= MAX_JOINT_ENTRIES => Ok(()),
            _ => Err(Error::Size(format!(
                "a {blocks}-block joint over {} states is too large for dense storage",
                self.state_size()
            ))),
        }
    }

    fn extend_blocks(&self, mut joint: JointDistribution, from: usize, to: usize) -> Result<JointDistribution> {
        for l in from..=to {
            joint = joint.extend(&self.transition_into(l))?;
        }
        Ok(joint)
    }

    /// Joint of blocks `1..=k` with variables `x[l]`, `yh[l]`, … .
    pub fn k_block_joint(&self, k: usize) -> Result<JointDistribution> {
        self.guard(1, k)?;
        self.extend_blocks(self.block_law(1), 2, k)
    }

    /// Joint of `x[0]` together with full blocks `1..=k`.
    pub fn anchored_joint(&self, k: usize) -> Result<JointDistribution> {
        let nx = self.state_vars[0].size();
        self.guard(nx, k)?;
        let pair = self.block_law(0).extend(&self.transition_into(1))?;
        let mut keep = vec![block_var("x", 0)];
        keep.extend(STATE_STEMS.iter().map(|s| block_var(s, 1)));
        let head = pair.marginalize(&keep)?;
        self.extend_blocks(head, 2, k)
    }

    /// Law of `(x̃̃, block̃, block)` over three consecutive blocks.
    pub fn eleven_variable_joint(&self) -> Result<ElevenVarJoint> {
        let j = self.anchored_joint(2)?;
        let mut pairs: Vec<(String, &str)> = vec![(block_var("x", 0), names::X_TT)];
        for (stem, n) in STATE_STEMS.iter().zip(names::PREVIOUS) {
            pairs.push((block_var(stem, 1), n));
        }
        for (stem, n) in STATE_STEMS.iter().zip(names::CURRENT) {
            pairs.push((block_var(stem, 2), n));
        }
        let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        Ok(ElevenVarJoint {
            joint: j.rename(&refs)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ElevenVarJoint {
    pub joint: JointDistribution,
}
