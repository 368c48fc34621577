//! Local search over the free conditional laws of either scheme.
//!
//! Random-ascent mode runs independent restarts of row-wise coordinate
//! ascent; grid mode enumerates every point of a coarse lattice on each
//! probability row. Neither claims global optimality.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::RelayChannel;
use crate::error::{Error, Result};
use crate::params::SchemeParams;
use crate::process::NewSchemeParams;
use crate::rates::{evaluate_caf, evaluate_new_scheme, CafForm, CafParams};
use crate::simplex;

const INITIAL_STEP: f64 = 0.25;
const HALVINGS: usize = 8;

/// Grid mode refuses lattices with more points than this.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    New,
    Caf(CafForm),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::New => f.write_str("new"),
            Scheme::Caf(form) => write!(f, "caf:{form}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// `new`, `caf` (compact form) or `caf:<form>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "new" => Ok(Scheme::New),
            "caf" => Ok(Scheme::Caf(CafForm::Compact)),
            _ => match s.strip_prefix("caf:") {
                Some(form) => Ok(Scheme::Caf(form.parse()?)),
                None => Err(Error::Argument(format!(
                    "unknown scheme `{s}` (expected new, caf or caf:<form>)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    RandomAscent,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub sweeps: usize,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 8,
            sweeps: 20,
            grid_points: 5,
            seed: 0,
        }
    }
}

impl SearchBudget {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.sweeps == 0 || self.grid_points == 0 {
            return Err(Error::Argument(
                "restarts, sweeps and grid_points must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_params: SchemeParams,
    pub best_rate: f64,
    /// `(restart, rate)` after the start point and after every sweep.
    pub trace: Vec<(usize, f64)>,
    pub mode: SearchMode,
}

/// Probability rows of one parameter point, in a fixed order.
#[derive(Debug, Clone, Copy)]
struct Layout {
    scheme: Scheme,
    nx: usize,
    nx1: usize,
    ny1: usize,
    nyh: usize,
}

impl Layout {
    fn new(ch: &RelayChannel, scheme: Scheme, nyh: usize) -> Self {
        let [nx, nx1, _, ny1] = ch.sizes();
        Layout {
            scheme,
            nx,
            nx1,
            ny1,
            nyh,
        }
    }

    /// Row widths: input rows, relay rows, then compressor rows `[y1][x1]`.
    fn widths(&self) -> Vec<usize> {
        let (input_rows, relay_rows) = match self.scheme {
            Scheme::New => (self.nx, self.nyh),
            Scheme::Caf(_) => (1, 1),
        };
        let mut w = vec![self.nx; input_rows];
        w.extend(std::iter::repeat_n(self.nx1, relay_rows));
        w.extend(std::iter::repeat_n(self.nyh, self.ny1 * self.nx1));
        w
    }

    fn decode(&self, rows: &[Vec<f64>]) -> Result<SchemeParams> {
        let (input_rows, relay_rows) = match self.scheme {
            Scheme::New => (self.nx, self.nyh),
            Scheme::Caf(_) => (1, 1),
        };
        let (input, rest) = rows.split_at(input_rows);
        let (relay, comp) = rest.split_at(relay_rows);
        let comp: Vec<Vec<Vec<f64>>> = comp.chunks(self.nx1).map(<[Vec<f64>]>::to_vec).collect();
        Ok(match self.scheme {
            Scheme::New => SchemeParams::New(NewSchemeParams::from_rows(input, relay, &comp)?),
            Scheme::Caf(_) => SchemeParams::Caf(CafParams::from_rows(&input[0], &relay[0], &comp)?),
        })
    }

    fn encode(&self, p: &SchemeParams) -> Vec<Vec<f64>> {
        let mut rows = match p {
            SchemeParams::New(p) => {
                let mut r = p.input_chain_rows();
                r.extend(p.relay_map_rows());
                r
            }
            SchemeParams::Caf(p) => vec![p.input_law.clone(), p.relay_law.clone()],
        };
        let comp = match p {
            SchemeParams::New(p) => p.compressor_rows(),
            SchemeParams::Caf(p) => p.compressor_rows(),
        };
        rows.extend(comp.into_iter().flatten());
        rows
    }
}

fn rate_of(ch: &RelayChannel, scheme: Scheme, p: &SchemeParams) -> Result<f64> {
    match (scheme, p) {
        (Scheme::New, SchemeParams::New(p)) => Ok(evaluate_new_scheme(ch, p)?.achievable_rate),
        (Scheme::Caf(form), SchemeParams::Caf(p)) => Ok(evaluate_caf(ch, p, form)?.achievable_rate),
        _ => Err(Error::Argument(format!(
            "parameters do not belong to scheme {scheme}"
        ))),
    }
}

/// Configurable search; [`optimize`] is the common entry point.
#[derive(Debug, Clone)]
pub struct Optimizer<'a> {
    ch: &'a RelayChannel,
    scheme: Scheme,
    yhat_size: usize,
    warm_start: Option<NewSchemeParams>,
}

impl<'a> Optimizer<'a> {
    /// `|Ŷ1|` defaults to `|Y1|`.
    pub fn new(ch: &'a RelayChannel, scheme: Scheme) -> Self {
        Optimizer {
            ch,
            scheme,
            yhat_size: ch.y1_alpha.size,
            warm_start: None,
        }
    }

    pub fn yhat_size(mut self, k: usize) -> Self {
        self.yhat_size = k;
        self
    }

    /// An extra restart from the given point; ignored for compress-and-forward.
    pub fn warm_start(mut self, p: NewSchemeParams) -> Self {
        self.warm_start = Some(p);
        self
    }

    fn layout(&self) -> Result<Layout> {
        if self.yhat_size == 0 {
            return Err(Error::Argument("|Ŷ1| must be at least 1".into()));
        }
        Ok(Layout::new(self.ch, self.scheme, self.yhat_size))
    }

    fn start_points(&self, layout: &Layout, budget: &SearchBudget) -> Result<Vec<Vec<Vec<f64>>>> {
        let widths = layout.widths();
        let mut starts: Vec<Vec<Vec<f64>>> = (0..budget.restarts)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ r as u64);
                widths.iter().map(|&w| simplex::dirichlet_row(w, &mut rng)).collect()
            })
            .collect();
        starts.push(widths.iter().map(|&w| simplex::uniform_row(w)).collect());
        if let (Scheme::New, Some(p)) = (self.scheme, &self.warm_start) {
            let p = SchemeParams::New(p.clone());
            let rows = layout.encode(&p);
            if rows.len() != widths.len() || rows.iter().zip(&widths).any(|(r, &w)| r.len() != w) {
                return Err(Error::Shape("warm start does not match the search space".into()));
            }
            starts.push(rows);
        }
        Ok(starts)
    }

    fn ascend(&self, layout: &Layout, restart: usize, mut rows: Vec<Vec<f64>>, sweeps: usize) -> Result<Restart> {
        let mut best = rate_of(self.ch, self.scheme, &layout.decode(&rows)?)?;
        let mut trace = vec![(restart, best)];
        for _ in 0..sweeps {
            for r in 0..rows.len() {
                for v in 0..rows[r].len() {
                    let mut t = INITIAL_STEP;
                    for _ in 0..=HALVINGS {
                        let candidate = simplex::toward_vertex(&rows[r], v, t);
                        let saved = std::mem::replace(&mut rows[r], candidate);
                        // Points the evaluator rejects are simply not taken.
                        let rate = layout
                            .decode(&rows)
                            .and_then(|p| rate_of(self.ch, self.scheme, &p))
                            .unwrap_or(f64::NEG_INFINITY);
                        if rate > best {
                            best = rate;
                            break;
                        }
                        rows[r] = saved;
                        t *= 0.5;
                    }
                }
            }
            trace.push((restart, best));
        }
        Ok(Restart { rows, rate: best, trace })
    }

    pub fn run(&self, budget: &SearchBudget) -> Result<SearchResult> {
        budget.validate()?;
        let layout = self.layout()?;
        let starts = self.start_points(&layout, budget)?;
        let results: Vec<Restart> = starts
            .into_par_iter()
            .enumerate()
            .map(|(r, rows)| self.ascend(&layout, r, rows, budget.sweeps))
            .collect::<Result<_>>()?;
        let best = pick_best(results.iter().map(|r| r.rate));
        let trace = results.iter().flat_map(|r| r.trace.iter().copied()).collect();
        let winner = &results[best];
        Ok(SearchResult {
            best_params: layout.decode(&winner.rows)?,
            best_rate: winner.rate,
            trace,
            mode: SearchMode::RandomAscent,
        })
    }

    /// Exhaustive search over the lattice `{0, 1/(g−1), …, 1}` on every row.
    ///
    /// Restricted to binary alphabets with `|Ŷ1| = 2`, so every row has one
    /// free coordinate.
    pub fn run_grid(&self, budget: &SearchBudget) -> Result<SearchResult> {
        budget.validate()?;
        let layout = self.layout()?;
        let points = grid_points(self.ch, &layout, budget.grid_points)?;
        let rates: Vec<f64> = points
            .par_iter()
            .map(|rows| rate_of(self.ch, self.scheme, &layout.decode(rows)?))
            .collect::<Result<_>>()?;
        let best = pick_best(rates.iter().copied());
        Ok(SearchResult {
            best_params: layout.decode(&points[best])?,
            best_rate: rates[best],
            trace: vec![(0, rates[best])],
            mode: SearchMode::Grid,
        })
    }
}

struct Restart {
    rows: Vec<Vec<f64>>,
    rate: f64,
    trace: Vec<(usize, f64)>,
}

/// Index of the largest value, lowest index on ties.
fn pick_best(rates: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, r) in rates.enumerate() {
        if r > best.1 {
            best = (i, r);
        }
    }
    best.0
}

fn grid_points(ch: &RelayChannel, layout: &Layout, g: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    if ch.sizes() != [2, 2, 2, 2] || layout.nyh != 2 {
        return Err(Error::Argument(
            "grid mode needs binary alphabets and |Ŷ1| = 2".into(),
        ));
    }
    if !(2..=11).contains(&g) {
        return Err(Error::Argument(format!(
            "grid mode needs 2..=11 points per row, got {g}"
        )));
    }
    let dims = layout.widths().len();
    let total = (0..dims)
        .try_fold(1usize, |acc, _| acc.checked_mul(g))
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or_else(|| Error::Size(format!("{g}^{dims} grid points exceed {MAX_GRID_POINTS}")))?;
    let level = |i: usize| {
        let q = i as f64 / (g - 1) as f64;
        vec![q, 1.0 - q]
    };
    Ok((0..total)
        .map(|mut idx| {
            let mut rows = vec![Vec::new(); dims];
            for row in rows.iter_mut().rev() {
                *row = level(idx % g);
                idx /= g;
            }
            rows
        })
        .collect())
}

/// Every compress-and-forward parameter point of the binary grid.
pub fn caf_grid(ch: &RelayChannel, grid_points_per_row: usize) -> Result<Vec<CafParams>> {
    let layout = Layout::new(ch, Scheme::Caf(CafForm::Compact), 2);
    grid_points(ch, &layout, grid_points_per_row)?
        .iter()
        .map(|rows| match layout.decode(rows)? {
            SchemeParams::Caf(p) => Ok(p),
            SchemeParams::New(_) => unreachable!("layout is compress-and-forward"),
        })
        .collect()
}

/// Random-ascent search with `|Ŷ1| = |Y1|` and no warm start.
pub fn optimize(ch: &RelayChannel, scheme: Scheme, budget: &SearchBudget) -> Result<SearchResult> {
    Optimizer::new(ch, scheme).run(budget)
}
