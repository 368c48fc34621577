//! Exact arithmetic on finite joint distributions.
//!
//! A [`JointDistribution`] is a dense row-major array over an ordered list of
//! named variables (the last variable varies fastest). A
//! [`ConditionalKernel`] stores `p(out | given)` in the same layout with the
//! given-block as the outer index. All information quantities are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities at or below this value contribute nothing to log terms.
pub const LOG_ZERO: f64 = 1e-15;

/// Tolerance on the total mass of a joint and on every kernel slice.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub name: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Alphabet {
            name: name.into(),
            size,
        }
    }
}

/// A named random variable over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub alphabet: Alphabet,
}

impl Var {
    pub fn new(name: impl Into<String>, alphabet: Alphabet) -> Self {
        Var {
            name: name.into(),
            alphabet,
        }
    }

    pub fn size(&self) -> usize {
        self.alphabet.size
    }
}

fn product_size(vars: &[Var]) -> usize {
    vars.iter().map(Var::size).product()
}

/// Compensated summation; plain accumulation drifts on million-entry arrays.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_vars(vars: &[Var]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        if v.size() == 0 {
            return Err(Error::Shape(format!("variable `{}` has an empty alphabet", v.name)));
        }
        if vars[..i].iter().any(|w| w.name == v.name) {
            return Err(Error::Structure(format!("duplicate variable `{}`", v.name)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    vars: Vec<Var>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(vars: Vec<Var>, probs: Vec<f64>) -> Result<Self> {
        check_vars(&vars)?;
        let len = product_size(&vars);
        if probs.len() != len {
            return Err(Error::Shape(format!(
                "expected {len} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::Validation(format!("invalid probability {p}")));
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Validation(format!("joint sums to {total}, not 1")));
        }
        Ok(JointDistribution { vars, probs })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_parts(vars: Vec<Var>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(product_size(&vars), probs.len());
        JointDistribution { vars, probs }
    }

    pub fn uniform(vars: Vec<Var>) -> Result<Self> {
        check_vars(&vars)?;
        let len = product_size(&vars);
        Ok(JointDistribution {
            vars,
            probs: vec![1.0 / len as f64; len],
        })
    }

    pub fn point_mass(vars: Vec<Var>, symbols: &[usize]) -> Result<Self> {
        check_vars(&vars)?;
        if symbols.len() != vars.len() {
            return Err(Error::Shape("one symbol per variable required".into()));
        }
        let mut flat = 0;
        for (v, &s) in vars.iter().zip(symbols) {
            if s >= v.size() {
                return Err(Error::Argument(format!("symbol {s} outside `{}`", v.name)));
            }
            flat = flat * v.size() + s;
        }
        let mut probs = vec![0.0; product_size(&vars)];
        probs[flat] = 1.0;
        Ok(JointDistribution { vars, probs })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::Name(name.to_string()))
    }

    pub fn shape(&self) -> Vec<usize> {
        self.vars.iter().map(Var::size).collect()
    }

    /// Probability of a full tuple of symbols, in variable order.
    pub fn prob(&self, symbols: &[usize]) -> f64 {
        let mut flat = 0;
        for (v, &s) in self.vars.iter().zip(symbols) {
            flat = flat * v.size() + s;
        }
        self.probs[flat]
    }

    /// Sums out every variable not in `keep`; the result follows `keep`'s order.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointDistribution> {
        let positions = keep
            .iter()
            .map(|n| self.position(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(Error::Argument(format!(
                    "variable `{}` listed twice",
                    self.vars[*p].name
                )));
            }
        }
        Ok(self.marginalize_positions(&positions))
    }

    pub(crate) fn marginalize_positions(&self, positions: &[usize]) -> JointDistribution {
        let d = self.vars.len();
        let sizes = self.shape();
        let mut out_stride = vec![0usize; d];
        let mut stride = 1;
        for &p in positions.iter().rev() {
            out_stride[p] = stride;
            stride *= sizes[p];
        }
        let mut out = vec![0.0; stride];
        let mut idx = vec![0usize; d];
        let mut o = 0usize;
        for &p in &self.probs {
            out[o] += p;
            let mut k = d;
            while k > 0 {
                k -= 1;
                idx[k] += 1;
                o += out_stride[k];
                if idx[k] < sizes[k] {
                    break;
                }
                o -= out_stride[k] * sizes[k];
                idx[k] = 0;
            }
        }
        let vars = positions.iter().map(|&p| self.vars[p].clone()).collect();
        JointDistribution::from_parts(vars, out)
    }

    /// Renames variables; pairs are `(old, new)`.
    pub fn rename(&self, pairs: &[(&str, &str)]) -> Result<JointDistribution> {
        let mut vars = self.vars.clone();
        for (old, new) in pairs {
            let p = self.position(old)?;
            vars[p].name = (*new).to_string();
        }
        check_vars(&vars)?;
        Ok(JointDistribution::from_parts(vars, self.probs.clone()))
    }

    pub fn entropy<S: AsRef<str>>(&self, of: &[S]) -> Result<f64> {
        let m = self.marginalize(of)?;
        Ok(entropy_of(&m.probs))
    }

    /// `I(A;B|C)` in nats; `c` may be empty.
    pub fn conditional_mutual_information<S: AsRef<str>>(
        &self,
        a: &[S],
        b: &[S],
        c: &[S],
    ) -> Result<f64> {
        let mut names: Vec<&str> = Vec::with_capacity(a.len() + b.len() + c.len());
        for n in a.iter().chain(b).chain(c) {
            let n = n.as_ref();
            if names.contains(&n) {
                return Err(Error::Argument(format!(
                    "variable `{n}` appears in more than one argument set"
                )));
            }
            names.push(n);
        }
        if a.is_empty() || b.is_empty() {
            // Validate names even though the answer is trivially zero.
            for n in &names {
                self.position(n)?;
            }
            return Ok(0.0);
        }
        let m = self.marginalize(&names)?;
        let size = |set: &[S]| -> usize {
            set.iter()
                .map(|n| self.vars[self.position(n.as_ref()).unwrap()].size())
                .product()
        };
        let (na, nb, nc) = (size(a), size(b), size(c));
        Ok(cmi_dense(&m.probs, na, nb, nc))
    }

    pub fn mutual_information<S: AsRef<str>>(&self, a: &[S], b: &[S]) -> Result<f64> {
        self.conditional_mutual_information(a, b, &[] as &[S])
    }

    /// Largest elementwise difference; both joints must share variable order.
    pub fn max_abs_diff(&self, other: &JointDistribution) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn total_variation(&self, other: &JointDistribution) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(0.5 * total_abs_diff(&self.probs, &other.probs))
    }

    fn check_same_layout(&self, other: &JointDistribution) -> Result<()> {
        let same = self.vars.len() == other.vars.len()
            && self
                .vars
                .iter()
                .zip(&other.vars)
                .all(|(a, b)| a.name == b.name && a.size() == b.size());
        if same {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "variable layouts differ: {:?} vs {:?}",
                self.var_names(),
                other.var_names()
            )))
        }
    }

    /// Chain-rule product `roots · factor₁ · factor₂ · …`.
    ///
    /// Each factor's given-variables must already be present when it is
    /// applied and its output variables must be new; this is what makes the
    /// chain acyclic.
    pub fn compose(roots: &JointDistribution, factors: &[ConditionalKernel]) -> Result<Self> {
        let mut joint = roots.clone();
        for f in factors {
            joint = joint.extend(f)?;
        }
        Ok(joint)
    }

    /// Appends the output variables of `kernel`, weighting by `p(out | given)`.
    pub fn extend(&self, kernel: &ConditionalKernel) -> Result<JointDistribution> {
        let sizes = self.shape();
        let d = sizes.len();
        let mut given_stride = vec![0usize; d];
        let mut stride = 1;
        for gv in kernel.given.iter().rev() {
            let p = self.vars.iter().position(|v| v.name == gv.name).ok_or_else(|| {
                Error::Structure(format!(
                    "factor needs `{}` before it is defined (cyclic or out-of-order chain)",
                    gv.name
                ))
            })?;
            if self.vars[p].size() != gv.size() {
                return Err(Error::Shape(format!(
                    "`{}` has {} symbols in the joint but {} in the factor",
                    gv.name,
                    self.vars[p].size(),
                    gv.size()
                )));
            }
            given_stride[p] = stride;
            stride *= gv.size();
        }
        for ov in &kernel.out {
            if self.vars.iter().any(|v| v.name == ov.name) {
                return Err(Error::Structure(format!(
                    "`{}` is produced twice in the chain",
                    ov.name
                )));
            }
        }
        let out_len = kernel.out_size();
        let mut probs = Vec::with_capacity(self.probs.len() * out_len);
        let mut idx = vec![0usize; d];
        let mut g = 0usize;
        for &p in &self.probs {
            let row = kernel.row(g);
            probs.extend(row.iter().map(|q| p * q));
            let mut k = d;
            while k > 0 {
                k -= 1;
                idx[k] += 1;
                g += given_stride[k];
                if idx[k] < sizes[k] {
                    break;
                }
                g -= given_stride[k] * sizes[k];
                idx[k] = 0;
            }
        }
        let mut vars = self.vars.clone();
        vars.extend(kernel.out.iter().cloned());
        Ok(JointDistribution::from_parts(vars, probs))
    }
}

pub(crate) fn total_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    neumaier_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

pub fn entropy_of(probs: &[f64]) -> f64 {
    -neumaier_sum(
        probs
            .iter()
            .filter(|&&p| p > LOG_ZERO)
            .map(|&p| p * p.ln()),
    )
}

/// `I(A;B|C)` for a dense array laid out as `[a][b][c]`.
fn cmi_dense(p: &[f64], na: usize, nb: usize, nc: usize) -> f64 {
    let mut p_ac = vec![0.0; na * nc];
    let mut p_bc = vec![0.0; nb * nc];
    let mut p_c = vec![0.0; nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let v = p[(a * nb + b) * nc + c];
                p_ac[a * nc + c] += v;
                p_bc[b * nc + c] += v;
                p_c[c] += v;
            }
        }
    }
    let mut terms = Vec::with_capacity(p.len());
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let v = p[(a * nb + b) * nc + c];
                if v > LOG_ZERO {
                    terms.push(v * ((v * p_c[c]) / (p_ac[a * nc + c] * p_bc[b * nc + c])).ln());
                }
            }
        }
    }
    neumaier_sum(terms)
}

/// `p(out | given)`, row-stochastic in the out-block for every given tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalKernel {
    given: Vec<Var>,
    out: Vec<Var>,
    probs: Vec<f64>,
}

impl ConditionalKernel {
    pub fn new(given: Vec<Var>, out: Vec<Var>, probs: Vec<f64>) -> Result<Self> {
        let mut all = given.clone();
        all.extend(out.iter().cloned());
        check_vars(&all)?;
        if out.is_empty() {
            return Err(Error::Shape("kernel without output variables".into()));
        }
        let rows = product_size(&given);
        let width = product_size(&out);
        if probs.len() != rows * width {
            return Err(Error::Shape(format!(
                "expected {} kernel entries, got {}",
                rows * width,
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::Validation(format!("invalid probability {p}")));
        }
        for (r, row) in probs.chunks(width).enumerate() {
            let s = neumaier_sum(row.iter().copied());
            if (s - 1.0).abs() > MASS_TOL {
                return Err(Error::Validation(format!("kernel slice {r} sums to {s}")));
            }
        }
        Ok(ConditionalKernel { given, out, probs })
    }

    pub(crate) fn from_parts(given: Vec<Var>, out: Vec<Var>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(product_size(&given) * product_size(&out), probs.len());
        ConditionalKernel { given, out, probs }
    }

    /// Builds a kernel from nested rows, one row per given tuple.
    pub fn from_rows(given: Vec<Var>, out: Vec<Var>, rows: &[Vec<f64>]) -> Result<Self> {
        let probs = rows.iter().flatten().copied().collect();
        ConditionalKernel::new(given, out, probs)
    }

    pub fn given(&self) -> &[Var] {
        &self.given
    }

    pub fn out(&self) -> &[Var] {
        &self.out
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn given_size(&self) -> usize {
        product_size(&self.given)
    }

    pub fn out_size(&self) -> usize {
        product_size(&self.out)
    }

    pub fn row(&self, given_index: usize) -> &[f64] {
        let w = self.out_size();
        &self.probs[given_index * w..(given_index + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.out_size())
    }

    pub fn get(&self, given_index: usize, out_index: usize) -> f64 {
        self.probs[given_index * self.out_size() + out_index]
    }

    /// True when every row equals the first, i.e. the output ignores the input.
    pub fn is_constant_in_given(&self, tol: f64) -> bool {
        let first = self.row(0);
        self.rows()
            .all(|r| r.iter().zip(first).all(|(a, b)| (a - b).abs() <= tol))
    }
}
