//! Lauricella hypergeometric function of type A,
//!
//! `F_A(a; b; c; x) = Σ_w ⟨a⟩_{|w|} Π_i ⟨b_i⟩_{w_i}/⟨c_i⟩_{w_i} · x_i^{w_i}/w_i!`,
//!
//! summed by total order `|w|`. For a fixed total order `n` the inner sum over
//! multi-indices is a discrete convolution of the per-index sequences
//! `t_i(w) = ⟨b_i⟩_w x_i^w / (⟨c_i⟩_w w!)`, so each order costs `O(d·n)`.
//! Everything is carried in log space: with `Σ L_n α_n` in the hundreds the
//! individual terms overflow long before the sum converges.

use crate::error::{Error, Result};

use super::log_add_exp;

#[derive(Debug, Clone, PartialEq)]
pub struct LauricellaArgs {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub x: Vec<f64>,
}

impl LauricellaArgs {
    pub fn new(a: f64, b: Vec<f64>, c: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        let fail = |msg: String| Err(Error::domain("lauricella_fa", msg));
        if b.len() != c.len() || b.len() != x.len() {
            return fail(format!(
                "dimension mismatch: |b| = {}, |c| = {}, |x| = {}",
                b.len(),
                c.len(),
                x.len()
            ));
        }
        if !(a > 0.0) || !a.is_finite() {
            return fail(format!("a = {a} must be positive"));
        }
        if b.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return fail("upper parameters b must be positive".into());
        }
        if c.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return fail("lower parameters c must be positive".into());
        }
        if x.iter().any(|&v| !(0.0..1.0).contains(&v)) {
            return fail("arguments x must lie in [0, 1)".into());
        }
        if x.iter().sum::<f64>() >= 1.0 {
            return fail(format!(
                "sum of arguments {} must be below 1",
                x.iter().sum::<f64>()
            ));
        }
        Ok(Self { a, b, c, x })
    }

    /// Arguments with every upper parameter equal to one.
    pub fn unit_b(a: f64, c: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        Self::new(a, vec![1.0; c.len()], c, x)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Stopping rule for total-order series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    /// Cap on the total order `|w|`.
    pub max_order: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_order: 20_000,
        }
    }
}

impl SeriesControl {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_order < 1 {
            return Err(Error::domain(
                "SeriesControl",
                format!(
                    "rel_tol = {} and max_order = {} must be positive",
                    self.rel_tol, self.max_order
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub ln_value: f64,
    /// Highest total order included.
    pub orders: usize,
}

/// Terms further than this below the running maximum are dropped from a
/// log-sum-exp; `e^{-60}` is far below double precision.
const LSE_WINDOW: f64 = 60.0;

/// `ln Σ_{w=0}^{n} exp(lhs[w] + rhs[n−w])` over every `w`.
fn log_convolve(lhs: &[f64], rhs: &[f64], n: usize) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    for w in 0..=n {
        peak = peak.max(lhs[w] + rhs[n - w]);
    }
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    let mut acc = 0.0;
    for w in 0..=n {
        let v = lhs[w] + rhs[n - w] - peak;
        if v > -LSE_WINDOW {
            acc += v.exp();
        }
    }
    peak + acc.ln()
}

/// Same sum for log-concave inputs: the summand is unimodal in `w` and its
/// mode moves by at most one per order, so only a window around the mode
/// (tracked in `mode`) is visited.
fn log_convolve_unimodal(lhs: &[f64], rhs: &[f64], n: usize, mode: &mut usize) -> f64 {
    let g = |w: usize| lhs[w] + rhs[n - w];
    let mut w0 = (*mode).min(n);
    while w0 < n && g(w0 + 1) > g(w0) {
        w0 += 1;
    }
    while w0 > 0 && g(w0 - 1) > g(w0) {
        w0 -= 1;
    }
    let peak = g(w0);
    if peak == f64::NEG_INFINITY {
        return log_convolve(lhs, rhs, n);
    }
    *mode = w0;
    let mut acc = 1.0;
    let mut w = w0;
    while w > 0 {
        w -= 1;
        let v = g(w) - peak;
        if v <= -LSE_WINDOW {
            break;
        }
        acc += v.exp();
    }
    for w in w0 + 1..=n {
        let v = g(w) - peak;
        if v <= -LSE_WINDOW {
            break;
        }
        acc += v.exp();
    }
    peak + acc.ln()
}

/// `ln F_A`, summed by total order until three consecutive orders each add
/// less than `rel_tol` of the running sum.
pub fn ln_lauricella_fa(args: &LauricellaArgs, ctl: &SeriesControl) -> Result<SeriesSum> {
    ctl.validate()?;
    let d = args.dim();
    if d == 0 {
        return Ok(SeriesSum {
            ln_value: 0.0,
            orders: 0,
        });
    }
    let ln_x: Vec<f64> = args.x.iter().map(|v| v.ln()).collect();
    let ln_tol = ctl.rel_tol.ln();
    // b_i ≥ 1 makes every per-index sequence log-concave
    let unimodal = args.b.iter().all(|&b| b >= 1.0);
    let mut modes = vec![0usize; d];

    // seq[i][w] = ln t_i(w); folded[j][n] = ln of the order-n coefficient of Π_{i≤j} t_i
    let mut seq: Vec<Vec<f64>> = vec![vec![0.0]; d];
    let mut folded: Vec<Vec<f64>> = vec![vec![0.0]; d];
    let mut ln_poch_a = 0.0;
    let mut ln_sum = 0.0;
    let mut quiet = 0;

    for n in 1..=ctl.max_order {
        let nf = n as f64;
        for i in 0..d {
            let prev = seq[i][n - 1];
            let next = prev + (args.b[i] + nf - 1.0).ln() - (args.c[i] + nf - 1.0).ln() - nf.ln()
                + ln_x[i];
            seq[i].push(next);
        }
        let head = seq[0][n];
        folded[0].push(head);
        for j in 1..d {
            let v = if unimodal {
                log_convolve_unimodal(&folded[j - 1], &seq[j], n, &mut modes[j])
            } else {
                log_convolve(&folded[j - 1], &seq[j], n)
            };
            folded[j].push(v);
        }
        ln_poch_a += (args.a + nf - 1.0).ln();
        let ln_term = ln_poch_a + folded[d - 1][n];
        ln_sum = log_add_exp(ln_sum, ln_term);
        if ln_term < ln_tol + ln_sum {
            quiet += 1;
            if quiet >= 3 {
                return Ok(SeriesSum {
                    ln_value: ln_sum,
                    orders: n,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Truncation {
        order: ctl.max_order,
        partial: ln_sum.exp(),
    })
}

/// `F_A(a; b; c; x)`.
pub fn lauricella_fa(args: &LauricellaArgs, ctl: &SeriesControl) -> Result<f64> {
    ln_lauricella_fa(args, ctl).map(|s| s.ln_value.exp())
}
