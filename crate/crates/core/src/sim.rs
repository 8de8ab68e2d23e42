//! Monte Carlo ground truth: channel realizations for both schemes, empirical
//! outage and capacity, the squared-Gaussian sampling route, and
//! goodness-of-fit statistics.
//!
//! Trials are grouped into fixed-size blocks; block `b` draws from the ChaCha8
//! stream `b` of the plan's seed. Results depend only on `(seed, trials)`,
//! never on how blocks are scheduled across threads.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma as GammaSampler, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ContinuousDist;
use crate::error::{Error, Result};
use crate::model::{NakagamiParams, Topology};

/// Trials per RNG substream.
pub const BLOCK_TRIALS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSelection {
    Era,
    Ora,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub trials: u64,
    pub seed: u64,
    pub scheme: SchemeSelection,
}

impl SimPlan {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials < 1 {
            return Err(Error::Config("Monte Carlo needs at least one trial".into()));
        }
        Ok(Self {
            trials,
            seed,
            scheme: SchemeSelection::Both,
        })
    }

    fn blocks(&self) -> impl IndexedParallelIterator<Item = (u64, u64)> + '_ {
        let n = self.trials.div_ceil(BLOCK_TRIALS) as usize;
        (0..n).into_par_iter().map(move |b| {
            let b = b as u64;
            let start = b * BLOCK_TRIALS;
            (b, (self.trials - start).min(BLOCK_TRIALS))
        })
    }

    fn block_rng(&self, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block);
        rng
    }
}

/// `√V` with `V ~ Gamma(m, Ω/m)`.
pub fn sample_nakagami<R: Rng + ?Sized>(p: &NakagamiParams, rng: &mut R) -> f64 {
    let g = GammaSampler::new(p.m, p.omega / p.m).expect("validated Nakagami parameters");
    g.sample(rng).sqrt()
}

/// `√(Σ_{i=1}^{m} (X_i² + Y_i²))` with `X, Y ~ N(0, Ω/(2m))`; needs integer `m`.
pub fn sample_nakagami_gaussian<R: Rng + ?Sized>(p: &NakagamiParams, rng: &mut R) -> Result<f64> {
    let m = integer_shape(p.m)?;
    Ok(gaussian_power(m, p.omega / (2.0 * p.m), rng).sqrt())
}

fn integer_shape(m: f64) -> Result<usize> {
    if m.fract() != 0.0 || m < 1.0 {
        return Err(Error::domain(
            "squared-Gaussian sampler",
            format!("shape m = {m} is not a positive integer"),
        ));
    }
    Ok(m as usize)
}

fn gaussian_power<R: Rng + ?Sized>(m: usize, variance: f64, rng: &mut R) -> f64 {
    (0..2 * m)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            x * x
        })
        .sum::<f64>()
        * variance
}

/// One joint draw of all fading variables, evaluated under both schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    /// `h₀ + Σ_n V_n`.
    pub z: f64,
    /// `h₀ + max_n V_n`.
    pub r: f64,
    /// Selected RIS (lowest index on ties); `None` without RISs.
    pub n_star: Option<usize>,
}

/// How each channel magnitude is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingRoute {
    /// Square root of a Gamma variate.
    GammaRoot,
    /// Sum of squared Gaussians (integer shapes only).
    SquaredGaussian,
}

#[derive(Debug, Clone)]
enum LinkSampler {
    Gamma(GammaSampler<f64>),
    Gaussian { m: usize, variance: f64 },
}

impl LinkSampler {
    fn new(p: &NakagamiParams, route: SamplingRoute) -> Result<Self> {
        Ok(match route {
            SamplingRoute::GammaRoot => LinkSampler::Gamma(
                GammaSampler::new(p.m, p.omega / p.m)
                    .map_err(|e| Error::domain("LinkSampler", format!("{e}")))?,
            ),
            SamplingRoute::SquaredGaussian => LinkSampler::Gaussian {
                m: integer_shape(p.m)?,
                variance: p.omega / (2.0 * p.m),
            },
        })
    }

    /// Squared magnitude.
    #[inline]
    fn power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LinkSampler::Gamma(g) => g.sample(rng),
            LinkSampler::Gaussian { m, variance } => gaussian_power(*m, *variance, rng),
        }
    }
}

/// Precomputed samplers for a topology. Draw order within a trial: `h₀`,
/// then `(h_nl, g_nl)` for each element of RIS 0, RIS 1, ….
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    direct: LinkSampler,
    riss: Vec<(LinkSampler, LinkSampler, f64, usize)>,
}

impl ChannelSampler {
    pub fn new(topo: &Topology, route: SamplingRoute) -> Result<Self> {
        topo.validate()?;
        let riss = topo
            .riss
            .iter()
            .enumerate()
            .map(|(n, r)| {
                Ok((
                    LinkSampler::new(&topo.hop1[n], route)?,
                    LinkSampler::new(&topo.hop2[n], route)?,
                    r.kappa,
                    r.elements,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            direct: LinkSampler::new(&topo.direct, route)?,
            riss,
        })
    }

    pub fn n_ris(&self) -> usize {
        self.riss.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let h0 = self.direct.power(rng).sqrt();
        let mut sum = 0.0;
        let mut best = f64::NEG_INFINITY;
        let mut n_star = None;
        for (n, (h, g, kappa, elements)) in self.riss.iter().enumerate() {
            let mut v = 0.0;
            for _ in 0..*elements {
                let hp = h.power(rng);
                let gp = g.power(rng);
                v += (hp * gp).sqrt();
            }
            v *= kappa;
            sum += v;
            if v > best {
                best = v;
                n_star = Some(n);
            }
        }
        Draw {
            z: h0 + sum,
            r: h0 + if n_star.is_some() { best } else { 0.0 },
            n_star,
        }
    }
}

/// One ERA magnitude `Z = h₀ + Σ_n Σ_l κ_n h_nl g_nl`.
pub fn realize_era<R: Rng + ?Sized>(topo: &Topology, rng: &mut R) -> Result<f64> {
    Ok(ChannelSampler::new(topo, SamplingRoute::GammaRoot)?
        .draw(rng)
        .z)
}

/// One ORA magnitude `R = h₀ + V_{n*}` and the selected index.
pub fn realize_ora<R: Rng + ?Sized>(topo: &Topology, rng: &mut R) -> Result<(f64, Option<usize>)> {
    let d = ChannelSampler::new(topo, SamplingRoute::GammaRoot)?.draw(rng);
    Ok((d.r, d.n_star))
}

/// Runs `per_block` over every block in parallel and returns the outputs in
/// block order.
fn run_blocks<T: Send>(
    plan: &SimPlan,
    per_block: impl Fn(&mut ChaCha8Rng, u64) -> T + Sync,
) -> Vec<T> {
    plan.blocks()
        .map(|(b, n)| {
            let mut rng = plan.block_rng(b);
            per_block(&mut rng, n)
        })
        .collect()
}

/// All draws of a plan, in trial order.
pub fn sample_draws(plan: &SimPlan, sampler: &ChannelSampler) -> Vec<Draw> {
    run_blocks(plan, |rng, n| {
        (0..n).map(|_| sampler.draw(rng)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Running sums for OP and EC at a set of average SNRs, for both schemes.
#[derive(Debug, Clone, PartialEq)]
struct GridSums {
    outage: [Vec<u64>; 2],
    capacity: [Vec<f64>; 2],
    capacity_sq: [Vec<f64>; 2],
    selected: Vec<u64>,
    trials: u64,
}

impl GridSums {
    fn new(points: usize, n_ris: usize) -> Self {
        Self {
            outage: [vec![0; points], vec![0; points]],
            capacity: [vec![0.0; points], vec![0.0; points]],
            capacity_sq: [vec![0.0; points], vec![0.0; points]],
            selected: vec![0; n_ris],
            trials: 0,
        }
    }

    fn add(&mut self, d: &Draw, rho_bars: &[f64], rho_th: f64) {
        for (s, mag) in [d.z, d.r].into_iter().enumerate() {
            let sq = mag * mag;
            for (i, rho) in rho_bars.iter().enumerate() {
                let snr = rho * sq;
                if snr <= rho_th {
                    self.outage[s][i] += 1;
                }
                let c = snr.ln_1p() / std::f64::consts::LN_2;
                self.capacity[s][i] += c;
                self.capacity_sq[s][i] += c * c;
            }
        }
        if let Some(n) = d.n_star {
            self.selected[n] += 1;
        }
        self.trials += 1;
    }

    fn merge(&mut self, other: &GridSums) {
        for s in 0..2 {
            for i in 0..self.outage[s].len() {
                self.outage[s][i] += other.outage[s][i];
                self.capacity[s][i] += other.capacity[s][i];
                self.capacity_sq[s][i] += other.capacity_sq[s][i];
            }
        }
        for (a, b) in self.selected.iter_mut().zip(&other.selected) {
            *a += b;
        }
        self.trials += other.trials;
    }
}

/// Empirical estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Empirical OP and EC of one scheme at one average SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalPoint {
    pub rho_bar: f64,
    pub outage: Estimate,
    pub capacity: Estimate,
}

/// Monte Carlo results over an SNR grid, sharing one set of fading draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalGrid {
    pub trials: u64,
    pub seed: u64,
    pub rho_th: f64,
    pub era: Vec<EmpiricalPoint>,
    pub ora: Vec<EmpiricalPoint>,
    /// Fraction of trials in which each RIS was selected by ORA.
    pub selection: Vec<f64>,
}

impl EmpiricalGrid {
    /// `Σ_n Pr(n* = n) L_n`.
    pub fn expected_active_elements(&self, elements: &[usize]) -> f64 {
        self.selection
            .iter()
            .zip(elements)
            .map(|(p, &l)| p * l as f64)
            .sum()
    }
}

/// Empirical OP (fraction with `ρ̄·mag² ≤ ρ_th`) and EC (mean of
/// `log2(1 + ρ̄·mag²)`) at every `ρ̄` in `rho_bars`.
pub fn empirical_grid(
    plan: &SimPlan,
    sampler: &ChannelSampler,
    rho_bars: &[f64],
    rho_th: f64,
) -> Result<EmpiricalGrid> {
    if rho_bars.is_empty() || rho_bars.iter().any(|r| !(*r >= 0.0)) || !(rho_th >= 0.0) {
        return Err(Error::domain(
            "empirical_grid",
            "SNR grid must be nonempty and nonnegative",
        ));
    }
    let partials = run_blocks(plan, |rng, n| {
        let mut acc = GridSums::new(rho_bars.len(), sampler.n_ris());
        for _ in 0..n {
            acc.add(&sampler.draw(rng), rho_bars, rho_th);
        }
        acc
    });
    let mut total = GridSums::new(rho_bars.len(), sampler.n_ris());
    for p in &partials {
        total.merge(p);
    }
    let n = total.trials as f64;
    let series = |s: usize| -> Vec<EmpiricalPoint> {
        rho_bars
            .iter()
            .enumerate()
            .map(|(i, &rho_bar)| {
                let p = total.outage[s][i] as f64 / n;
                let mean = total.capacity[s][i] / n;
                let var =
                    (total.capacity_sq[s][i] / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
                EmpiricalPoint {
                    rho_bar,
                    outage: Estimate {
                        value: p,
                        std_error: (p * (1.0 - p) / n).sqrt(),
                    },
                    capacity: Estimate {
                        value: mean,
                        std_error: (var / n).sqrt(),
                    },
                }
            })
            .collect()
    };
    Ok(EmpiricalGrid {
        trials: total.trials,
        seed: plan.seed,
        rho_th,
        era: series(0),
        ora: series(1),
        selection: total.selected.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// Single-point form of [`empirical_grid`].
pub fn empirical_metrics(
    plan: &SimPlan,
    topo: &Topology,
    rho_bar: f64,
    rho_th: f64,
) -> Result<(EmpiricalPoint, EmpiricalPoint)> {
    let sampler = ChannelSampler::new(topo, SamplingRoute::GammaRoot)?;
    let g = empirical_grid(plan, &sampler, &[rho_bar], rho_th)?;
    Ok((g.era[0], g.ora[0]))
}

/// Raw sample moments `(1/n) Σ x^k`, `k = 1..=order`.
pub fn sample_moments(samples: &[f64], order: usize) -> Vec<f64> {
    let n = samples.len() as f64;
    (1..=order as i32)
        .map(|k| samples.iter().map(|x| x.powi(k)).sum::<f64>() / n)
        .collect()
}

/// KS critical value `√(−ln(p/2)/(2s))`.
pub fn ks_critical(significance: f64, samples: usize) -> f64 {
    (-(significance / 2.0).ln() / (2.0 * samples as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub kl: f64,
    pub ks_distance: f64,
    pub ks_critical: f64,
    pub accept_h0: bool,
    pub samples: usize,
    pub significance: f64,
}

/// Goodness of fit of `fitted` to `samples`.
///
/// KS: the empirical CDF of the full sample is compared with the fitted CDF at
/// `ks_samples` evenly spaced order statistics, against the critical value for
/// `ks_samples` points. KL: Freedman–Diaconis histogram over the central 99.9%
/// of the sample, compared bin by bin with the fitted probability mass
/// renormalized to the same range.
pub fn gof<D: ContinuousDist>(
    samples: &[f64],
    fitted: &D,
    significance: f64,
    ks_samples: usize,
) -> Result<GofReport> {
    if ks_samples < 2 || samples.len() < ks_samples {
        return Err(Error::TooFewSamples {
            need: ks_samples.max(2),
            got: samples.len(),
        });
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::domain(
            "gof",
            format!("significance {significance} outside (0, 1)"),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;

    let mut ks_distance: f64 = 0.0;
    for i in 0..ks_samples {
        let idx = (((i as f64 + 0.5) * nf / ks_samples as f64) as usize).min(n - 1);
        let x = sorted[idx];
        // Ties: the empirical CDF jumps over every copy of x.
        let lo = sorted.partition_point(|v| *v < x) as f64 / nf;
        let hi = sorted.partition_point(|v| *v <= x) as f64 / nf;
        let f = fitted.cdf(x);
        ks_distance = ks_distance.max((f - lo).abs()).max((f - hi).abs());
    }

    let kl = histogram_kl(&sorted, fitted)?;
    let ks_critical = ks_critical(significance, ks_samples);
    Ok(GofReport {
        kl,
        ks_distance,
        ks_critical,
        accept_h0: ks_distance < ks_critical,
        samples: ks_samples,
        significance,
    })
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn histogram_kl<D: ContinuousDist>(sorted: &[f64], fitted: &D) -> Result<f64> {
    let lo = quantile_sorted(sorted, 0.0005);
    let hi = quantile_sorted(sorted, 0.9995);
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    if !(hi > lo) || !(width > 0.0) {
        return Err(Error::domain("gof", "sample has no spread"));
    }
    let bins = (((hi - lo) / width).ceil() as usize).clamp(1, 100_000);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let start = sorted.partition_point(|v| *v < lo);
    let end = sorted.partition_point(|v| *v <= hi);
    for &x in &sorted[start..end] {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let kept = (end - start) as f64;
    let f_lo = fitted.cdf(lo);
    let mass = fitted.cdf(hi) - f_lo;
    if !(mass > 0.0) {
        return Ok(f64::INFINITY);
    }
    let mut kl = 0.0;
    let mut f_prev = f_lo;
    for (i, &c) in counts.iter().enumerate() {
        let f_next = if i + 1 == bins {
            fitted.cdf(hi)
        } else {
            fitted.cdf(lo + (i + 1) as f64 * width)
        };
        let q = (f_next - f_prev) / mass;
        f_prev = f_next;
        if c == 0 {
            continue;
        }
        let p = c as f64 / kept;
        if !(q > 0.0) {
            return Ok(f64::INFINITY);
        }
        kl += p * (p / q).ln();
    }
    Ok(kl.max(0.0))
}

/// Two-sample KS distance `sup |F_a − F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS critical value `c(p)·√((n+m)/(nm))`, `c(p) = √(−ln(p/2)/2)`.
pub fn ks_two_sample_critical(significance: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(significance / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpScheme {
    Era,
    Ora,
}

/// Writes `trial,value,n_star,snr_linear` rows; `n_star` is empty for ERA.
pub fn write_sample_dump<W: Write>(
    out: &mut W,
    draws: &[Draw],
    scheme: DumpScheme,
    rho_bar: f64,
) -> Result<()> {
    writeln!(out, "trial,value,n_star,snr_linear")?;
    for (t, d) in draws.iter().enumerate() {
        match scheme {
            DumpScheme::Era => writeln!(out, "{t},{},,{}", d.z, rho_bar * d.z * d.z)?,
            DumpScheme::Ora => {
                let n = d.n_star.map(|n| n.to_string()).unwrap_or_default();
                writeln!(out, "{t},{},{n},{}", d.r, rho_bar * d.r * d.r)?
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Gamma, Nakagami};
    use crate::model::{build_topology, presets};

    fn nak(m: f64, omega: f64) -> NakagamiParams {
        NakagamiParams::new(m, omega).unwrap()
    }

    #[test]
    fn critical_value_for_thousand_points() {
        assert!((ks_critical(0.05, 1000) - 0.042947).abs() < 1e-6);
    }

    #[test]
    fn nakagami_mean_square() {
        let p = nak(2.5, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let ms: f64 = (0..n)
            .map(|_| sample_nakagami(&p, &mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((ms / 3.0 - 1.0).abs() < 5e-3, "{ms}");
    }

    #[test]
    fn rayleigh_special_case() {
        let p = nak(1.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..1000).map(|_| sample_nakagami(&p, &mut rng)).collect();
        // Rayleigh with σ² = Ω/2 = 1 is Nakagami(1, 2).
        let rep = gof(&xs, &Nakagami(p), 0.05, 1000).unwrap();
        assert!(rep.accept_h0, "{rep:?}");
    }

    #[test]
    fn squared_gaussian_matches_gamma_root() {
        let p = nak(3.0, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let a: Vec<f64> = (0..n)
            .map(|_| sample_nakagami_gaussian(&p, &mut rng).unwrap())
            .collect();
        let b: Vec<f64> = (0..n).map(|_| sample_nakagami(&p, &mut rng)).collect();
        assert!(ks_two_sample(&a, &b) < ks_two_sample_critical(0.05, n, n));
        assert!(sample_nakagami_gaussian(&nak(2.5, 1.0), &mut rng).is_err());
    }

    #[test]
    fn self_consistent_fit_is_accepted() {
        let g = Gamma::new(9.0, 4.0).unwrap();
        let sampler = GammaSampler::new(9.0, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
        let rep = gof(&xs, &g, 0.05, 1000).unwrap();
        assert!(rep.accept_h0 && rep.kl < 0.01, "{rep:?}");
        assert_eq!(rep.accept_h0, rep.ks_distance < rep.ks_critical);
        assert!(gof(&xs[..10], &g, 0.05, 1000).is_err());
    }

    #[test]
    fn draws_respect_scheme_ordering() {
        let topo = build_topology(&presets::reference(&[3, 4], &presets::D1[..2], 5)).unwrap();
        let s = ChannelSampler::new(&topo, SamplingRoute::GammaRoot).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let d = s.draw(&mut rng);
            assert!(d.r <= d.z * (1.0 + 1e-15));
            assert!(d.n_star.unwrap() < 2);
        }
    }

    #[test]
    fn no_ris_gives_direct_link() {
        let mut topo = build_topology(&presets::reference(&[3], &presets::D1[..1], 5)).unwrap();
        topo.riss.clear();
        topo.hop1.clear();
        topo.hop2.clear();
        topo.gains.ris_db.clear();
        let s = ChannelSampler::new(&topo, SamplingRoute::GammaRoot).unwrap();
        let d = s.draw(&mut ChaCha8Rng::seed_from_u64(6));
        assert_eq!(d.z, d.r);
        assert_eq!(d.n_star, None);
    }

    #[test]
    fn single_ris_schemes_coincide() {
        let topo = build_topology(&presets::reference(&[8], &presets::D1[..1], 5)).unwrap();
        let s = ChannelSampler::new(&topo, SamplingRoute::GammaRoot).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let d = s.draw(&mut rng);
            assert_eq!(d.z, d.r);
        }
    }

    #[test]
    fn grid_is_independent_of_thread_count() {
        let topo = build_topology(&presets::reference(&[5, 6], &presets::D1[..2], 5)).unwrap();
        let s = ChannelSampler::new(&topo, SamplingRoute::GammaRoot).unwrap();
        let plan = SimPlan::new(3 * BLOCK_TRIALS + 17, 99).unwrap();
        let rhos = [1e10, 1e11];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| empirical_grid(&plan, &s, &rhos, 1.0).unwrap())
        };
        assert_eq!(run(1), run(3));
        let g = run(1);
        assert_eq!(g.trials, plan.trials);
        assert!((g.selection.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_threshold_never_outage() {
        let topo = build_topology(&presets::reference(&[2], &presets::D1[..1], 5)).unwrap();
        let (era, ora) =
            empirical_metrics(&SimPlan::new(1000, 1).unwrap(), &topo, 1e10, 0.0).unwrap();
        assert_eq!(era.outage.value, 0.0);
        assert_eq!(ora.outage.value, 0.0);
        assert!(era.capacity.value >= ora.capacity.value);
    }

    #[test]
    fn dump_format() {
        let draws = [Draw {
            z: 2.0,
            r: 1.5,
            n_star: Some(1),
        }];
        let mut buf = Vec::new();
        write_sample_dump(&mut buf, &draws, DumpScheme::Ora, 2.0).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "trial,value,n_star,snr_linear\n0,1.5,1,4.5\n"
        );
    }
}
