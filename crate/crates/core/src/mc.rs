//! Monte-Carlo engine for the one-factor forward-rate model.
//!
//! The whole forward curve is evolved under
//!
//! ```text
//! df(t, T) = alpha(t, T) dt + sigma(t, T) dW(t)
//! alpha(t, T) = sigma(t, T) * integral_t^T sigma(t, tau) dtau
//! ```
//!
//! with an Euler scheme on the surface grid: one normal draw per step,
//! left-rectangle accrual of the short rate, and the no-arbitrage drift
//! fixed by the volatility. Discounted bond prices are then martingales up
//! to discretization noise, which [`martingale_check`] verifies directly.
//!
//! Paths use one ChaCha12 stream per path (per antithetic pair when
//! mirroring is on), so results do not depend on evaluation order and are
//! bit-reproducible from the seed. Normals come from the
//! [`rand_distr::StandardNormal`] ziggurat sampler; see [`NORMAL_SAMPLER`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::curves::{annuity, DiscountCurve, SpreadCurve, SwaptionSpec};
use crate::error::{Error, Result};
use crate::pricer::{atm_strike, Convention};
use crate::surface::{grid_index, ForwardVolSurface};

/// Identifier of the normal sampler, recorded in run metadata so a run can
/// be reproduced exactly.
pub const NORMAL_SAMPLER: &str = "ziggurat (rand_distr::StandardNormal)";

/// Monte-Carlo run parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McConfig {
    /// Number of simulated paths (pairs count as two).
    pub n_paths: usize,
    /// Seed for the per-path ChaCha12 streams.
    pub seed: u64,
    /// Mirror every path with its antithetic twin.
    pub antithetic: bool,
    /// Debug hook: `false` removes the no-arbitrage drift entirely, which
    /// must make [`martingale_check`] fail.
    pub drift_enabled: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            seed: 0,
            antithetic: false,
            drift_enabled: true,
        }
    }
}

/// Aggregated Monte-Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McResult {
    /// Mean discounted payoff per unit notional.
    pub price: f64,
    /// Standard error of the price (pair-level when antithetic).
    pub std_error: f64,
    /// Paths simulated.
    pub n_paths: usize,
    /// Price mapped to a Bachelier normal IV via the annuity identity.
    pub normal_iv: f64,
    /// Standard error mapped to IV units.
    pub iv_std_error: f64,
}

/// Outcome of a discounted-bond martingale test.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MartingaleCheck {
    /// Bond maturity being tested.
    pub t_bond: f64,
    /// Checkpoint time of the expectation.
    pub checkpoint: f64,
    /// Today's curve value `B(0, T_bond)`.
    pub expected: f64,
    /// Pathwise mean of the discounted simulated bond.
    pub simulated: f64,
    /// `|simulated - expected| / expected`.
    pub rel_error: f64,
    /// Standard error of the pathwise mean, relative to `expected`.
    pub rel_std_error: f64,
    /// Paths simulated.
    pub n_paths: usize,
}

/// Forward curve state along one path: rates `f(t, t_j)` for the surviving
/// grid nodes plus the running short-rate integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurveState {
    dt: f64,
    time_index: usize,
    forwards: Vec<f64>,
    accumulated_discount: f64,
}

impl ForwardCurveState {
    /// State from explicit forwards `f(t, t_j)` for
    /// `j = time_index..time_index + forwards.len()`.
    pub fn new(
        dt: f64,
        time_index: usize,
        forwards: Vec<f64>,
        accumulated_discount: f64,
    ) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::invalid(format!("grid step must be positive, got {dt}")));
        }
        if forwards.is_empty() {
            return Err(Error::invalid("state needs at least one forward node"));
        }
        if forwards.iter().any(|f| !f.is_finite()) {
            return Err(Error::invalid("forwards must be finite"));
        }
        Ok(Self {
            dt,
            time_index,
            forwards,
            accumulated_discount,
        })
    }

    /// Initial state at `t = 0` with forwards implied by the discount curve,
    /// `f(0, t_j) = -(ln B(0, t_{j+1}) - ln B(0, t_j)) / dt` for
    /// `j = 0..n_nodes`.
    pub fn from_curve(curve: &DiscountCurve, dt: f64, n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid("state needs at least one forward node"));
        }
        let mut forwards = Vec::with_capacity(n_nodes);
        let mut log_prev = curve.discount(0.0)?.ln();
        for j in 0..n_nodes {
            let log_next = curve.discount((j + 1) as f64 * dt)?.ln();
            forwards.push((log_prev - log_next) / dt);
            log_prev = log_next;
        }
        Self::new(dt, 0, forwards, 0.0)
    }

    /// Current time `t = time_index * dt`.
    pub fn time(&self) -> f64 {
        self.time_index as f64 * self.dt
    }

    /// Calendar grid index of the state.
    pub fn time_index(&self) -> usize {
        self.time_index
    }

    /// Surviving forwards, starting at the current node.
    pub fn forwards(&self) -> &[f64] {
        &self.forwards
    }

    /// Running approximation of `integral_0^t r`.
    pub fn accumulated_discount(&self) -> f64 {
        self.accumulated_discount
    }

    /// Bond price `B(t, t_m)` reconstructed from the curve state,
    /// `exp(-sum of f(t, t_j) dt over j = time_index..m)`.
    pub fn bond(&self, maturity_index: usize) -> Result<f64> {
        if maturity_index < self.time_index
            || maturity_index > self.time_index + self.forwards.len()
        {
            return Err(Error::grid(format!(
                "bond maturity index {maturity_index} outside state range [{}, {}]",
                self.time_index,
                self.time_index + self.forwards.len()
            )));
        }
        let sum: f64 = self.forwards[..maturity_index - self.time_index].iter().sum();
        Ok((-sum * self.dt).exp())
    }
}

/// No-arbitrage drift `alpha(t_i, t_j)` discretized as
/// `sigma[i][j] * sum_{k=i..=j} sigma[i][k] * dt` (diagonal cell included).
pub fn drift(surface: &ForwardVolSurface, i: usize, j: usize) -> Result<f64> {
    let s_ij = surface.get(i, j)?;
    Ok(s_ij * surface.int_sigma(i, j + 1)?)
}

/// One Euler step of the full curve: accrues the expiring short rate,
/// shocks every surviving node with the shared normal draw `z`, and drops
/// the expired node.
pub fn euler_step(
    state: &ForwardCurveState,
    surface: &ForwardVolSurface,
    z: f64,
) -> Result<ForwardCurveState> {
    if !z.is_finite() {
        return Err(Error::invalid(format!("normal draw must be finite, got {z}")));
    }
    if state.dt != surface.dt() {
        return Err(Error::grid(format!(
            "state grid step {} does not match surface step {}",
            state.dt,
            surface.dt()
        )));
    }
    let i = state.time_index;
    let sqrt_dt = state.dt.sqrt();
    let mut forwards = Vec::with_capacity(state.forwards.len().saturating_sub(1));
    for (offset, &f) in state.forwards.iter().enumerate().skip(1) {
        let j = i + offset;
        let sigma = surface.get(i, j)?;
        forwards.push(f + drift(surface, i, j)? * state.dt + sigma * sqrt_dt * z);
    }
    if forwards.is_empty() {
        return Err(Error::grid("cannot step past the last surviving node"));
    }
    Ok(ForwardCurveState {
        dt: state.dt,
        time_index: i + 1,
        forwards,
        accumulated_discount: state.accumulated_discount + state.forwards[0] * state.dt,
    })
}

/// Everything fixed across paths: initial forwards and per-step drift rows.
struct PathEngine<'a> {
    surface: &'a ForwardVolSurface,
    f0: Vec<f64>,
    /// `alpha(i, j) * dt` for `j = i+1..n_nodes`, one row per step.
    alpha_dt: Vec<Vec<f64>>,
    n_nodes: usize,
    steps: usize,
    dt: f64,
    sqrt_dt: f64,
}

impl<'a> PathEngine<'a> {
    fn new(
        surface: &'a ForwardVolSurface,
        curve: &DiscountCurve,
        steps: usize,
        n_nodes: usize,
        drift_enabled: bool,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("simulation needs at least one step"));
        }
        if surface.max_index() < n_nodes {
            return Err(Error::grid(format!(
                "surface max_index {} does not cover the {} simulated nodes",
                surface.max_index(),
                n_nodes
            )));
        }
        let dt = surface.dt();
        let f0 = ForwardCurveState::from_curve(curve, dt, n_nodes)?.forwards.clone();
        let mut alpha_dt = Vec::with_capacity(steps);
        for i in 0..steps {
            let row = surface.row(i);
            let mut cum = row[0] * dt; // running integral including the diagonal
            let mut alphas = Vec::with_capacity(n_nodes - i - 1);
            for j in (i + 1)..n_nodes {
                let sigma = row[j - i];
                cum += sigma * dt;
                alphas.push(if drift_enabled { sigma * cum * dt } else { 0.0 });
            }
            alpha_dt.push(alphas);
        }
        Ok(Self {
            surface,
            f0,
            alpha_dt,
            n_nodes,
            steps,
            dt,
            sqrt_dt: dt.sqrt(),
        })
    }

    /// Run one path into `f` (scratch buffer) and return the discount factor
    /// `exp(-integral r)` at the terminal step.
    fn run(&self, f: &mut [f64], rng: &mut ChaCha12Rng, sign: f64) -> f64 {
        f.copy_from_slice(&self.f0);
        let mut acc = 0.0;
        for i in 0..self.steps {
            acc += f[i] * self.dt;
            let z: f64 = StandardNormal.sample(rng);
            let shock = self.sqrt_dt * sign * z;
            let alphas = &self.alpha_dt[i];
            let sigmas = self.surface.row(i);
            for j in (i + 1)..self.n_nodes {
                f[j] += alphas[j - i - 1] + sigmas[j - i] * shock;
            }
        }
        (-acc).exp()
    }
}

/// Mean and standard error over per-path (or per-pair) values produced by
/// `value(discount, terminal forwards)`.
fn mc_estimate(
    engine: &PathEngine,
    cfg: &McConfig,
    mut value: impl FnMut(f64, &[f64]) -> f64,
) -> Result<(f64, f64)> {
    if cfg.n_paths < 2 {
        return Err(Error::invalid(format!(
            "at least 2 paths required, got {}",
            cfg.n_paths
        )));
    }
    if cfg.antithetic && cfg.n_paths % 2 != 0 {
        return Err(Error::invalid(
            "antithetic sampling needs an even path count",
        ));
    }
    let n_obs = if cfg.antithetic {
        cfg.n_paths / 2
    } else {
        cfg.n_paths
    };
    let mut f = vec![0.0; engine.n_nodes];
    let mut observations = Vec::with_capacity(n_obs);
    for stream in 0..n_obs as u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        let disc = engine.run(&mut f, &mut rng, 1.0);
        let v = value(disc, &f[engine.steps..]);
        let obs = if cfg.antithetic {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream);
            let disc = engine.run(&mut f, &mut rng, -1.0);
            0.5 * (v + value(disc, &f[engine.steps..]))
        } else {
            v
        };
        observations.push(obs);
    }
    let mean = observations.iter().sum::<f64>() / n_obs as f64;
    let var = observations
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n_obs - 1) as f64;
    Ok((mean, (var / n_obs as f64).sqrt()))
}

/// Price a swaption by simulation: the discounted positive part of the swap
/// value re-evaluated on each terminal curve.
///
/// The strike defaults to the convention's ATM level when the spec does not
/// pin one. Under [`Convention::Dual`] the simulated bonds are OIS bonds and
/// the deterministic spread factors multiply the float leg.
pub fn price_swaption_mc(
    surface: &ForwardVolSurface,
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    spec: &SwaptionSpec,
    convention: Convention,
    cfg: &McConfig,
) -> Result<McResult> {
    let dt = surface.dt();
    let expiry_index = grid_index(spec.expiry(), dt, "expiry")?;
    let maturity_index = grid_index(spec.maturity(), dt, "swap maturity")?;
    let payment_offsets: Vec<usize> = (1..=spec.n_payments())
        .map(|n| grid_index(spec.payment_time(n), dt, "payment time"))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|idx| idx - expiry_index)
        .collect();
    if expiry_index == 0 {
        return Err(Error::grid("expiry must be at least one grid step out"));
    }

    let strike = match spec.strike() {
        Some(k) => k,
        None => atm_strike(curve, spread, spec, convention)?,
    };
    let a = spec.day_count_factor();
    let strike_per_payment = strike / f64::from(spec.frequency());

    // Deterministic spread ratios S(T_{n-1}) / S(T_n) for the dual payoff.
    let spread_ratios: Option<Vec<f64>> = match convention {
        Convention::Single => None,
        Convention::Dual => {
            let unit;
            let s = match spread {
                Some(s) => s,
                None => {
                    unit = SpreadCurve::unit();
                    &unit
                }
            };
            let mut ratios = Vec::with_capacity(spec.n_payments());
            for n in 1..=spec.n_payments() {
                ratios.push(
                    s.factor(spec.payment_time(n - 1))? / s.factor(spec.payment_time(n))?,
                );
            }
            Some(ratios)
        }
    };

    let engine = PathEngine::new(
        surface,
        curve,
        expiry_index,
        maturity_index,
        cfg.drift_enabled,
    )?;

    // Bond prices B(T, .) at every payment date from terminal forwards, via
    // one prefix-sum sweep.
    let mut bonds = vec![0.0; spec.n_payments() + 1];
    let (price, std_error) = mc_estimate(&engine, cfg, |disc, forwards| {
        bonds[0] = 1.0; // B(T, T)
        let mut sum = 0.0;
        let mut next = 1;
        for (offset, f) in forwards.iter().enumerate() {
            sum += f * dt;
            if offset + 1 == payment_offsets[next - 1] {
                bonds[next] = (-sum).exp();
                next += 1;
                if next > spec.n_payments() {
                    break;
                }
            }
        }
        let value = match &spread_ratios {
            None => {
                let fixed: f64 = bonds[1..].iter().sum();
                a * (1.0 - bonds[spec.n_payments()]) - strike_per_payment * fixed
            }
            Some(ratios) => {
                let mut float_leg = 0.0;
                let mut fixed = 0.0;
                for n in 1..=spec.n_payments() {
                    float_leg += bonds[n - 1] * ratios[n - 1] - bonds[n];
                    fixed += bonds[n];
                }
                a * float_leg - strike_per_payment * fixed
            }
        };
        disc * value.max(0.0)
    })?;

    let ann = annuity(curve, spec)?;
    let iv_unit = ann * (spec.expiry() / (2.0 * core::f64::consts::PI)).sqrt();
    Ok(McResult {
        price,
        std_error,
        n_paths: cfg.n_paths,
        normal_iv: price / iv_unit,
        iv_std_error: std_error / iv_unit,
    })
}

/// Estimate `E[exp(-integral r) * B(t, T_bond)]` at checkpoint `t` and
/// compare with today's `B(0, T_bond)`. With the no-arbitrage drift the
/// relative error stays within a few standard errors; with the drift
/// disabled it must not.
pub fn martingale_check(
    surface: &ForwardVolSurface,
    curve: &DiscountCurve,
    checkpoint: f64,
    t_bond: f64,
    cfg: &McConfig,
) -> Result<MartingaleCheck> {
    let dt = surface.dt();
    let checkpoint_index = grid_index(checkpoint, dt, "checkpoint")?;
    let bond_index = grid_index(t_bond, dt, "bond maturity")?;
    if checkpoint_index == 0 || checkpoint_index >= bond_index {
        return Err(Error::invalid(format!(
            "checkpoint {checkpoint} must lie strictly between 0 and the bond maturity {t_bond}"
        )));
    }
    let engine = PathEngine::new(surface, curve, checkpoint_index, bond_index, cfg.drift_enabled)?;
    let span = bond_index - checkpoint_index;
    let (simulated, std_error) = mc_estimate(&engine, cfg, |disc, forwards| {
        let sum: f64 = forwards[..span].iter().sum();
        disc * (-sum * dt).exp()
    })?;
    let expected = curve.discount(t_bond)?;
    Ok(MartingaleCheck {
        t_bond,
        checkpoint,
        expected,
        simulated,
        rel_error: (simulated - expected).abs() / expected,
        rel_std_error: std_error / expected,
        n_paths: cfg.n_paths,
    })
}
