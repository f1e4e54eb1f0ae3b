//! Closed-form ATM swaption pricing in the small-volatility limit.
//!
//! The discounted ATM swap-contract value at expiry is Gaussian to leading
//! order, with aggregate standard deviation
//!
//! ```text
//! Sigma^2(T, N) = (1/T) * integral_0^T v(t, N)^2 dt
//! ```
//!
//! where `v(t, N)` weights the forward-vol integrals `int_t^{T_n} sigma(t, tau) dtau`
//! by discounted cashflows. The ATM option value is then
//! `Sigma(T, N) * sqrt(T / (2 pi))`, and the Bachelier normal IV follows from
//! dividing by the annuity.
//!
//! Two cashflow conventions are supported: a single projection/discount
//! curve, and OIS discounting with a deterministic multiplicative Libor-OIS
//! spread. All integrals are left-Riemann sums on the surface grid.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::curves::{annuity, atm_strike_dual, swap_rate, DiscountCurve, SpreadCurve, SwaptionSpec};
use crate::error::{Error, Result};
use crate::surface::{grid_index, ForwardVolSurface};

/// Discounting convention for swap cashflows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Convention {
    /// One curve projects and discounts (optionally day-count adjusted).
    #[default]
    Single,
    /// OIS discounting with a deterministic Libor-OIS spread factor.
    Dual,
}

impl core::fmt::Display for Convention {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Convention::Single => write!(f, "single"),
            Convention::Dual => write!(f, "dual"),
        }
    }
}

/// Output of [`atm_price`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceResult {
    /// Present value per unit notional.
    pub price: f64,
    /// Aggregate small-vol standard deviation `Sigma(T, N)`.
    pub sigma_total: f64,
    /// Bachelier normal implied volatility, `price / (annuity * sqrt(T/2pi))`.
    pub normal_iv: f64,
    /// Fixed-leg annuity used in the IV identity.
    pub annuity: f64,
}

/// The ATM strike implied by the convention: the par [`swap_rate`] for
/// [`Convention::Single`], the OIS-spread-adjusted [`atm_strike_dual`] for
/// [`Convention::Dual`]. A missing spread curve means `S = 1`.
pub fn atm_strike(
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    spec: &SwaptionSpec,
    convention: Convention,
) -> Result<f64> {
    match convention {
        Convention::Single => swap_rate(curve, spec),
        Convention::Dual => {
            let unit;
            let s = match spread {
                Some(s) => s,
                None => {
                    unit = SpreadCurve::unit();
                    &unit
                }
            };
            atm_strike_dual(curve, s, spec)
        }
    }
}

/// One cashflow term of `v(t, N)`: a discount-weighted coefficient applied
/// to the forward-vol integral up to the grid index of its maturity.
#[derive(Debug, Clone)]
pub(crate) struct VarianceWeights {
    /// `(coefficient, maturity grid index)` pairs.
    terms: Vec<(f64, usize)>,
    /// Grid index of the option expiry.
    expiry_index: usize,
}

impl VarianceWeights {
    /// Single-curve weights for Eq.-style
    /// `v = A * (B(0,T) I_T - B(0,T_N) I_{T_N}) - (r_X / freq) * sum_n B(0,T_n) I_{T_n}`.
    pub(crate) fn single(
        curve: &DiscountCurve,
        spec: &SwaptionSpec,
        strike: f64,
        dt: f64,
    ) -> Result<Self> {
        let expiry_index = grid_index(spec.expiry(), dt, "expiry")?;
        let a = spec.day_count_factor();
        let mut terms = Vec::with_capacity(spec.n_payments() + 2);
        terms.push((a * curve.discount(spec.expiry())?, expiry_index));
        terms.push((
            -a * curve.discount(spec.maturity())?,
            grid_index(spec.maturity(), dt, "swap maturity")?,
        ));
        let per_payment = -strike / f64::from(spec.frequency());
        for n in 1..=spec.n_payments() {
            let t_n = spec.payment_time(n);
            terms.push((
                per_payment * curve.discount(t_n)?,
                grid_index(t_n, dt, "payment time")?,
            ));
        }
        Ok(Self {
            terms,
            expiry_index,
        })
    }

    /// Dual-curve weights,
    /// `v = (A + r/freq) * sum_n B(0,T_n) I_{T_n}
    ///      - A * sum_n B(0,T_{n-1}) S(T_{n-1})/S(T_n) I_{T_{n-1}}`.
    pub(crate) fn dual(
        curve: &DiscountCurve,
        spread: &SpreadCurve,
        spec: &SwaptionSpec,
        strike: f64,
        dt: f64,
    ) -> Result<Self> {
        let expiry_index = grid_index(spec.expiry(), dt, "expiry")?;
        let a = spec.day_count_factor();
        let fixed_coeff = a + strike / f64::from(spec.frequency());
        let mut terms = Vec::with_capacity(2 * spec.n_payments());
        for n in 1..=spec.n_payments() {
            let t_prev = spec.payment_time(n - 1);
            let t_n = spec.payment_time(n);
            terms.push((
                fixed_coeff * curve.discount(t_n)?,
                grid_index(t_n, dt, "payment time")?,
            ));
            terms.push((
                -a * curve.discount(t_prev)? * spread.factor(t_prev)? / spread.factor(t_n)?,
                grid_index(t_prev, dt, "payment time")?,
            ));
        }
        Ok(Self {
            terms,
            expiry_index,
        })
    }

    pub(crate) fn expiry_index(&self) -> usize {
        self.expiry_index
    }

    /// Largest maturity grid index the weights touch.
    pub(crate) fn max_maturity_index(&self) -> usize {
        self.terms.iter().map(|&(_, e)| e).max().unwrap_or(0)
    }

    /// Evaluate `v(t_i, N)` on a surface.
    pub(crate) fn eval(&self, surface: &ForwardVolSurface, i: usize) -> Result<f64> {
        let mut v = 0.0;
        for &(coeff, end) in &self.terms {
            v += coeff * surface.int_sigma(i, end)?;
        }
        Ok(v)
    }

    /// Evaluate `v(t_i, N)` on the indicator surface whose row `i` is 1 on
    /// cells `[lo, hi)` and 0 elsewhere: the sensitivity of `v` to a flat
    /// segment value on those cells.
    pub(crate) fn eval_indicator(&self, i: usize, lo: usize, hi: usize, dt: f64) -> f64 {
        let mut v = 0.0;
        for &(coeff, end) in &self.terms {
            let overlap = end.min(hi).saturating_sub(lo.max(i));
            v += coeff * overlap as f64 * dt;
        }
        v
    }

    /// `Sigma(T, N)` from the discretized variance integral
    /// `(1/T) * sum_i v(t_i)^2 * dt`.
    pub(crate) fn sigma_total(&self, surface: &ForwardVolSurface) -> Result<f64> {
        if self.max_maturity_index() > surface.max_index() {
            return Err(Error::grid(format!(
                "surface max_index {} does not cover maturity index {}",
                surface.max_index(),
                self.max_maturity_index()
            )));
        }
        let mut acc = 0.0;
        for i in 0..self.expiry_index {
            let v = self.eval(surface, i)?;
            acc += v * v;
        }
        Ok((acc / self.expiry_index as f64).sqrt())
    }
}

pub(crate) fn weights_for(
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    spec: &SwaptionSpec,
    strike: f64,
    convention: Convention,
    dt: f64,
) -> Result<VarianceWeights> {
    match convention {
        Convention::Single => VarianceWeights::single(curve, spec, strike, dt),
        Convention::Dual => {
            let unit;
            let s = match spread {
                Some(s) => s,
                None => {
                    unit = SpreadCurve::unit();
                    &unit
                }
            };
            VarianceWeights::dual(curve, s, spec, strike, dt)
        }
    }
}

/// Single-curve `v(t_i, N)` at calendar index `t_i`, with explicit strike.
pub fn v_single(
    surface: &ForwardVolSurface,
    curve: &DiscountCurve,
    spec: &SwaptionSpec,
    strike: f64,
    t_i: usize,
) -> Result<f64> {
    let w = VarianceWeights::single(curve, spec, strike, surface.dt())?;
    if t_i >= w.expiry_index() {
        return Err(Error::grid(format!(
            "calendar index {t_i} is at or beyond the expiry index {}",
            w.expiry_index()
        )));
    }
    w.eval(surface, t_i)
}

/// Dual-curve `v(t_i, N)` at calendar index `t_i`, with explicit strike
/// (normally the [`atm_strike_dual`] level).
pub fn v_dual(
    surface: &ForwardVolSurface,
    curve: &DiscountCurve,
    spread: &SpreadCurve,
    spec: &SwaptionSpec,
    strike: f64,
    t_i: usize,
) -> Result<f64> {
    let w = VarianceWeights::dual(curve, spread, spec, strike, surface.dt())?;
    if t_i >= w.expiry_index() {
        return Err(Error::grid(format!(
            "calendar index {t_i} is at or beyond the expiry index {}",
            w.expiry_index()
        )));
    }
    w.eval(surface, t_i)
}

/// Aggregate standard deviation `Sigma(T, N)` under the given convention,
/// using the spec's strike, or the convention's ATM level when none is set.
pub fn sigma_total(
    surface: &ForwardVolSurface,
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    spec: &SwaptionSpec,
    convention: Convention,
) -> Result<f64> {
    let strike = match spec.strike() {
        Some(k) => k,
        None => atm_strike(curve, spread, spec, convention)?,
    };
    weights_for(curve, spread, spec, strike, convention, surface.dt())?.sigma_total(surface)
}

/// Closed-form ATM swaption value `Sigma(T, N) * sqrt(T / (2 pi))` and its
/// Bachelier normal IV.
///
/// The strike is always the convention's ATM level; an explicit strike on
/// the spec is ignored here (the closed form only holds at the money).
pub fn atm_price(
    surface: &ForwardVolSurface,
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    spec: &SwaptionSpec,
    convention: Convention,
) -> Result<PriceResult> {
    let strike = atm_strike(curve, spread, spec, convention)?;
    let w = weights_for(curve, spread, spec, strike, convention, surface.dt())?;
    let sigma = w.sigma_total(surface)?;
    let ann = annuity(curve, spec)?;
    if ann.is_nan() || ann <= 0.0 {
        return Err(Error::numerical(format!(
            "annuity must be positive, got {ann} for {}",
            spec.describe()
        )));
    }
    let sqrt_t_2pi = (spec.expiry() / (2.0 * core::f64::consts::PI)).sqrt();
    let price = sigma * sqrt_t_2pi;
    Ok(PriceResult {
        price,
        sigma_total: sigma,
        normal_iv: sigma / ann,
        annuity: ann,
    })
}
