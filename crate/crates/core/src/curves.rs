//! Discount and spread curves, swap contract terms, and the par-rate /
//! annuity / ATM-strike calculations built on them.
//!
//! All times are year-fractions. A curve is a set of pillars interpolated
//! linearly in log-value (piecewise-flat instantaneous forwards), with an
//! implicit pillar of value 1 at time 0 and flat-forward extrapolation past
//! the last pillar.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Day-count adjustment applied to float legs, `365.25 / 360`.
pub const DEFAULT_DAY_COUNT_FACTOR: f64 = 365.25 / 360.0;

/// How curve pillar values are quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveInput {
    /// Continuously compounded zero rates, converted via `df = exp(-r * t)`.
    ZeroRate,
    /// Discount factors taken as-is.
    DiscountFactor,
}

/// Shared pillar interpolation: linear in the log of the stored value,
/// anchored at `(0, 1)`, flat terminal slope beyond the last pillar.
#[derive(Debug, Clone, PartialEq)]
struct LogLinearCurve {
    /// Pillar times, always starting with 0.
    times: Vec<f64>,
    /// Log of the pillar values, always starting with 0.
    log_values: Vec<f64>,
}

impl LogLinearCurve {
    fn new(pillars: &[(f64, f64)], what: &str) -> Result<Self> {
        let mut times = Vec::with_capacity(pillars.len() + 1);
        let mut log_values = Vec::with_capacity(pillars.len() + 1);
        times.push(0.0);
        log_values.push(0.0);
        for &(t, v) in pillars {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{what} pillar ({t}, {v}) is not finite"
                )));
            }
            if t <= *times.last().unwrap() {
                return Err(Error::invalid(format!(
                    "{what} pillar times must be strictly increasing and positive, got {t}"
                )));
            }
            if v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{what} pillar value at t={t} must be strictly positive, got {v}"
                )));
            }
            times.push(t);
            log_values.push(v.ln());
        }
        Ok(Self { times, log_values })
    }

    /// Constant curve equal to 1 everywhere.
    fn unit() -> Self {
        Self {
            times: alloc::vec![0.0],
            log_values: alloc::vec![0.0],
        }
    }

    fn value(&self, t: f64) -> f64 {
        let n = self.times.len();
        let last = self.times[n - 1];
        if t >= last {
            // Flat continuation of the terminal instantaneous forward.
            if n == 1 {
                return 1.0;
            }
            let slope =
                (self.log_values[n - 1] - self.log_values[n - 2]) / (last - self.times[n - 2]);
            return (self.log_values[n - 1] + slope * (t - last)).exp();
        }
        // Binary search for the segment containing t.
        let hi = self.times.partition_point(|&p| p <= t);
        let lo = hi - 1;
        if self.times[lo] == t {
            return self.log_values[lo].exp();
        }
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        (self.log_values[lo] * (1.0 - w) + self.log_values[hi] * w).exp()
    }

    fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Zero-coupon bond prices `B(0, T)`, queryable at any maturity.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    inner: LogLinearCurve,
}

impl DiscountCurve {
    /// Build a curve from `(maturity, value)` pillars.
    ///
    /// Maturities must be strictly increasing and positive; zero rates are
    /// converted via `df = exp(-r * T)`. Interpolation is linear in
    /// `log B(0, T)` with flat-forward extrapolation beyond the last pillar.
    pub fn build(pillars: &[(f64, f64)], mode: CurveInput) -> Result<Self> {
        if pillars.is_empty() {
            return Err(Error::invalid("discount curve needs at least one pillar"));
        }
        let converted: Vec<(f64, f64)> = match mode {
            CurveInput::DiscountFactor => pillars.to_vec(),
            CurveInput::ZeroRate => pillars.iter().map(|&(t, r)| (t, (-r * t).exp())).collect(),
        };
        Ok(Self {
            inner: LogLinearCurve::new(&converted, "discount curve")?,
        })
    }

    /// Flat continuously compounded curve, `B(0, T) = exp(-rate * T)`,
    /// pinned out to `last_maturity`.
    pub fn flat(rate: f64, last_maturity: f64) -> Result<Self> {
        Self::build(&[(last_maturity, rate)], CurveInput::ZeroRate)
    }

    /// The discount factor `B(0, T)`. `B(0, 0) = 1` exactly.
    pub fn discount(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::invalid(format!(
                "discount factor requested at negative maturity {t}"
            )));
        }
        Ok(self.inner.value(t))
    }

    /// Largest pillar maturity; queries beyond it extrapolate.
    pub fn last_maturity(&self) -> f64 {
        self.inner.last_time()
    }
}

/// Deterministic multiplicative Libor-OIS spread factor
/// `S(t) = exp(-integral of s)` with `S(0) = 1`.
///
/// Pillars are `(time, spread_factor)` pairs, interpolated log-linearly like
/// a discount curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadCurve {
    inner: LogLinearCurve,
}

impl SpreadCurve {
    /// Build from `(time, spread_factor)` pillars; factors must be positive.
    pub fn new(pillars: &[(f64, f64)]) -> Result<Self> {
        Ok(Self {
            inner: LogLinearCurve::new(pillars, "spread curve")?,
        })
    }

    /// The unit spread `S(t) = 1` for all `t` (single-curve degenerate case).
    pub fn unit() -> Self {
        Self {
            inner: LogLinearCurve::unit(),
        }
    }

    /// The spread factor `S(t)`; `S(0) = 1` exactly.
    pub fn factor(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::invalid(format!(
                "spread factor requested at negative time {t}"
            )));
        }
        Ok(self.inner.value(t))
    }
}

/// Swaption contract terms: option expiry `T`, underlying swap tenor,
/// fixed-leg payment frequency, optional strike, and the float-leg
/// day-count factor `A`.
///
/// Payment times are `T_n = T + n / frequency` for `n = 1..=N` with
/// `N = tenor * frequency`. A strike of `None` means at-the-money; the
/// effective ATM level depends on the pricing convention.
#[derive(Debug, Clone, PartialEq)]
pub struct SwaptionSpec {
    expiry: f64,
    tenor: f64,
    frequency: u32,
    n_payments: usize,
    strike: Option<f64>,
    day_count_factor: f64,
}

impl SwaptionSpec {
    /// Create a spec with the default day-count factor
    /// [`DEFAULT_DAY_COUNT_FACTOR`] and an ATM strike.
    ///
    /// `tenor * frequency` must be integral: every payment period has the
    /// same length `1 / frequency`.
    pub fn new(expiry: f64, tenor: f64, frequency: u32) -> Result<Self> {
        if expiry <= 0.0 || !expiry.is_finite() {
            return Err(Error::invalid(format!("expiry must be positive, got {expiry}")));
        }
        if tenor <= 0.0 || !tenor.is_finite() {
            return Err(Error::invalid(format!("tenor must be positive, got {tenor}")));
        }
        if frequency == 0 {
            return Err(Error::invalid("payment frequency must be at least 1"));
        }
        let n_exact = tenor * f64::from(frequency);
        let n = n_exact.round();
        if (n_exact - n).abs() > 1e-9 || n < 1.0 {
            return Err(Error::invalid(format!(
                "tenor * frequency must be a positive integer, got {n_exact}"
            )));
        }
        Ok(Self {
            expiry,
            tenor,
            frequency,
            n_payments: n as usize,
            strike: None,
            day_count_factor: DEFAULT_DAY_COUNT_FACTOR,
        })
    }

    /// Replace the day-count factor (`1.0` disables the float-leg adjustment).
    pub fn with_day_count(mut self, a: f64) -> Result<Self> {
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::invalid(format!(
                "day-count factor must be positive, got {a}"
            )));
        }
        self.day_count_factor = a;
        Ok(self)
    }

    /// Fix an explicit strike instead of the ATM level.
    pub fn with_strike(mut self, strike: f64) -> Self {
        self.strike = Some(strike);
        self
    }

    /// Option expiry `T`.
    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    /// Underlying swap tenor in years.
    pub fn tenor(&self) -> f64 {
        self.tenor
    }

    /// Fixed-leg payments per year.
    pub fn frequency(&self) -> u32 {
        self.frequency
    }

    /// Number of payments `N = tenor * frequency`.
    pub fn n_payments(&self) -> usize {
        self.n_payments
    }

    /// Explicit strike, if one was set.
    pub fn strike(&self) -> Option<f64> {
        self.strike
    }

    /// Float-leg day-count factor `A`.
    pub fn day_count_factor(&self) -> f64 {
        self.day_count_factor
    }

    /// Payment time `T_n = T + n / frequency`; `payment_time(0)` is the
    /// expiry itself.
    pub fn payment_time(&self, n: usize) -> f64 {
        self.expiry + n as f64 / f64::from(self.frequency)
    }

    /// Final payment time `T_N = T + tenor`.
    pub fn maturity(&self) -> f64 {
        self.payment_time(self.n_payments)
    }

    /// All payment times `T_1 ..= T_N`.
    pub fn payment_times(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n_payments).map(|n| self.payment_time(n))
    }

    pub(crate) fn describe(&self) -> String {
        format!("{}y into {}y", self.expiry, self.tenor)
    }
}

/// Fixed-leg annuity `(1/freq) * sum of B(0, T_n)`, per unit notional and
/// unit rate.
pub fn annuity(curve: &DiscountCurve, spec: &SwaptionSpec) -> Result<f64> {
    let mut sum = 0.0;
    for t in spec.payment_times() {
        sum += curve.discount(t)?;
    }
    Ok(sum / f64::from(spec.frequency()))
}

/// Par swap rate `(B(0, T) - B(0, T_N)) / annuity`: the fixed rate at which
/// the swap has zero initial value.
pub fn swap_rate(curve: &DiscountCurve, spec: &SwaptionSpec) -> Result<f64> {
    let a = annuity(curve, spec)?;
    if a.is_nan() || a <= 0.0 {
        return Err(Error::numerical(format!(
            "annuity must be positive to quote a swap rate, got {a}"
        )));
    }
    Ok((curve.discount(spec.expiry())? - curve.discount(spec.maturity())?) / a)
}

/// ATM strike under OIS discounting with a deterministic Libor-OIS spread:
///
/// ```text
/// r_ATM = A * freq * sum_n [B(0,T_{n-1}) * S(T_{n-1}) / S(T_n) - B(0,T_n)]
///                  / sum_n B(0,T_n)
/// ```
///
/// With `S = 1` and `A = 1` the numerator telescopes and this reduces to
/// [`swap_rate`].
pub fn atm_strike_dual(
    curve: &DiscountCurve,
    spread: &SpreadCurve,
    spec: &SwaptionSpec,
) -> Result<f64> {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for n in 1..=spec.n_payments() {
        let t_prev = spec.payment_time(n - 1);
        let t_n = spec.payment_time(n);
        let b_prev = curve.discount(t_prev)?;
        let b_n = curve.discount(t_n)?;
        numerator += b_prev * spread.factor(t_prev)? / spread.factor(t_n)? - b_n;
        denominator += b_n;
    }
    if denominator <= 0.0 {
        return Err(Error::numerical("ATM strike denominator vanished"));
    }
    Ok(spec.day_count_factor() * f64::from(spec.frequency()) * numerator / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_rate_curve() -> DiscountCurve {
        DiscountCurve::build(&[(1.0, 0.0), (10.0, 0.0)], CurveInput::ZeroRate).unwrap()
    }

    fn flat_2pct() -> DiscountCurve {
        let pillars: Vec<(f64, f64)> = (1..=80).map(|i| (i as f64 * 0.5, 0.02)).collect();
        DiscountCurve::build(&pillars, CurveInput::ZeroRate).unwrap()
    }

    #[test]
    fn zero_rate_curve_discounts_to_one() {
        let c = zero_rate_curve();
        assert_eq!(c.discount(0.0).unwrap(), 1.0);
        assert_eq!(c.discount(17.3).unwrap(), 1.0);
    }

    #[test]
    fn log_linear_midpoint() {
        let c =
            DiscountCurve::build(&[(1.0, 0.98), (2.0, 0.95)], CurveInput::DiscountFactor).unwrap();
        let expected = ((0.98f64.ln() + 0.95f64.ln()) / 2.0).exp();
        assert_abs_diff_eq!(c.discount(1.5).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn flat_curve_matches_exponential_oracle() {
        let c = flat_2pct();
        assert_abs_diff_eq!(
            c.discount(7.25).unwrap(),
            (-0.02f64 * 7.25).exp(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(c.discount(5.0).unwrap(), (-0.1f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn extrapolation_is_flat_forward() {
        let c =
            DiscountCurve::build(&[(1.0, 0.98), (2.0, 0.95)], CurveInput::DiscountFactor).unwrap();
        // Terminal forward over [1, 2] is ln(0.98/0.95).
        let fwd = (0.98f64 / 0.95).ln();
        let expected = 0.95 * (-fwd * 3.0).exp();
        assert_abs_diff_eq!(c.discount(5.0).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_pillars() {
        assert!(DiscountCurve::build(&[], CurveInput::ZeroRate).is_err());
        assert!(
            DiscountCurve::build(&[(2.0, 0.9), (1.0, 0.95)], CurveInput::DiscountFactor).is_err()
        );
        assert!(DiscountCurve::build(&[(1.0, 0.0)], CurveInput::DiscountFactor).is_err());
        assert!(DiscountCurve::build(&[(1.0, -0.5)], CurveInput::DiscountFactor).is_err());
        assert!(DiscountCurve::build(&[(1.0, f64::NAN)], CurveInput::ZeroRate).is_err());
        assert!(DiscountCurve::build(&[(-1.0, 0.02)], CurveInput::ZeroRate).is_err());
    }

    #[test]
    fn rejects_negative_query() {
        assert!(zero_rate_curve().discount(-0.5).is_err());
    }

    #[test]
    fn spec_validates_payment_count() {
        let s = SwaptionSpec::new(5.0, 10.0, 2).unwrap();
        assert_eq!(s.n_payments(), 20);
        assert_abs_diff_eq!(s.maturity(), 15.0, epsilon = 1e-12);
        assert!(SwaptionSpec::new(1.0, 0.75, 2).is_err());
        assert!(SwaptionSpec::new(0.0, 1.0, 2).is_err());
        assert!(SwaptionSpec::new(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn annuity_on_zero_rate_curve() {
        let c = zero_rate_curve();
        let s = SwaptionSpec::new(1.0, 1.0, 2).unwrap();
        assert_abs_diff_eq!(annuity(&c, &s).unwrap(), 1.0, epsilon = 1e-15);
        let s = SwaptionSpec::new(5.0, 10.0, 2).unwrap();
        assert_abs_diff_eq!(annuity(&c, &s).unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn annuity_matches_direct_sum() {
        let c = flat_2pct();
        let s = SwaptionSpec::new(1.0, 1.0, 2).unwrap();
        let expected = 0.5 * ((-0.03f64).exp() + (-0.04f64).exp());
        assert_abs_diff_eq!(annuity(&c, &s).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn swap_rate_zero_on_flat_unit_curve() {
        let c = zero_rate_curve();
        let s = SwaptionSpec::new(3.0, 7.0, 2).unwrap();
        assert_abs_diff_eq!(swap_rate(&c, &s).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn swap_rate_matches_direct_evaluation() {
        let c = flat_2pct();
        let s = SwaptionSpec::new(1.0, 1.0, 2).unwrap();
        let expected = ((-0.02f64).exp() - (-0.04f64).exp())
            / (0.5 * ((-0.03f64).exp() + (-0.04f64).exp()));
        assert_abs_diff_eq!(swap_rate(&c, &s).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn swap_rate_hand_arithmetic() {
        let c = DiscountCurve::build(
            &[(1.0, 0.99), (1.5, 0.985), (2.0, 0.98)],
            CurveInput::DiscountFactor,
        )
        .unwrap();
        let s = SwaptionSpec::new(1.0, 1.0, 2).unwrap();
        assert_abs_diff_eq!(
            swap_rate(&c, &s).unwrap(),
            0.01 / (0.5 * 1.965),
            epsilon = 1e-14
        );
    }

    #[test]
    fn spread_curve_unit_and_pillars() {
        let s = SpreadCurve::unit();
        assert_eq!(s.factor(0.0).unwrap(), 1.0);
        assert_eq!(s.factor(12.0).unwrap(), 1.0);

        let s = SpreadCurve::new(&[(1.0, 0.999), (5.0, 0.995)]).unwrap();
        assert_eq!(s.factor(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(s.factor(1.0).unwrap(), 0.999, epsilon = 1e-15);
        assert!(SpreadCurve::new(&[(1.0, -0.1)]).is_err());
    }

    #[test]
    fn atm_strike_dual_telescopes_to_swap_rate() {
        let c = flat_2pct();
        let spread = SpreadCurve::unit();
        for (expiry, tenor) in [(1.0, 1.0), (2.0, 5.0), (5.0, 10.0)] {
            let s = SwaptionSpec::new(expiry, tenor, 2)
                .unwrap()
                .with_day_count(1.0)
                .unwrap();
            let dual = atm_strike_dual(&c, &spread, &s).unwrap();
            let single = swap_rate(&c, &s).unwrap();
            assert_abs_diff_eq!(dual, single, epsilon = 1e-14);
        }
    }

    #[test]
    fn atm_strike_dual_zero_on_unit_curve() {
        let c = zero_rate_curve();
        let s = SwaptionSpec::new(1.0, 2.0, 2).unwrap(); // default A = 365.25/360
        let strike = atm_strike_dual(&c, &SpreadCurve::unit(), &s).unwrap();
        assert_abs_diff_eq!(strike, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn atm_strike_dual_matches_brute_force_sum() {
        let c = flat_2pct();
        let spread_pillars: Vec<(f64, f64)> =
            (1..=10).map(|i| (i as f64, (-0.001 * i as f64).exp())).collect();
        let spread = SpreadCurve::new(&spread_pillars).unwrap();
        let s = SwaptionSpec::new(1.0, 2.0, 2).unwrap();

        // Independent direct summation of the defining formula.
        let a = DEFAULT_DAY_COUNT_FACTOR;
        let times = [1.0, 1.5, 2.0, 2.5, 3.0];
        let mut num = 0.0;
        let mut den = 0.0;
        for n in 1..=4usize {
            let b_prev = (-0.02 * times[n - 1]).exp();
            let b_n = (-0.02f64 * times[n]).exp();
            let s_prev = (-0.001 * times[n - 1]).exp();
            let s_n = (-0.001f64 * times[n]).exp();
            num += b_prev * s_prev / s_n - b_n;
            den += b_n;
        }
        let expected = a * 2.0 * num / den;
        assert_abs_diff_eq!(
            atm_strike_dual(&c, &spread, &s).unwrap(),
            expected,
            epsilon = 1e-13
        );
    }

    #[test]
    fn swap_contract_parity_at_par() {
        // Value of the swap at its par rate is zero: B(0,T) - B(0,T_N) - (r/v) * sum B.
        let c = flat_2pct();
        for (expiry, tenor, freq) in [(1.0, 1.0, 2u32), (2.0, 5.0, 1), (5.0, 10.0, 2)] {
            let s = SwaptionSpec::new(expiry, tenor, freq).unwrap();
            let r = swap_rate(&c, &s).unwrap();
            let val = c.discount(s.expiry()).unwrap()
                - c.discount(s.maturity()).unwrap()
                - r * annuity(&c, &s).unwrap();
            assert_abs_diff_eq!(val, 0.0, epsilon = 1e-14);
        }
    }
}
