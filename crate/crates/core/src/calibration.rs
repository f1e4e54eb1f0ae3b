//! Nonparametric bootstrap of the forward-volatility surface from ATM
//! swaption quotes.
//!
//! The surface is regularized into calendar-time buckets: all columns
//! between two consecutive quoted expiries share one maturity profile, and
//! cells never covered by any quote stay at zero. Quotes are processed by
//! ascending expiry, then ascending tenor. Each quote pins one new maturity
//! segment of its expiry's bucket: because the segment value enters `v(t, N)`
//! linearly, the quote's total variance is a quadratic in the unknown, solved
//! in closed form for its smallest nonnegative root. The first solved segment
//! of a bucket also fills the shorter maturities below it (the short end of
//! the profile is flat).
//!
//! A quote whose quadratic has no real root, or only negative roots, cannot
//! be reproduced by any nonnegative volatility segment. It is skipped and
//! reported as an [`ArbitrageFlag`]; [`arb_scan`] additionally searches for
//! neighboring expiries whose exclusion restores feasibility.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;

use crate::curves::{annuity, DiscountCurve, SpreadCurve, SwaptionSpec};
use crate::error::{Error, Result};
use crate::pricer::{atm_price, atm_strike, weights_for, Convention, VarianceWeights};
use crate::spline::NaturalCubicSpline;
use crate::surface::{grid_index, ForwardVolSurface};

/// Tolerance for matching two quotes' expiries or tenors, in years.
const TIME_EPS: f64 = 1e-9;

/// An ATM swaption quote: normal (Bachelier) implied volatility for one
/// expiry/tenor cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwaptionQuote {
    /// Option expiry in years.
    pub expiry: f64,
    /// Underlying swap tenor in years.
    pub tenor: f64,
    /// Normal IV in absolute rate units per sqrt-year.
    pub normal_iv: f64,
    /// Calibration weight (carried, unused by the algebraic bootstrap).
    pub weight: f64,
    /// Excluded quotes take no part in the calibration.
    pub excluded: bool,
    /// Marks spline-interpolated synthetic quotes.
    pub filled: bool,
}

impl SwaptionQuote {
    /// Market quote with unit weight.
    pub fn new(expiry: f64, tenor: f64, normal_iv: f64) -> Self {
        Self {
            expiry,
            tenor,
            normal_iv,
            weight: 1.0,
            excluded: false,
            filled: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.expiry <= 0.0 || !self.expiry.is_finite() {
            return Err(Error::invalid(format!(
                "quote expiry must be positive, got {}",
                self.expiry
            )));
        }
        if self.tenor <= 0.0 || !self.tenor.is_finite() {
            return Err(Error::invalid(format!(
                "quote tenor must be positive, got {}",
                self.tenor
            )));
        }
        if self.normal_iv < 0.0 || !self.normal_iv.is_finite() {
            return Err(Error::invalid(format!(
                "quote normal IV must be nonnegative, got {}",
                self.normal_iv
            )));
        }
        Ok(())
    }
}

/// Why a quote could not be fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FlagKind {
    /// Both quadratic roots are negative: the quote demands less total
    /// variance than the already-fixed surface cells produce.
    NegativeStepVariance,
    /// The quadratic's discriminant is negative: no real segment value
    /// reaches the quoted variance.
    NoRealRoot,
}

/// A quote the bootstrap could not reproduce with a nonnegative real
/// volatility segment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArbitrageFlag {
    /// Expiry of the offending quote.
    pub expiry: f64,
    /// Tenor of the offending quote.
    pub tenor: f64,
    /// Failure mode of the quadratic solve.
    pub kind: FlagKind,
    /// The negative discriminant ([`FlagKind::NoRealRoot`]) or the negative
    /// required variance step ([`FlagKind::NegativeStepVariance`]).
    pub detail: f64,
    /// Neighboring quoted expiries whose removal restores feasibility;
    /// populated by [`arb_scan`].
    pub suggested_exclusions: Vec<f64>,
}

impl ArbitrageFlag {
    fn matches(&self, expiry: f64, tenor: f64) -> bool {
        (self.expiry - expiry).abs() <= TIME_EPS && (self.tenor - tenor).abs() <= TIME_EPS
    }
}

/// Market-vs-model comparison for one quote after calibration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuoteResidual {
    /// Option expiry in years.
    pub expiry: f64,
    /// Underlying swap tenor in years.
    pub tenor: f64,
    /// Quoted normal IV.
    pub market_iv: f64,
    /// Repriced normal IV off the calibrated surface.
    pub model_iv: f64,
    /// `model_iv - market_iv`.
    pub diff: f64,
    /// Residual of a flagged quote; not binding for the fit tolerance.
    pub flagged: bool,
    /// Residual of a spline-filled synthetic quote.
    pub filled: bool,
}

/// Bootstrap parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationConfig {
    /// Surface grid step in years.
    pub dt: f64,
    /// Fixed-leg payment frequency of the underlying swaps.
    pub frequency: u32,
    /// Float-leg day-count factor `A`.
    pub day_count_factor: f64,
    /// Tenors to cover at every quoted expiry; missing ones are
    /// spline-filled when `tenor_fill` is on.
    pub target_tenors: Vec<f64>,
    /// Spline-interpolate missing target tenors before bootstrapping.
    pub tenor_fill: bool,
    /// Relative IV tolerance a non-flagged quote must reprice within.
    pub fit_tolerance: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            frequency: 2,
            day_count_factor: 1.0,
            target_tenors: vec![1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            tenor_fill: true,
            fit_tolerance: 1e-8,
        }
    }
}

impl CalibrationConfig {
    fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.frequency == 0 {
            return Err(Error::invalid("payment frequency must be at least 1"));
        }
        if self.day_count_factor.is_nan() || self.day_count_factor <= 0.0 {
            return Err(Error::invalid("day-count factor must be positive"));
        }
        if self.fit_tolerance.is_nan() || self.fit_tolerance <= 0.0 {
            return Err(Error::invalid("fit tolerance must be positive"));
        }
        Ok(())
    }

    fn spec_for(&self, expiry: f64, tenor: f64) -> Result<SwaptionSpec> {
        SwaptionSpec::new(expiry, tenor, self.frequency)?.with_day_count(self.day_count_factor)
    }
}

/// Calibration output: the fitted surface plus fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    /// The bootstrapped forward-volatility surface.
    pub surface: ForwardVolSurface,
    /// Market-vs-model residuals for every participating quote.
    pub residuals: Vec<QuoteResidual>,
    /// Quotes that could not be fit.
    pub flags: Vec<ArbitrageFlag>,
    /// Synthetic quotes added by the tenor fill.
    pub filled_quotes: Vec<SwaptionQuote>,
}

impl CalibrationReport {
    /// Largest absolute relative residual over non-flagged quotes with a
    /// nonzero IV (0 when there are none). Spline-filled quotes count: they
    /// are solved constraints like any other.
    pub fn max_relative_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| !r.flagged && r.market_iv > 0.0)
            .map(|r| (r.diff / r.market_iv).abs())
            .fold(0.0, f64::max)
    }
}

/// Spline-fill the missing `target_tenors` at one expiry from the quotes
/// present there.
///
/// Uses a natural cubic spline of normal IV over tenor (two points
/// degenerate to a straight line, one point to a constant) with flat
/// extrapolation outside the quoted range. Spline values are floored at
/// zero. Returned quotes are marked [`SwaptionQuote::filled`].
pub fn tenor_fill(
    quotes: &[SwaptionQuote],
    expiry: f64,
    target_tenors: &[f64],
) -> Result<Vec<SwaptionQuote>> {
    let mut at_expiry: Vec<&SwaptionQuote> = quotes
        .iter()
        .filter(|q| !q.excluded && (q.expiry - expiry).abs() <= TIME_EPS)
        .collect();
    if at_expiry.is_empty() {
        return Err(Error::invalid(format!("no quotes at expiry {expiry}")));
    }
    at_expiry.sort_by(|a, b| a.tenor.partial_cmp(&b.tenor).unwrap());

    let missing: Vec<f64> = target_tenors
        .iter()
        .copied()
        .filter(|&t| !at_expiry.iter().any(|q| (q.tenor - t).abs() <= TIME_EPS))
        .collect();
    if missing.is_empty() {
        return Ok(Vec::new());
    }

    let fill_value: alloc::boxed::Box<dyn Fn(f64) -> f64> = if at_expiry.len() == 1 {
        let iv = at_expiry[0].normal_iv;
        alloc::boxed::Box::new(move |_| iv)
    } else {
        let spline = NaturalCubicSpline::new(
            at_expiry.iter().map(|q| q.tenor).collect(),
            at_expiry.iter().map(|q| q.normal_iv).collect(),
        )?;
        alloc::boxed::Box::new(move |t| spline.eval_clamped(t).max(0.0))
    };

    Ok(missing
        .into_iter()
        .map(|tenor| SwaptionQuote {
            filled: true,
            ..SwaptionQuote::new(expiry, tenor, fill_value(tenor))
        })
        .collect())
}

/// Quadratic coefficients `(a, b, c0)` of the total-variance map
/// `x -> sum_i v_i(x)^2 dt` when the unknown `x` fills the cells
/// `[max(i, seg_lo), seg_hi)` of the bucket columns (`seg_lo = None` means
/// the wedge from each column's diagonal, the short-end flat extension).
fn quote_quadratic(
    surface: &ForwardVolSurface,
    weights: &VarianceWeights,
    bucket: Range<usize>,
    seg_lo: Option<usize>,
    seg_hi: usize,
) -> Result<(f64, f64, f64)> {
    let dt = surface.dt();
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c0 = 0.0;
    for i in 0..weights.expiry_index() {
        let p = weights.eval(surface, i)?;
        c0 += p * p * dt;
        if bucket.contains(&i) {
            let lo = seg_lo.unwrap_or(i).max(i);
            let q = weights.eval_indicator(i, lo, seg_hi, dt);
            a += q * q * dt;
            b += 2.0 * p * q * dt;
        }
    }
    Ok((a, b, c0))
}

enum SolveOutcome {
    Root(f64),
    Infeasible(FlagKind, f64),
}

/// Smallest nonnegative root of `a x^2 + b x + c0 = v_mkt`.
fn solve_step(a: f64, b: f64, c0: f64, v_mkt: f64) -> SolveOutcome {
    const ROOT_EPS: f64 = 1e-12;
    let c = c0 - v_mkt;
    if a <= 0.0 {
        // No quadratic term: the unknown segment does not reach any cashflow.
        if b.abs() <= f64::EPSILON {
            return if c.abs() <= f64::EPSILON {
                SolveOutcome::Root(0.0)
            } else {
                SolveOutcome::Infeasible(FlagKind::NoRealRoot, -c)
            };
        }
        let x = -c / b;
        return if x >= -ROOT_EPS {
            SolveOutcome::Root(x.max(0.0))
        } else {
            SolveOutcome::Infeasible(FlagKind::NegativeStepVariance, v_mkt - c0)
        };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return SolveOutcome::Infeasible(FlagKind::NoRealRoot, disc);
    }
    // Numerically stable root pair.
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / a, c / q)
    };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if lo >= -ROOT_EPS {
        SolveOutcome::Root(lo.max(0.0))
    } else if hi >= -ROOT_EPS {
        SolveOutcome::Root(hi.max(0.0))
    } else {
        SolveOutcome::Infeasible(FlagKind::NegativeStepVariance, v_mkt - c0)
    }
}

/// One expiry's quotes, sorted by tenor.
struct ExpiryGroup {
    expiry: f64,
    expiry_index: usize,
    quotes: Vec<SwaptionQuote>,
}

fn group_by_expiry(quotes: &[SwaptionQuote], dt: f64) -> Result<Vec<ExpiryGroup>> {
    let mut active: Vec<SwaptionQuote> =
        quotes.iter().filter(|q| !q.excluded).cloned().collect();
    if active.is_empty() {
        return Err(Error::invalid("no usable quotes to calibrate"));
    }
    for q in &active {
        q.validate()?;
    }
    active.sort_by(|x, y| {
        (x.expiry, x.tenor)
            .partial_cmp(&(y.expiry, y.tenor))
            .unwrap()
    });

    let mut groups: Vec<ExpiryGroup> = Vec::new();
    for q in active {
        match groups.last_mut() {
            Some(g) if (g.expiry - q.expiry).abs() <= TIME_EPS => {
                if let Some(prev) = g.quotes.last() {
                    if (prev.tenor - q.tenor).abs() <= TIME_EPS {
                        return Err(Error::invalid(format!(
                            "duplicate quote at expiry {} tenor {}",
                            q.expiry, q.tenor
                        )));
                    }
                }
                g.quotes.push(q);
            }
            _ => {
                let expiry_index = grid_index(q.expiry, dt, "quote expiry")?;
                if expiry_index == 0 {
                    return Err(Error::grid(format!(
                        "quote expiry {} must be at least one grid step out",
                        q.expiry
                    )));
                }
                groups.push(ExpiryGroup {
                    expiry: q.expiry,
                    expiry_index,
                    quotes: vec![q],
                });
            }
        }
    }
    Ok(groups)
}

/// Bootstrap the surface from a quote grid.
///
/// Runs the tenor fill (when enabled), then the sequential expiry-by-expiry,
/// tenor-by-tenor solve described in the module docs, and finally reprices
/// every quote off the fitted surface. Infeasible quotes are skipped and
/// flagged; the calibration itself still completes.
pub fn bootstrap_surface(
    quotes: &[SwaptionQuote],
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    convention: Convention,
    config: &CalibrationConfig,
) -> Result<CalibrationReport> {
    config.validate()?;
    let dt = config.dt;
    let mut groups = group_by_expiry(quotes, dt)?;

    // Spline-fill missing target tenors at each quoted expiry.
    let mut filled_quotes = Vec::new();
    if config.tenor_fill {
        for g in &mut groups {
            let filled = tenor_fill(&g.quotes, g.expiry, &config.target_tenors)?;
            for q in &filled {
                config.spec_for(q.expiry, q.tenor)?;
            }
            g.quotes.extend(filled.iter().cloned());
            g.quotes
                .sort_by(|x, y| x.tenor.partial_cmp(&y.tenor).unwrap());
            filled_quotes.extend(filled);
        }
    }

    // Grid coverage: the longest expiry-plus-tenor maturity.
    let mut max_index = 0usize;
    for g in &groups {
        for q in &g.quotes {
            let spec = config.spec_for(q.expiry, q.tenor)?;
            max_index = max_index.max(grid_index(spec.maturity(), dt, "quote maturity")?);
        }
    }

    let mut surface = ForwardVolSurface::zeros(dt, max_index)?;
    let mut flags: Vec<ArbitrageFlag> = Vec::new();

    let mut bucket_start = 0usize;
    for g in &groups {
        let bucket = bucket_start..g.expiry_index;
        let mut fixed_up_to: Option<usize> = None;
        for q in &g.quotes {
            let spec = config.spec_for(q.expiry, q.tenor)?;
            let strike = atm_strike(curve, spread, &spec, convention)?;
            let weights = weights_for(curve, spread, &spec, strike, convention, dt)?;
            let seg_hi = grid_index(spec.maturity(), dt, "quote maturity")?;
            let ann = annuity(curve, &spec)?;
            let v_mkt = (ann * q.normal_iv).powi(2) * q.expiry;

            let (a, b, c0) =
                quote_quadratic(&surface, &weights, bucket.clone(), fixed_up_to, seg_hi)?;
            match solve_step(a, b, c0, v_mkt) {
                SolveOutcome::Root(x) => {
                    for i in bucket.clone() {
                        let lo = fixed_up_to.unwrap_or(i).max(i);
                        for j in lo..seg_hi {
                            surface.set(i, j, x)?;
                        }
                    }
                    fixed_up_to = Some(seg_hi);
                }
                SolveOutcome::Infeasible(kind, detail) => {
                    flags.push(ArbitrageFlag {
                        expiry: q.expiry,
                        tenor: q.tenor,
                        kind,
                        detail,
                        suggested_exclusions: Vec::new(),
                    });
                }
            }
        }
        bucket_start = g.expiry_index;
    }

    let all_quotes: Vec<SwaptionQuote> =
        groups.into_iter().flat_map(|g| g.quotes).collect();
    let residuals = reprice_quotes(
        &surface,
        &all_quotes,
        curve,
        spread,
        convention,
        config,
        &flags,
    )?;

    Ok(CalibrationReport {
        surface,
        residuals,
        flags,
        filled_quotes,
    })
}

/// Reprice quotes off a calibrated surface and report residuals.
///
/// `flags` marks the residuals of quotes the calibration skipped; pass an
/// empty slice when repricing against an externally supplied surface.
#[allow(clippy::too_many_arguments)]
pub fn reprice_quotes(
    surface: &ForwardVolSurface,
    quotes: &[SwaptionQuote],
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    convention: Convention,
    config: &CalibrationConfig,
    flags: &[ArbitrageFlag],
) -> Result<Vec<QuoteResidual>> {
    let mut residuals = Vec::with_capacity(quotes.len());
    for q in quotes.iter().filter(|q| !q.excluded) {
        let spec = config.spec_for(q.expiry, q.tenor)?;
        let model_iv = atm_price(surface, curve, spread, &spec, convention)?.normal_iv;
        residuals.push(QuoteResidual {
            expiry: q.expiry,
            tenor: q.tenor,
            market_iv: q.normal_iv,
            model_iv,
            diff: model_iv - q.normal_iv,
            flagged: flags.iter().any(|f| f.matches(q.expiry, q.tenor)),
            filled: q.filled,
        });
    }
    Ok(residuals)
}

/// Run the bootstrap and return only its arbitrage flags, each with the
/// neighboring quoted expiries whose exclusion clears it.
pub fn arb_scan(
    quotes: &[SwaptionQuote],
    curve: &DiscountCurve,
    spread: Option<&SpreadCurve>,
    convention: Convention,
    config: &CalibrationConfig,
) -> Result<Vec<ArbitrageFlag>> {
    let report = bootstrap_surface(quotes, curve, spread, convention, config)?;
    let mut flags = report.flags;
    if flags.is_empty() {
        return Ok(flags);
    }

    let mut quoted_expiries: Vec<f64> = Vec::new();
    for q in quotes.iter().filter(|q| !q.excluded) {
        if !quoted_expiries.iter().any(|&e| (e - q.expiry).abs() <= TIME_EPS) {
            quoted_expiries.push(q.expiry);
        }
    }
    quoted_expiries.sort_by(|a, b| a.partial_cmp(b).unwrap());

    for flag in &mut flags {
        let pos = quoted_expiries
            .iter()
            .position(|&e| (e - flag.expiry).abs() <= TIME_EPS)
            .expect("flagged expiry is quoted");
        let mut candidates = Vec::new();
        if pos > 0 {
            candidates.push(quoted_expiries[pos - 1]);
        }
        if pos + 1 < quoted_expiries.len() {
            candidates.push(quoted_expiries[pos + 1]);
        }
        for candidate in candidates {
            let retried: Vec<SwaptionQuote> = quotes
                .iter()
                .map(|q| {
                    let mut q = q.clone();
                    if (q.expiry - candidate).abs() <= TIME_EPS {
                        q.excluded = true;
                    }
                    q
                })
                .collect();
            let rerun = bootstrap_surface(&retried, curve, spread, convention, config)?;
            if !rerun.flags.iter().any(|f| f.matches(flag.expiry, flag.tenor)) {
                flag.suggested_exclusions.push(candidate);
            }
        }
    }
    Ok(flags)
}
