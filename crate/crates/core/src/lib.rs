//! One-factor forward-rate model toolkit for ATM interest-rate swaptions.
//!
//! The model evolves the whole instantaneous forward curve `f(t, T)` with a
//! deterministic volatility surface `sigma(t, T)` and the no-arbitrage drift
//! it implies. In the small-volatility limit the ATM swaption value has a
//! closed form: the discounted swap value at expiry is Gaussian with an
//! aggregate standard deviation assembled from the surface, and the option
//! is worth `Sigma(T, N) * sqrt(T / 2 pi)`. This crate provides
//!
//! - [`curves`]: discount and Libor-OIS spread curves, par swap rates,
//!   annuities, and the dual-curve ATM strike;
//! - [`surface`]: the piecewise-constant forward-volatility grid;
//! - [`pricer`]: the closed-form ATM price and Bachelier normal IV, for
//!   single-curve and OIS dual-curve conventions;
//! - [`mc`]: an independent Euler Monte-Carlo engine used to validate the
//!   closed form, with a built-in discounted-bond martingale check;
//! - [`calibration`]: nonparametric bootstrap of the surface from an ATM
//!   quote grid, with spline tenor-fill and arbitrage flagging.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the companion CLI
//! crate carries file formats and IO.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod calibration;
pub mod curves;
pub mod error;
pub mod mc;
pub mod pricer;
pub mod spline;
pub mod surface;

pub use calibration::{
    arb_scan, bootstrap_surface, reprice_quotes, tenor_fill, ArbitrageFlag, CalibrationConfig,
    CalibrationReport, FlagKind, QuoteResidual, SwaptionQuote,
};
pub use curves::{
    annuity, atm_strike_dual, swap_rate, CurveInput, DiscountCurve, SpreadCurve, SwaptionSpec,
    DEFAULT_DAY_COUNT_FACTOR,
};
pub use error::{Error, Result};
pub use mc::{
    drift, euler_step, martingale_check, price_swaption_mc, ForwardCurveState, MartingaleCheck,
    McConfig, McResult, NORMAL_SAMPLER,
};
pub use pricer::{atm_price, atm_strike, sigma_total, v_dual, v_single, Convention, PriceResult};
pub use surface::{grid_index, ForwardVolSurface, GRID_TOLERANCE};
