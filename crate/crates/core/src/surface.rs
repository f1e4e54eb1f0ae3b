//! Piecewise-constant one-factor forward-volatility surface on a regular
//! time grid.
//!
//! `sigma(t, tau)` is stored as a triangular grid `sigma[i][j]` for calendar
//! index `i` and maturity index `j >= i`, constant on each cell
//! `[t_i, t_i + dt) x [t_j, t_j + dt)` with `t_k = k * dt`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Absolute tolerance (in years) when snapping a time onto the grid.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// Map a year-fraction onto its grid index `t / dt`, rejecting times more
/// than [`GRID_TOLERANCE`] years off the grid.
pub fn grid_index(t: f64, dt: f64, what: &str) -> Result<usize> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::invalid(format!("grid step must be positive, got {dt}")));
    }
    if !t.is_finite() || t < -GRID_TOLERANCE {
        return Err(Error::grid(format!("{what} {t} is not a valid grid time")));
    }
    let idx = (t / dt).round();
    if (t - idx * dt).abs() > GRID_TOLERANCE {
        return Err(Error::grid(format!(
            "{what} {t} is not a multiple of dt = {dt}"
        )));
    }
    Ok(idx as usize)
}

/// Deterministic forward-rate volatility grid.
///
/// Entries are conventionally nonnegative (the one-factor shock absorbs the
/// sign); negative entries are accepted and leave aggregate variances
/// unchanged, since the volatility only ever enters them squared.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardVolSurface {
    dt: f64,
    max_index: usize,
    /// Row-packed triangle: row `i` holds `sigma[i][i..max_index]`.
    vols: Vec<f64>,
}

impl ForwardVolSurface {
    /// All-zero surface covering maturity indices `0..max_index`.
    pub fn zeros(dt: f64, max_index: usize) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::invalid(format!("grid step must be positive, got {dt}")));
        }
        if max_index == 0 {
            return Err(Error::invalid("surface needs at least one grid cell"));
        }
        Ok(Self {
            dt,
            max_index,
            vols: vec![0.0; max_index * (max_index + 1) / 2],
        })
    }

    /// Surface with every cell set to `sigma`.
    pub fn constant(dt: f64, max_index: usize, sigma: f64) -> Result<Self> {
        let mut s = Self::zeros(dt, max_index)?;
        if !sigma.is_finite() {
            return Err(Error::invalid(format!("volatility must be finite, got {sigma}")));
        }
        s.vols.fill(sigma);
        Ok(s)
    }

    /// Surface built cell-by-cell from `f(i, j)`.
    pub fn from_fn(dt: f64, max_index: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut s = Self::zeros(dt, max_index)?;
        for i in 0..max_index {
            for j in i..max_index {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "volatility at ({i}, {j}) must be finite, got {v}"
                    )));
                }
                s.set(i, j, v)?;
            }
        }
        Ok(s)
    }

    /// Grid step in years.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One past the largest valid maturity index.
    pub fn max_index(&self) -> usize {
        self.max_index
    }

    fn offset(&self, i: usize, j: usize) -> Result<usize> {
        if i > j || j >= self.max_index {
            return Err(Error::grid(format!(
                "surface index ({i}, {j}) outside triangle with max_index {}",
                self.max_index
            )));
        }
        Ok(i * self.max_index - i * (i + 1) / 2 + j)
    }

    /// Cell value `sigma[i][j]`; requires `i <= j < max_index`.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.vols[self.offset(i, j)?])
    }

    /// Overwrite cell `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::invalid(format!(
                "volatility at ({i}, {j}) must be finite, got {value}"
            )));
        }
        let k = self.offset(i, j)?;
        self.vols[k] = value;
        Ok(())
    }

    /// Row slice `sigma[i][i..max_index]`.
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        let start = i * self.max_index - i * (i + 1) / 2 + i;
        &self.vols[start..start + (self.max_index - i)]
    }

    /// Iterate all cells as `(i, j, sigma)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.max_index).flat_map(move |i| {
            self.row(i)
                .iter()
                .enumerate()
                .map(move |(k, &v)| (i, i + k, v))
        })
    }

    /// Left-Riemann integral of `sigma(t_i, tau)` over `tau` from `t_i` to
    /// `t_{j_end}`: the sum of `sigma[i][j] * dt` for `j = i..j_end`.
    /// Empty (zero) when `j_end == i`.
    pub fn int_sigma(&self, i: usize, j_end: usize) -> Result<f64> {
        if i > j_end || j_end > self.max_index || i >= self.max_index {
            return Err(Error::grid(format!(
                "integral bounds ({i}, {j_end}) outside surface with max_index {}",
                self.max_index
            )));
        }
        Ok(self.row(i)[..j_end - i].iter().sum::<f64>() * self.dt)
    }

    /// Multiply every cell by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.vols {
            *v *= factor;
        }
    }

    /// Copy with every cell multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.scale(factor);
        s
    }

    /// Refine the grid by an integer factor, keeping `sigma` piecewise
    /// constant on the original cells. Aggregate variances are unchanged.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("refinement factor must be at least 1"));
        }
        let mut fine = Self::zeros(self.dt / factor as f64, self.max_index * factor)?;
        for (i, j, v) in self.cells() {
            for a in 0..factor {
                for b in 0..factor {
                    let (fi, fj) = (i * factor + a, j * factor + b);
                    if fi <= fj {
                        fine.set(fi, fj, v)?;
                    }
                }
            }
        }
        // Sub-diagonal halves of original diagonal cells fall outside the
        // triangle and are dropped; they never enter any integral.
        Ok(fine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_index_snaps_and_rejects() {
        assert_eq!(grid_index(2.5, 0.5, "expiry").unwrap(), 5);
        assert_eq!(grid_index(0.0, 0.5, "expiry").unwrap(), 0);
        assert_eq!(grid_index(2.5 + 5e-10, 0.5, "expiry").unwrap(), 5);
        assert!(grid_index(2.3, 0.5, "expiry").is_err());
        assert!(grid_index(-0.5, 0.5, "expiry").is_err());
    }

    #[test]
    fn triangle_get_set_roundtrip() {
        let mut s = ForwardVolSurface::zeros(0.5, 6).unwrap();
        let mut v = 0.0;
        for i in 0..6 {
            for j in i..6 {
                v += 0.001;
                s.set(i, j, v).unwrap();
            }
        }
        let mut expected = 0.0;
        for i in 0..6 {
            for j in i..6 {
                expected += 0.001;
                assert_eq!(s.get(i, j).unwrap(), expected);
            }
        }
        assert!(s.get(3, 2).is_err());
        assert!(s.get(0, 6).is_err());
        assert!(s.set(0, 0, f64::NAN).is_err());
    }

    #[test]
    fn int_sigma_empty_and_constant() {
        let s = ForwardVolSurface::constant(0.5, 8, 0.013).unwrap();
        assert_eq!(s.int_sigma(3, 3).unwrap(), 0.0);
        // c * (4 * 0.5) = 2c
        assert_abs_diff_eq!(s.int_sigma(0, 4).unwrap(), 2.0 * 0.013, epsilon = 1e-15);
        assert!(s.int_sigma(5, 4).is_err());
        assert!(s.int_sigma(0, 9).is_err());
    }

    #[test]
    fn int_sigma_matches_direct_loop() {
        let s = ForwardVolSurface::from_fn(0.5, 10, |i, j| {
            // Deterministic pseudo-random cell values.
            ((i * 31 + j * 17) % 97) as f64 * 1e-4
        })
        .unwrap();
        let mut direct = 0.0;
        for j in 2..7 {
            direct += s.get(2, j).unwrap() * 0.5;
        }
        assert_abs_diff_eq!(s.int_sigma(2, 7).unwrap(), direct, epsilon = 1e-15);
    }

    #[test]
    fn refined_preserves_integrals() {
        let s = ForwardVolSurface::from_fn(0.5, 6, |i, j| ((i + 2 * j) % 5) as f64 * 1e-3).unwrap();
        let fine = s.refined(3).unwrap();
        assert_eq!(fine.max_index(), 18);
        for i in 0..6 {
            for j_end in i..=6 {
                assert_abs_diff_eq!(
                    s.int_sigma(i, j_end).unwrap(),
                    fine.int_sigma(i * 3, j_end * 3).unwrap(),
                    epsilon = 1e-15
                );
            }
        }
    }
}
