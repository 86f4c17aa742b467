//! Closed-form constants and bounds.
//!
//! Everything here is a pure function of [`EstimateParams`] plus geometric
//! scalars (time, distance, diameter, volume). Quantities whose exponents
//! stack are evaluated through their logarithms and returned as [`Bound`],
//! which saturates to `+inf` with `overflow = true` instead of failing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `delta = 2 (1 - alpha)^2 / (n + (1 - alpha)^2)`.
pub fn delta_of_alpha(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    let s = (1.0 - alpha).powi(2);
    Ok(2.0 * s / (n as f64 + s))
}

/// Smallness threshold `delta / (5 - delta)` for the Kato constant.
pub fn kato_threshold(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 5.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 5), got {delta}"
        )));
    }
    Ok(delta / (5.0 - delta))
}

/// The constant bundle `(n, alpha, delta, beta, b, a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    pub n: usize,
    pub alpha: f64,
    pub delta: f64,
    pub beta: f64,
    pub b: f64,
    /// `5 / delta`
    pub a: f64,
}

impl EstimateParams {
    /// Validated bundle; requires `0 <= b < delta/(5 - delta)`.
    pub fn new(n: usize, alpha: f64, beta: f64, b: f64) -> Result<Self> {
        let p = Self::unchecked(n, alpha, beta, b)?;
        let thr = p.threshold();
        if !(b < thr) {
            return Err(Error::invalid(format!(
                "Kato constant b = {b} is not below the threshold {thr} for alpha = {alpha}, n = {n}"
            )));
        }
        Ok(p)
    }

    /// Bundle without the smallness condition on `b`, for evaluating the
    /// formulas outside the range where they are claimed.
    pub fn unchecked(n: usize, alpha: f64, beta: f64, b: f64) -> Result<Self> {
        let delta = delta_of_alpha(alpha, n)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        if !(0.0..1.0).contains(&b) {
            return Err(Error::invalid(format!("b must lie in [0, 1), got {b}")));
        }
        Ok(Self {
            n,
            alpha,
            delta,
            beta,
            b,
            a: 5.0 / delta,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.delta / (5.0 - self.delta)
    }

    pub fn is_admissible(&self) -> bool {
        self.b < self.threshold()
    }

    /// `n / ((2 - delta) alpha)`.
    pub fn liyau_constant(&self) -> f64 {
        self.n as f64 / ((2.0 - self.delta) * self.alpha)
    }

    /// `n / ((2 - delta) alpha) (1 - b)^{-1/2}`, the heat kernel time exponent.
    pub fn kernel_exponent(&self) -> f64 {
        self.liyau_constant() / (1.0 - self.b).sqrt()
    }

    /// `(1 - b)^{-1/2}`
    fn root_inverse(&self) -> f64 {
        1.0 / (1.0 - self.b).sqrt()
    }
}

/// A positive bound carried with its logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    /// `+inf` (serialized as null) when `ln_value` exceeds the double range.
    pub value: f64,
    pub ln_value: f64,
    pub overflow: bool,
}

impl Bound {
    pub fn from_ln(ln_value: f64) -> Self {
        let value = ln_value.exp();
        Bound {
            value,
            ln_value,
            overflow: value.is_infinite(),
        }
    }
}

fn check_time(t: f64, strict: bool) -> Result<()> {
    let ok = if strict { t > 0.0 } else { t >= 0.0 };
    if !(ok && t.is_finite()) {
        return Err(Error::invalid(format!(
            "time must be {} and finite, got {t}",
            if strict { "positive" } else { "nonnegative" }
        )));
    }
    Ok(())
}

/// `j(t) = (1 - b)^{(1 + t/beta) delta/(5 - delta)}`.
pub fn j_lower(t: f64, p: &EstimateParams) -> Result<f64> {
    check_time(t, false)?;
    Ok(((1.0 + t / p.beta) * p.threshold() * (1.0 - p.b).ln()).exp())
}

/// `n / ((2 - delta) alpha j(t) t)`.
pub fn liyau_rhs(t: f64, p: &EstimateParams) -> Result<f64> {
    check_time(t, true)?;
    Ok(p.liyau_constant() / (j_lower(t, p)? * t))
}

/// `Lambda(T) = (1/(1 - b))^{(1 + T/beta) delta/(5 - delta)} = 1 / j(T)`.
pub fn harnack_lambda(horizon: f64, p: &EstimateParams) -> Result<f64> {
    Ok(1.0 / j_lower(horizon, p)?)
}

/// `(t2/t1)^{n Lambda / ((2 - delta) alpha)} exp(Lambda d^2 / (4 (t2 - t1) alpha))`.
pub fn harnack_factor(d: f64, t1: f64, t2: f64, horizon: f64, p: &EstimateParams) -> Result<Bound> {
    if !(t1 > 0.0 && t1 < t2 && t2 <= horizon && horizon.is_finite()) {
        return Err(Error::invalid(format!(
            "Harnack times need 0 < t1 < t2 <= T, got t1={t1}, t2={t2}, T={horizon}"
        )));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::invalid(format!(
            "distance must be nonnegative, got {d}"
        )));
    }
    let lambda = harnack_lambda(horizon, p)?;
    let ln =
        p.liyau_constant() * lambda * (t2 / t1).ln() + lambda * d * d / (4.0 * (t2 - t1) * p.alpha);
    Ok(Bound::from_ln(ln))
}

/// `C1 = beta^E exp((1 - b)^{-1/2} diam^2 / (alpha beta))` with
/// `E = n/((2 - delta) alpha) (1 - b)^{-1/2}`.
///
/// The `2 (beta - t)` of the t-dependent form is replaced by its worst case
/// `beta` over `t <= beta/2`, which makes the constant time independent.
pub fn heat_kernel_constant(p: &EstimateParams, diam: f64) -> Result<Bound> {
    if !(diam >= 0.0 && diam.is_finite()) {
        return Err(Error::invalid(format!(
            "diameter must be nonnegative, got {diam}"
        )));
    }
    let ln =
        p.kernel_exponent() * p.beta.ln() + p.root_inverse() * diam * diam / (p.alpha * p.beta);
    Ok(Bound::from_ln(ln))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelBounds {
    pub on_diag: Bound,
    pub off_diag: Bound,
    pub c1: Bound,
    pub exponent: f64,
}

/// On- and off-diagonal heat kernel upper bounds for `0 < t < beta/2`.
pub fn heat_kernel_bounds(
    t: f64,
    d: f64,
    p: &EstimateParams,
    diam: f64,
    vol: f64,
) -> Result<HeatKernelBounds> {
    check_time(t, true)?;
    if t >= p.beta / 2.0 {
        return Err(Error::invalid(format!(
            "heat kernel bounds need t < beta/2 = {}, got {t}",
            p.beta / 2.0
        )));
    }
    if !(d >= 0.0 && d <= diam * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "distance {d} outside [0, diam = {diam}]"
        )));
    }
    if !(vol > 0.0 && vol.is_finite()) {
        return Err(Error::invalid(format!(
            "volume must be positive, got {vol}"
        )));
    }
    let c1 = heat_kernel_constant(p, diam)?;
    let exponent = p.kernel_exponent();
    let ln_on = c1.ln_value - vol.ln() - exponent * t.ln();
    let ln_off = ln_on + diam * diam / t - d * d / (4.0 * t);
    Ok(HeatKernelBounds {
        on_diag: Bound::from_ln(ln_on),
        off_diag: Bound::from_ln(ln_off),
        c1,
        exponent,
    })
}

/// `(1/(1 - b)) exp(t log(1/(1 - b)) / beta) = (1/(1 - b))^{1 + t/beta}`.
pub fn schrodinger_norm_bound(t: f64, p: &EstimateParams) -> Result<f64> {
    check_time(t, false)?;
    Ok((-(1.0 + t / p.beta) * (1.0 - p.b).ln()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BettiBound {
    pub bound: Bound,
    /// The bound is stated for `n >= 3`; surfaces are evaluated with this flag off.
    pub dimension_hypothesis_met: bool,
}

/// `B = C1 (2/(1-b))^{(3/2)(1+b)/(1-b) + E} (2/beta)^E exp(beta diam^2 (1-b) / (2 (1+b)))`.
pub fn betti_bound(p: &EstimateParams, diam: f64) -> Result<BettiBound> {
    let c1 = heat_kernel_constant(p, diam)?;
    let e = p.kernel_exponent();
    let b = p.b;
    let ln = c1.ln_value
        + (1.5 * (1.0 + b) / (1.0 - b) + e) * (2.0 / (1.0 - b)).ln()
        + e * (2.0 / p.beta).ln()
        + p.beta * diam * diam * (1.0 - b) / (2.0 * (1.0 + b));
    Ok(BettiBound {
        bound: Bound::from_ln(ln),
        dimension_hypothesis_met: p.n >= 3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_rejects_closed_endpoints() {
        assert!(delta_of_alpha(0.0, 2).is_err());
        assert!(delta_of_alpha(1.0, 2).is_err());
        assert!(delta_of_alpha(0.5, 1).is_err());
    }

    #[test]
    fn params_enforce_threshold() {
        let thr = 2.0 / 43.0;
        assert!(EstimateParams::new(2, 0.5, 1.0, thr * 0.999).is_ok());
        assert!(EstimateParams::new(2, 0.5, 1.0, thr).is_err());
        assert!(EstimateParams::unchecked(2, 0.5, 1.0, 0.3).is_ok());
    }

    #[test]
    fn time_preconditions() {
        let p = EstimateParams::new(2, 0.5, 2.0, 0.0).unwrap();
        assert!(liyau_rhs(0.0, &p).is_err());
        assert!(j_lower(-1.0, &p).is_err());
        assert!(harnack_factor(0.0, 0.2, 0.1, 1.0, &p).is_err());
        assert!(harnack_factor(0.0, 0.1, 0.2, 0.15, &p).is_err());
        assert!(heat_kernel_bounds(1.0, 0.0, &p, 1.0, 1.0).is_err());
    }

    #[test]
    fn overflow_saturates_with_flag() {
        let p = EstimateParams::new(3, 0.5, 50.0, 0.0).unwrap();
        let b = betti_bound(&p, 40.0).unwrap();
        assert!(b.bound.overflow);
        assert!(b.bound.value.is_infinite());
        assert!(b.bound.ln_value.is_finite());
    }
}
