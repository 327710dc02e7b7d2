//! The burst parameter gamma and the speedup thresholds around it.
//!
//! For costs `lmin < lmax` and speedup `s`, gamma is the smallest number of
//! `lmin`-tasks that one processor at speed `s` can finish together with one
//! `lmax`-task within the time a speed-1 processor needs for one more
//! `lmin`-task:
//!
//! ```text
//! (gamma·lmin + lmax) / s <= (gamma + 1)·lmin                   (property 1)
//! (k·lmin + lmax) / s     >  (k + 1)·lmin   for every k < gamma  (property 2)
//! gamma = max(ceil((lmax - s·lmin) / ((s - 1)·lmin)), 0)
//! ```
//!
//! No deterministic scheduler is competitive when both `s < lmax/lmin` and
//! `s < (gamma·lmin + lmax)/lmax` hold.

use crate::schedulers::SchedulerError;
use crate::time::Rational;

fn r(v: u64) -> Rational {
    Rational::from_u64(v)
}

/// Whether `kappa` satisfies property 1 at speedup `s`.
pub fn satisfies_property1(lmin: u64, lmax: u64, s: Rational, kappa: u64) -> bool {
    (r(kappa) * r(lmin) + r(lmax)) / s <= r(kappa + 1) * r(lmin)
}

pub fn gamma(lmin: u64, lmax: u64, s: Rational) -> Result<u64, SchedulerError> {
    if lmin == 0 || lmin > lmax || s < Rational::ONE {
        return Err(SchedulerError::InvalidCosts { lmin, lmax });
    }
    let numerator = r(lmax) - s * r(lmin);
    if !numerator.is_negative() && !numerator.is_zero() {
        if s == Rational::ONE {
            return Err(SchedulerError::UndefinedGamma { lmin, lmax, speedup: s });
        }
        let value = numerator / ((s - Rational::ONE) * r(lmin));
        Ok(value.ceil() as u64)
    } else {
        Ok(0)
    }
}

/// Condition (a): `s < lmax / lmin`.
pub fn condition_a(lmin: u64, lmax: u64, s: Rational) -> bool {
    s < r(lmax) / r(lmin)
}

/// Condition (b): `s < (gamma·lmin + lmax) / lmax`.
pub fn condition_b(lmin: u64, lmax: u64, s: Rational) -> Result<bool, SchedulerError> {
    let g = gamma(lmin, lmax, s)?;
    Ok(s < burst_lower_threshold(lmin, lmax, g))
}

/// `(gamma·lmin + lmax) / lmax` for a given gamma.
pub fn burst_lower_threshold(lmin: u64, lmax: u64, gamma: u64) -> Rational {
    (r(gamma) * r(lmin) + r(lmax)) / r(lmax)
}

/// True iff both conditions hold, i.e. no deterministic algorithm is
/// competitive at this speedup.
pub fn non_competitive_check(lmin: u64, lmax: u64, s: Rational) -> Result<bool, SchedulerError> {
    Ok(condition_a(lmin, lmax, s) && condition_b(lmin, lmax, s)?)
}

/// Whether `s` lies in the range served by the burst scheduler:
/// `(gamma·lmin + lmax)/lmax <= s < lmax/lmin`.
pub fn in_burst_range(lmin: u64, lmax: u64, s: Rational) -> Result<bool, SchedulerError> {
    Ok(condition_a(lmin, lmax, s) && !condition_b(lmin, lmax, s)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SufficientSpeedup {
    pub rho: Rational,
    /// `true` when `rho <= phi` and the sufficient speedup is `rho` itself.
    pub uses_rho: bool,
    /// The sufficient speedup as a real number.
    pub value: f64,
    /// Exact value when it is rational (the `rho` branch).
    pub exact: Option<Rational>,
    /// A rational no smaller than `value`; usable wherever an exact speedup is required.
    pub rational_upper: Rational,
    /// Below `2 - 1/rho` no deterministic algorithm is competitive.
    pub non_competitive_below: Rational,
}

/// Smallest speedup shown to suffice for competitiveness:
/// `rho` when `rho <= phi`, otherwise `1 + sqrt(1 - 1/rho)`.
pub fn sufficient_speedup(lmin: u64, lmax: u64) -> Result<SufficientSpeedup, SchedulerError> {
    if lmin == 0 || lmin > lmax {
        return Err(SchedulerError::InvalidCosts { lmin, lmax });
    }
    let rho = r(lmax) / r(lmin);
    let non_competitive_below = Rational::int(2) - Rational::ONE / rho;
    // rho <= phi  <=>  rho^2 - rho - 1 <= 0 for rho >= 1
    let uses_rho = rho * rho - rho - Rational::ONE <= Rational::ZERO;
    if uses_rho {
        return Ok(SufficientSpeedup {
            rho,
            uses_rho,
            value: rho.to_f64(),
            exact: Some(rho),
            rational_upper: rho,
            non_competitive_below,
        });
    }
    let radicand = Rational::ONE - Rational::ONE / rho;
    let value = 1.0 + radicand.to_f64().sqrt();
    let scale: i128 = 1_000_000;
    let mut numer = (value * scale as f64).ceil() as i128;
    // (u - 1)^2 >= 1 - 1/rho certifies u >= 1 + sqrt(1 - 1/rho).
    let rational_upper = loop {
        let u = Rational::frac(numer, scale);
        let d = u - Rational::ONE;
        if d * d >= radicand {
            break u;
        }
        numer += 1;
    };
    Ok(SufficientSpeedup { rho, uses_rho, value, exact: None, rational_upper, non_competitive_below })
}
