//! The additive bounds of the three online schedulers.
//!
//! With `n` processors, speedup `s`, `ρ = lmax/lmin` and `q = ⌈lmax/(s·lmin)⌉`:
//!
//! | bound                | inequality                                                        |
//! |----------------------|-------------------------------------------------------------------|
//! | `lis-tasks`          | `T ≤ T* + βn² + 3n`                                               |
//! | `lis-cost`           | `C ≤ ρ·(C* + βn² + 3n)`                                           |
//! | `burst-tasks`        | `T ≤ T* + 2n² + (3 + q)n`                                         |
//! | `burst-cost`         | `C ≤ C* + lmax(n² + 2n) + lmin(n² + (1 + q)n)`                    |
//! | `burst-lmax-backlog` | `Tmax ≤ Tmax* + n² + 2n`                                          |
//! | `laf-cost`           | `C ≤ C* + Δ`, `Δ = 2·lmax·kβn² + 2n·lmax + 3n·lmax/s`            |
//! | `laf-tasks`          | `T ≤ (lmax·T* + Δ)/lmin`                                          |
//!
//! Starred values are the reference's; `k` is the number of distinct costs.

use std::collections::BTreeSet;

use super::{pieces, report, AnalysisError, BoundReport, Reference};
use crate::model::SystemParams;
use crate::schedulers::thresholds::in_burst_range;
use crate::time::Rational;
use crate::trace::RunTrace;

fn r(v: u64) -> Rational {
    Rational::from_u64(v)
}

fn check_beta(params: &SystemParams, who: &str) -> Result<(), AnalysisError> {
    if params.beta < params.min_beta() {
        return Err(AnalysisError::Precondition(format!(
            "{who} bounds need beta >= lmax/lmin, got beta = {} with lmax/lmin = {}",
            params.beta,
            params.rho()
        )));
    }
    Ok(())
}

pub fn verify_lis_bounds(
    alg: &RunTrace,
    reference: &mut dyn Reference,
    params: &SystemParams,
) -> Result<[BoundReport; 2], AnalysisError> {
    check_beta(params, "lis")?;
    let rho = params.rho();
    if params.speedup < rho {
        return Err(AnalysisError::Precondition(format!(
            "lis bounds need s >= lmax/lmin = {rho}, got s = {}",
            params.speedup
        )));
    }
    let n = u64::from(params.n);
    let extra = r(params.beta * n * n + 3 * n);
    let ps = pieces(alg, reference, params.lmax)?;
    let src = reference.source();
    Ok([
        report("lis-tasks", &ps, src, |p| r(p.reference.tasks) + extra - r(p.alg.tasks)),
        report("lis-cost", &ps, src, |p| rho * (r(p.reference.cost) + extra) - r(p.alg.cost)),
    ])
}

pub fn verify_burst_bounds(
    alg: &RunTrace,
    reference: &mut dyn Reference,
    params: &SystemParams,
) -> Result<[BoundReport; 3], AnalysisError> {
    let (lmin, lmax, s) = (params.lmin, params.lmax, params.speedup);
    if let Some(task) = alg.tasks.values().find(|t| t.cost != lmin && t.cost != lmax) {
        return Err(AnalysisError::Precondition(format!(
            "burst bounds are for two costs {lmin} and {lmax}; task {} has cost {}",
            task.id, task.cost
        )));
    }
    let in_range = lmin < lmax && in_burst_range(lmin, lmax, s).map_err(|e| AnalysisError::Precondition(e.to_string()))?;
    if !in_range {
        return Err(AnalysisError::Precondition(format!("speedup {s} is outside the burst range for ({lmin}, {lmax})")));
    }
    let n = u64::from(params.n);
    let q = (r(lmax) / (s * r(lmin))).ceil() as u64;
    let task_extra = r(2 * n * n + (3 + q) * n);
    let cost_extra = r(lmax * (n * n + 2 * n) + lmin * (n * n + (1 + q) * n));
    let backlog_extra = r(n * n + 2 * n);
    let ps = pieces(alg, reference, lmax)?;
    let src = reference.source();
    Ok([
        report("burst-tasks", &ps, src, |p| r(p.reference.tasks) + task_extra - r(p.alg.tasks)),
        report("burst-cost", &ps, src, |p| r(p.reference.cost) + cost_extra - r(p.alg.cost)),
        report("burst-lmax-backlog", &ps, src, |p| r(p.reference.lmax_tasks) + backlog_extra - r(p.alg.lmax_tasks)),
    ])
}

pub fn verify_laf_bound(
    alg: &RunTrace,
    reference: &mut dyn Reference,
    params: &SystemParams,
    k: usize,
) -> Result<[BoundReport; 2], AnalysisError> {
    check_beta(params, "laf")?;
    let s = params.speedup;
    if s < Rational::frac(7, 2) {
        return Err(AnalysisError::Precondition(format!("laf bound needs s >= 7/2, got s = {s}")));
    }
    let costs: BTreeSet<u64> = alg.tasks.values().map(|t| t.cost).collect();
    if k == 0 || costs.len() > k {
        return Err(AnalysisError::Precondition(format!(
            "laf bound was given k = {k} distinct costs but the pattern uses {}",
            costs.len()
        )));
    }
    let (n, lmin, lmax) = (u64::from(params.n), params.lmin, params.lmax);
    let delta = r(2 * lmax * k as u64 * params.beta * n * n + 2 * n * lmax) + r(3 * n * lmax) / s;
    let ps = pieces(alg, reference, lmax)?;
    let src = reference.source();
    Ok([
        report("laf-cost", &ps, src, |p| r(p.reference.cost) + delta - r(p.alg.cost)),
        report("laf-tasks", &ps, src, |p| (r(lmax) * r(p.reference.tasks) + delta) / r(lmin) - r(p.alg.tasks)),
    ])
}
