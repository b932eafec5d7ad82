//! Difference equations `u(t+1) = f(t, u(t))` on the integer grid.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::catalog::{self, EntryKind};
use crate::error::{Error, Result};
use crate::expr::{Ctx, Expr, Scope};
use crate::flows::{fiber_count_from_families, FiberCount};
use crate::signal::{sup_distance, SampledSignal, Window};

/// Iterates are aborted once a component exceeds this magnitude.
pub const OVERFLOW_BOUND: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct MapSpec {
    pub label: String,
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
    /// Integer-grid forcing read as `f0, f1, ...`.
    pub forcing: Option<SampledSignal>,
    /// Hull shift: the rule is applied at `t + time_offset`.
    pub time_offset: f64,
    exprs: Vec<Expr>,
}

impl MapSpec {
    pub fn builtin(id: &str) -> Result<Self> {
        Self::builtin_with(id, &BTreeMap::new())
    }

    pub fn builtin_with(id: &str, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let entry = catalog::lookup(id)
            .filter(|e| e.kind == EntryKind::Map)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown map `{id}`")))?;
        let mut params: BTreeMap<String, f64> =
            entry.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        let mut m = Self::from_exprs(entry.exprs, params, None)?;
        m.label = id.to_string();
        Ok(m)
    }

    pub fn from_exprs<S: AsRef<str>>(
        components: &[S],
        params: BTreeMap<String, f64>,
        forcing: Option<SampledSignal>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("map needs a component".into()));
        }
        if let Some(f) = &forcing {
            if !f.is_integer_grid() {
                return Err(Error::InvalidArgument("map forcing must live on an integer grid".into()));
            }
        }
        let dim = components.len();
        let scope = Scope {
            dim,
            forcing_dim: forcing.as_ref().map_or(0, SampledSignal::width),
            lags: 0,
            params: &params,
        };
        let exprs = components
            .iter()
            .map(|c| Expr::parse(c.as_ref(), &scope))
            .collect::<Result<Vec<_>>>()?;
        Ok(MapSpec {
            label: components.iter().map(|c| c.as_ref()).collect::<Vec<_>>().join("; "),
            dim,
            params,
            forcing,
            time_offset: 0.0,
            exprs,
        })
    }

    pub fn shifted(&self, h: f64) -> Self {
        MapSpec {
            time_offset: self.time_offset + h,
            ..self.clone()
        }
    }

    fn step(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let tt = t + self.time_offset;
        let mut fbuf = [0.0; 8];
        let f: &[f64] = match &self.forcing {
            Some(sig) => {
                let w = sig.width().min(fbuf.len());
                sig.value_at(tt, &mut fbuf[..w])?;
                &fbuf[..w]
            }
            None => &[],
        };
        let ctx = Ctx { t: tt, x, f, z: &[] };
        for (o, e) in out.iter_mut().zip(&self.exprs) {
            *o = e.eval(&ctx);
            if !o.is_finite() || o.abs() > OVERFLOW_BOUND {
                return Err(Error::NonFiniteValue { t: t + 1.0 });
            }
        }
        Ok(())
    }
}

/// `u(0) = u0`, `u(t+1) = f(t, u(t))` for `t = 0, ..., n_steps - 1`, on the grid `0, 1, ..., n_steps`.
pub fn iterate(m: &MapSpec, u0: &[f64], n_steps: usize) -> Result<SampledSignal> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if u0.len() != m.dim {
        return Err(Error::DimMismatch {
            left: u0.len(),
            right: m.dim,
        });
    }
    let d = m.dim;
    let mut out = Vec::with_capacity((n_steps + 1) * d);
    out.extend_from_slice(u0);
    let mut next = vec![0.0; d];
    for k in 0..n_steps {
        m.step(k as f64, &out[k * d..(k + 1) * d], &mut next)?;
        out.extend_from_slice(&next);
    }
    Ok(SampledSignal::new(0.0, 1.0, d, out)?.with_label(m.label.clone()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteFiberOptions {
    pub burn_in: usize,
    pub n_steps: usize,
    pub cluster_tol: f64,
    /// Period of the forcing, when known; enables the `m τ` consistency check.
    pub forcing_period: Option<usize>,
}

/// Longest asymptotic period searched for.
pub const MAX_PERIOD: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct DiscreteFiberCount {
    #[serde(flatten)]
    pub fibers: FiberCount,
    /// Least period of each representative of the first shift, if one up to 64 exists.
    pub periods: Vec<Option<usize>>,
    /// Largest representative period over all shifts.
    pub period: Option<usize>,
    /// Whether every period divides `m τ` with `τ` the forcing period.
    pub period_consistent: Option<bool>,
}

/// Least `p ≤ 64` with `sup |u(t+p) - u(t)| < tol` over the segment.
pub fn asymptotic_period(u: &SampledSignal, tol: f64) -> Result<Option<usize>> {
    for p in 1..=MAX_PERIOD.min(u.len().saturating_sub(1)) {
        let shifted = u.translate(p as f64)?;
        let w = shifted.domain();
        if sup_distance(&shifted, u, &w)? < tol {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Fiber count of the shifted maps over `[burn_in, n_steps]`, with the
/// asymptotic period of each representative.
pub fn discrete_fiber_count(
    m: &MapSpec,
    shifts: &[i64],
    x0s: &[Vec<f64>],
    opts: &DiscreteFiberOptions,
) -> Result<DiscreteFiberCount> {
    if opts.burn_in >= opts.n_steps {
        return Err(Error::InvalidArgument("burn-in must precede the last step".into()));
    }
    if shifts.is_empty() || x0s.is_empty() {
        return Err(Error::InvalidArgument("fiber count needs shifts and initial states".into()));
    }
    let families = shifts
        .iter()
        .map(|&h| {
            let g = m.shifted(h as f64);
            x0s.iter().map(|x0| iterate(&g, x0, opts.n_steps)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let window = Window::new(opts.burn_in as f64, opts.n_steps as f64)?;
    let fibers = fiber_count_from_families(&families, &window, opts.cluster_tol)?;
    let mut all_periods = Vec::new();
    for reps in &fibers.representatives {
        let ps = reps
            .iter()
            .map(|r| asymptotic_period(r, opts.cluster_tol))
            .collect::<Result<Vec<_>>>()?;
        all_periods.push(ps);
    }
    let periods = all_periods.first().cloned().unwrap_or_default();
    let period = all_periods
        .iter()
        .flatten()
        .try_fold(1usize, |acc, p| p.map(|p| acc.max(p)));
    let period_consistent = opts.forcing_period.map(|tau| {
        let mt = fibers.m.max(1) * tau;
        all_periods.iter().flatten().all(|p| p.is_some_and(|p| mt % p == 0))
    });
    Ok(DiscreteFiberCount {
        fibers,
        periods,
        period,
        period_consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_iterates() {
        let u = iterate(&MapSpec::builtin("halving").unwrap(), &[1.0], 30).unwrap();
        for n in 0..=30 {
            assert_eq!(u.scalar(n), 2f64.powi(-(n as i32)));
        }
        let u = iterate(&MapSpec::builtin("increment").unwrap(), &[0.25], 10).unwrap();
        assert_eq!(u.scalar(10), 10.25);
        assert!(u.is_integer_grid() && u.dt() == 1.0);
    }

    #[test]
    fn affine_sin_matches_direct_sum() {
        let u = iterate(&MapSpec::builtin("affine_sin").unwrap(), &[0.0], 50).unwrap();
        let direct: f64 = (0..50).map(|k| 0.5f64.powi(49 - k) * (k as f64).sin()).sum();
        assert!((u.scalar(50) - direct).abs() < 1e-12);
        let again = iterate(&MapSpec::builtin("affine_sin").unwrap(), &[0.0], 50).unwrap();
        assert_eq!(u, again);
    }

    #[test]
    fn overflow_is_reported() {
        let m = MapSpec::from_exprs(&["10*x0"], BTreeMap::new(), None).unwrap();
        assert!(matches!(iterate(&m, &[1.0], 20), Err(Error::NonFiniteValue { t }) if t == 13.0));
        assert!(iterate(&m, &[1.0], 0).is_err());
    }

    fn opts(forcing_period: Option<usize>) -> DiscreteFiberOptions {
        DiscreteFiberOptions {
            burn_in: 400,
            n_steps: 600,
            cluster_tol: 1e-3,
            forcing_period,
        }
    }

    #[test]
    fn remotely_stationary_map_settles_at_fixed_point() {
        let m = MapSpec::builtin("affine_remote").unwrap();
        let f = discrete_fiber_count(&m, &[0, 3, 10], &[vec![-1.0], vec![0.0], vec![4.0]], &opts(None)).unwrap();
        assert_eq!(f.fibers.m, 1);
        assert_eq!(f.period, Some(1));
        let rep = &f.fibers.representatives[0][0];
        assert!((rep.scalar(rep.len() - 1) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn negation_has_period_two() {
        let f = discrete_fiber_count(&MapSpec::builtin("negate").unwrap(), &[0], &[vec![1.0]], &opts(None)).unwrap();
        assert_eq!(f.fibers.m, 1);
        assert_eq!(f.periods, vec![Some(2)]);
    }

    #[test]
    fn periodic_forcing_period_divides_m_tau() {
        let m = MapSpec::builtin("affine_period2").unwrap();
        let f = discrete_fiber_count(&m, &[0, 1, 2], &[vec![0.0], vec![5.0]], &opts(Some(2))).unwrap();
        assert_eq!(f.fibers.m, 1);
        assert_eq!(f.period, Some(2));
        assert_eq!(f.period_consistent, Some(true));
    }
}
