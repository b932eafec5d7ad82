//! Delay equations `u'(t) = f(t, u(t), u(t+θ_1), ..., u(t+θ_k))` with point lags
//! `θ_i ∈ [-r, 0]`, solved by stepping on a grid that divides the delay.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::catalog::{self, EntryKind};
use crate::error::{Error, Result};
use crate::expr::{Ctx, Expr, Scope};
use crate::signal::{SampledSignal, Window, GRID_TOL};

/// Smallest number of steps per delay interval.
pub const MIN_STEPS_PER_DELAY: usize = 100;

/// A state segment `θ ↦ u(t+θ)` on `[-r, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistorySegment {
    pub r: f64,
    /// Samples on `[-r, 0]`.
    pub samples: SampledSignal,
}

impl HistorySegment {
    pub fn new(r: f64, samples: SampledSignal) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("delay must be positive, got {r}")));
        }
        let ok_span = (samples.t0() + r).abs() <= GRID_TOL * samples.dt().max(r)
            && samples.end().abs() <= GRID_TOL * samples.dt().max(r);
        if !ok_span {
            return Err(Error::InvalidArgument(format!(
                "history must cover [-{r}, 0], got [{}, {}]",
                samples.t0(),
                samples.end()
            )));
        }
        if samples.raw().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("history is not finite".into()));
        }
        Ok(HistorySegment { r, samples })
    }

    /// Constant history `u ≡ value`.
    pub fn constant(r: f64, value: &[f64]) -> Result<Self> {
        let values = value.iter().chain(value).copied().collect();
        Self::new(r, SampledSignal::new(-r, r, value.len(), values)?)
    }

    /// Scalar history sampled from `g` on `[-r, 0]`.
    pub fn from_fn(r: f64, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(r, SampledSignal::from_fn(-r, r / n as f64, n + 1, g)?)
    }

    pub fn dim(&self) -> usize {
        self.samples.width()
    }

    /// Value at `θ = 0`.
    pub fn head(&self) -> &[f64] {
        self.samples.point(self.samples.len() - 1)
    }
}

/// Right-hand side of a delay equation, one expression per component. `z{i}`
/// (or `z{i}_{c}`) reads the state at lag `lags[i]`; `x` is the current state.
#[derive(Clone, Debug)]
pub struct DelayRhsSpec {
    pub label: String,
    pub dim: usize,
    pub lags: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    pub forcing: Option<SampledSignal>,
    exprs: Vec<Expr>,
}

impl DelayRhsSpec {
    pub fn builtin(id: &str) -> Result<Self> {
        let entry = catalog::lookup(id)
            .filter(|e| e.kind == EntryKind::Delay)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown delay equation `{id}`")))?;
        let params = entry.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let mut rhs = Self::from_exprs(entry.exprs, entry.lags.to_vec(), params, None)?;
        rhs.label = id.to_string();
        Ok(rhs)
    }

    pub fn from_exprs<S: AsRef<str>>(
        components: &[S],
        lags: Vec<f64>,
        params: BTreeMap<String, f64>,
        forcing: Option<SampledSignal>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("delay equation needs a component".into()));
        }
        if let Some(&lag) = lags.iter().find(|l| !(**l <= 0.0 && l.is_finite())) {
            return Err(Error::LagOutOfRange { lag, r: 0.0 });
        }
        let dim = components.len();
        let scope = Scope {
            dim,
            forcing_dim: forcing.as_ref().map_or(0, SampledSignal::width),
            lags: lags.len(),
            params: &params,
        };
        let exprs = components
            .iter()
            .map(|c| Expr::parse(c.as_ref(), &scope))
            .collect::<Result<Vec<_>>>()?;
        Ok(DelayRhsSpec {
            label: components.iter().map(|c| c.as_ref()).collect::<Vec<_>>().join("; "),
            dim,
            lags,
            params,
            forcing,
            exprs,
        })
    }

    /// Longest lag.
    pub fn max_delay(&self) -> f64 {
        self.lags.iter().fold(0.0, |m, l| m.max(-l))
    }

    /// `f(t, x, z)` with `z` the lagged states, lag-major.
    pub fn eval(&self, t: f64, x: &[f64], z: &[f64], out: &mut [f64]) -> Result<()> {
        let mut fbuf = [0.0; 8];
        let f: &[f64] = match &self.forcing {
            Some(sig) => {
                let w = sig.width().min(fbuf.len());
                sig.value_at(t, &mut fbuf[..w])?;
                &fbuf[..w]
            }
            None => &[],
        };
        let ctx = Ctx { t, x, f, z };
        for (o, e) in out.iter_mut().zip(&self.exprs) {
            *o = e.eval(&ctx);
            if !o.is_finite() {
                return Err(Error::NonFiniteValue { t });
            }
        }
        Ok(())
    }
}

/// Solution values and slopes on the grid `-r + k dt`, read back by cubic Hermite interpolation.
struct History {
    t0: f64,
    dt: f64,
    dim: usize,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Node index of `t = 0`, where the slope may jump; the history side keeps its own.
    kink: usize,
    kink_left: Vec<f64>,
}

impl History {
    fn value_at(&self, t: f64, out: &mut [f64]) {
        let n = self.values.len() / self.dim;
        let p = ((t - self.t0) / self.dt).max(0.0);
        let mut k = p.floor() as usize;
        let mut s = p - k as f64;
        if k + 1 >= n {
            k = n - 1;
            s = 0.0;
        }
        let d = self.dim;
        if s <= 1e-12 {
            out.copy_from_slice(&self.values[k * d..(k + 1) * d]);
            return;
        }
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        for c in 0..d {
            let (y0, y1) = (self.values[k * d + c], self.values[(k + 1) * d + c]);
            let m0 = self.slopes[k * d + c];
            let m1 = if k + 1 == self.kink {
                self.kink_left[c]
            } else {
                self.slopes[(k + 1) * d + c]
            };
            out[c] = h00 * y0 + h10 * self.dt * m0 + h01 * y1 + h11 * self.dt * m1;
        }
    }
}

/// Solves the delay equation on `[0, horizon]` with classical Runge–Kutta steps of
/// `dt = r / N`, `N = max(steps_per_delay, 100)`; the grid is extended to the
/// first multiple of `dt` at or beyond `horizon`.
///
/// Lagged values come from the computed history through cubic Hermite
/// interpolation. A lag of exactly 0 reads the current stage state; nonzero
/// lags shorter than one step cannot be resolved and are rejected.
pub fn integrate_dde(
    rhs: &DelayRhsSpec,
    init: &HistorySegment,
    horizon: f64,
    steps_per_delay: usize,
) -> Result<SampledSignal> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if init.dim() != rhs.dim {
        return Err(Error::DimMismatch {
            left: init.dim(),
            right: rhs.dim,
        });
    }
    let r = init.r;
    let n_delay = steps_per_delay.max(MIN_STEPS_PER_DELAY);
    let dt = r / n_delay as f64;
    for &lag in &rhs.lags {
        if lag < -r * (1.0 + GRID_TOL) || (lag != 0.0 && -lag < dt * (1.0 - GRID_TOL)) {
            return Err(Error::LagOutOfRange { lag, r });
        }
    }
    let d = rhs.dim;
    let k_lags = rhs.lags.len();
    let n_steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;

    let mut hist = History {
        t0: -r,
        dt,
        dim: d,
        values: Vec::with_capacity((n_delay + n_steps + 1) * d),
        slopes: Vec::with_capacity((n_delay + n_steps + 1) * d),
        kink: n_delay,
        kink_left: Vec::new(),
    };
    let mut buf = vec![0.0; d];
    for k in 0..=n_delay {
        let t = if k == n_delay { 0.0 } else { -r + k as f64 * dt };
        init.samples.value_at(t, &mut buf)?;
        hist.values.extend_from_slice(&buf);
    }
    for k in 0..=n_delay {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(n_delay));
        for c in 0..d {
            let slope = (hist.values[b * d + c] - hist.values[a * d + c]) / ((b - a) as f64 * dt);
            hist.slopes.push(slope);
        }
    }

    let mut z = vec![0.0; k_lags * d];
    let lagged = |hist: &History, t: f64, x: &[f64], z: &mut [f64]| {
        for (i, &lag) in rhs.lags.iter().enumerate() {
            let zi = &mut z[i * d..(i + 1) * d];
            if lag == 0.0 {
                zi.copy_from_slice(x);
            } else {
                hist.value_at(t + lag, zi);
            }
        }
    };
    let mut y: Vec<f64> = init.head().to_vec();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    lagged(&hist, 0.0, &y, &mut z);
    rhs.eval(0.0, &y, &z, &mut k1)?;
    // The slope at t = 0 is the right derivative of the solution.
    let base = n_delay * d;
    hist.kink_left = hist.slopes[base..base + d].to_vec();
    hist.slopes[base..base + d].copy_from_slice(&k1);

    let mut out = Vec::with_capacity((n_steps + 1) * d);
    out.extend_from_slice(&y);
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let tm = t + 0.5 * dt;
        let t1 = (step + 1) as f64 * dt;
        for c in 0..d {
            tmp[c] = y[c] + 0.5 * dt * k1[c];
        }
        lagged(&hist, tm, &tmp, &mut z);
        rhs.eval(tm, &tmp, &z, &mut k2)?;
        for c in 0..d {
            tmp[c] = y[c] + 0.5 * dt * k2[c];
        }
        lagged(&hist, tm, &tmp, &mut z);
        rhs.eval(tm, &tmp, &z, &mut k3)?;
        for c in 0..d {
            tmp[c] = y[c] + dt * k3[c];
        }
        lagged(&hist, t1, &tmp, &mut z);
        rhs.eval(t1, &tmp, &z, &mut k4)?;
        for c in 0..d {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > 1e300) {
            return Err(Error::NonFiniteValue { t: t1 });
        }
        hist.values.extend_from_slice(&y);
        hist.slopes.extend_from_slice(&k1);
        lagged(&hist, t1, &y, &mut z);
        rhs.eval(t1, &y, &z, &mut k1)?;
        let last = hist.slopes.len() - d;
        hist.slopes[last..].copy_from_slice(&k1);
        out.extend_from_slice(&y);
    }
    Ok(SampledSignal::new(0.0, dt, d, out)?.with_label(rhs.label.clone()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecompactnessProxy {
    pub precompact: bool,
    pub range_bound: f64,
    pub derivative_bound: f64,
    /// Sup norm over the second half of the horizon relative to the first half.
    pub growth_ratio: f64,
}

/// Largest range or slope accepted as bounded.
pub const PROXY_BOUND: f64 = 1e6;
/// Largest accepted growth of the sup norm from the first to the second half.
pub const PROXY_GROWTH: f64 = 1.5;

/// Boundedness and equicontinuity evidence for the segments of `u`: the range
/// bound, the slope bound read off the right-hand side along `u`, and the growth
/// of the sup norm across the horizon.
pub fn precompactness_proxy(u: &SampledSignal, rhs: &DelayRhsSpec) -> PrecompactnessProxy {
    let n = u.len();
    let d = u.width();
    let range_bound = u.sup_norm();
    let mid = n / 2;
    let sup_of = |lo: usize, hi: usize| (lo..hi).map(|i| u.norm_at(i)).fold(0.0, f64::max);
    let first = sup_of(0, mid.max(1));
    let second = sup_of(mid, n);
    let floor = 1e-9;
    let growth_ratio = second / first.max(floor);

    let r = rhs.max_delay();
    let mut z = vec![0.0; rhs.lags.len() * d];
    let mut slope = vec![0.0; d];
    let mut derivative_bound = 0.0f64;
    let mut evaluated = false;
    for i in 0..n {
        let t = u.time(i);
        if t - r < u.t0() - GRID_TOL * u.dt() || d != rhs.dim {
            continue;
        }
        let x = u.point(i);
        let mut ok = true;
        for (j, &lag) in rhs.lags.iter().enumerate() {
            let zj = &mut z[j * d..(j + 1) * d];
            if lag == 0.0 {
                zj.copy_from_slice(x);
            } else if u.value_at((t + lag).max(u.t0()), zj).is_err() {
                ok = false;
            }
        }
        if !ok || rhs.eval(t, x, &z, &mut slope).is_err() {
            derivative_bound = f64::INFINITY;
            evaluated = true;
            break;
        }
        derivative_bound = derivative_bound.max(crate::signal::norm(&slope));
        evaluated = true;
    }
    if !evaluated {
        derivative_bound = u.max_increment() / u.dt();
    }
    PrecompactnessProxy {
        precompact: range_bound.is_finite()
            && range_bound <= PROXY_BOUND
            && derivative_bound <= PROXY_BOUND
            && (growth_ratio <= PROXY_GROWTH || second <= floor),
        range_bound,
        derivative_bound,
        growth_ratio,
    }
}

/// The segments `u_t`, `θ ↦ u(t+θ)` on `[-r, 0]`, at each sample time.
pub fn segment_trajectory(u: &SampledSignal, r: f64, times: &[f64]) -> Result<Vec<HistorySegment>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("delay must be positive".into()));
    }
    times
        .iter()
        .map(|&t| {
            if t - r < u.t0() - GRID_TOL * u.dt() {
                return Err(Error::SampleBeforeDelay { t });
            }
            if t > u.end() + GRID_TOL * u.dt() {
                return Err(Error::WindowOutOfDomain {
                    a: t - r,
                    b: t,
                    lo: u.t0(),
                    hi: u.end(),
                });
            }
            let n = ((r / u.dt()) - GRID_TOL).ceil().max(1.0) as usize;
            let step = r / n as f64;
            let w = u.width();
            let mut values = vec![0.0; (n + 1) * w];
            for (k, chunk) in values.chunks_mut(w).enumerate() {
                let s = if k == n { t } else { t - r + k as f64 * step };
                u.value_at(s.clamp(u.t0(), u.end()), chunk)?;
            }
            HistorySegment::new(r, SampledSignal::new(-r, step, w, values)?)
        })
        .collect()
}

/// Sup-norm distance between two segments on a common grid.
pub fn segment_distance(a: &HistorySegment, b: &HistorySegment) -> Result<f64> {
    let w = Window::new(-a.r.min(b.r), 0.0)?;
    crate::signal::sup_distance(&a.samples, &b.samples, &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{integrate, Ivp, RhsSpec, SolverOptions};

    #[test]
    fn constant_history_gives_linear_start() {
        let rhs = DelayRhsSpec::builtin("delayed_decay").unwrap();
        let init = HistorySegment::constant(1.0, &[1.0]).unwrap();
        let u = integrate_dde(&rhs, &init, 3.0, 100).unwrap();
        for i in 0..=100 {
            assert!((u.scalar(i) - (1.0 - u.time(i))).abs() < 1e-8);
        }
        // Second interval: u = 1 - t + (t-1)^2/2.
        for i in (100..=200).step_by(7) {
            let t = u.time(i);
            assert!((u.scalar(i) - (1.0 - t + (t - 1.0).powi(2) / 2.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_keeps_head() {
        let rhs = DelayRhsSpec::from_exprs(&["0*z0"], vec![-0.5], BTreeMap::new(), None).unwrap();
        let init = HistorySegment::from_fn(0.5, 10, |t| 2.0 + t).unwrap();
        let u = integrate_dde(&rhs, &init, 2.0, 100).unwrap();
        assert!(u.scalars().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn zero_lag_matches_exponential_and_ode_solver() {
        let rhs = DelayRhsSpec::builtin("lag0_decay").unwrap();
        let init = HistorySegment::constant(1.0, &[1.0]).unwrap();
        let u = integrate_dde(&rhs, &init, 5.0, 100).unwrap();
        let worst = (0..u.len()).map(|i| (u.scalar(i) - (-u.time(i)).exp()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");

        let opts = SolverOptions::default();
        let ode = integrate(&Ivp::new(
            RhsSpec::builtin("decay").unwrap(),
            vec![1.0],
            Window::new(0.0, 5.0).unwrap(),
            opts,
        ))
        .unwrap();
        let gap = (ode.scalar(ode.len() - 1) - u.scalar(u.len() - 1)).abs();
        assert!(gap <= 10.0 * (opts.abs_tol + opts.rel_tol), "{gap}");
    }

    #[test]
    fn lags_are_validated() {
        let init = HistorySegment::constant(1.0, &[1.0]).unwrap();
        let long = DelayRhsSpec::from_exprs(&["-z0"], vec![-2.0], BTreeMap::new(), None).unwrap();
        assert!(matches!(integrate_dde(&long, &init, 1.0, 100), Err(Error::LagOutOfRange { .. })));
        let tiny = DelayRhsSpec::from_exprs(&["-z0"], vec![-1e-4], BTreeMap::new(), None).unwrap();
        assert!(matches!(integrate_dde(&tiny, &init, 1.0, 100), Err(Error::LagOutOfRange { .. })));
        assert!(DelayRhsSpec::from_exprs(&["-z0"], vec![0.5], BTreeMap::new(), None).is_err());
    }

    #[test]
    fn precompactness_examples() {
        let init = HistorySegment::constant(1.0, &[0.0]).unwrap();
        let rhs = DelayRhsSpec::builtin("decay_sin_delay").unwrap();
        let u = integrate_dde(&rhs, &init, 40.0, 100).unwrap();
        assert!(precompactness_proxy(&u, &rhs).precompact);

        let rhs = DelayRhsSpec::builtin("growth").unwrap();
        let init = HistorySegment::constant(1.0, &[1.0]).unwrap();
        let u = integrate_dde(&rhs, &init, 20.0, 100).unwrap();
        assert!(!precompactness_proxy(&u, &rhs).precompact);

        let c = SampledSignal::from_fn(0.0, 0.01, 1001, |_| 3.0).unwrap();
        let rhs = DelayRhsSpec::from_exprs(&["0*z0"], vec![-1.0], BTreeMap::new(), None).unwrap();
        assert!(precompactness_proxy(&c, &rhs).precompact);
    }

    #[test]
    fn segments() {
        let u = SampledSignal::from_fn(0.0, 0.01, 3001, f64::sin).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        let segs = segment_trajectory(&u, two_pi, &[7.0, 7.0 + two_pi, 10.0]).unwrap();
        assert!(segment_distance(&segs[0], &segs[1]).unwrap() < 1e-4);
        assert_eq!(*segs[2].head(), [u.scalar(1000)]);
        assert!(segment_distance(&segs[0], &segs[2]).unwrap() >= (u.scalar(700) - u.scalar(1000)).abs());
        assert!(matches!(segment_trajectory(&u, two_pi, &[1.0]), Err(Error::SampleBeforeDelay { .. })));

        let c = SampledSignal::from_fn(0.0, 0.1, 101, |_| 1.5).unwrap();
        let segs = segment_trajectory(&c, 2.0, &[2.0, 5.5, 10.0]).unwrap();
        assert_eq!(segment_distance(&segs[0], &segs[1]).unwrap(), 0.0);
    }
}
