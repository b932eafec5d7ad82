//! Non-autonomous ODEs `x' = g(t, x)`: integration, the dissipativity condition
//! `⟨Δ, g(t,x1) - g(t,x2)⟩ ≤ -κ|Δ|^α`, contraction and attraction bounds,
//! separation, hull families, fiber counts and stability probes.
//!
//! Shifting the equation along its hull (`g ↦ g^h`, `g^h(t, x) = g(t + h, x)`)
//! is a time offset on the right-hand side, so every family below is a set of
//! ordinary initial value problems.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{self, EntryKind};
use crate::error::{Error, Result};
use crate::expr::{Ctx, Expr, Scope};
use crate::signal::{sup_distance, SampledSignal, Window, GRID_TOL};

/// Right-hand side `g(t, x)` built from expressions, optionally reading a tabulated forcing.
#[derive(Clone, Debug)]
pub struct RhsSpec {
    pub label: String,
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
    /// Read by the expressions as `f0, f1, ...`.
    pub forcing: Option<SampledSignal>,
    /// Hull shift `h`: the equation is evaluated at `t + h`.
    pub time_offset: f64,
    sources: Vec<String>,
    exprs: Vec<Expr>,
}

impl RhsSpec {
    /// Catalog right-hand side with its default parameters.
    pub fn builtin(id: &str) -> Result<Self> {
        Self::builtin_with(id, &BTreeMap::new(), None)
    }

    /// Catalog right-hand side with parameter overrides and an optional forcing.
    pub fn builtin_with(
        id: &str,
        overrides: &BTreeMap<String, f64>,
        forcing: Option<SampledSignal>,
    ) -> Result<Self> {
        let entry = catalog::lookup(id)
            .filter(|e| e.kind == EntryKind::Rhs)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown right-hand side `{id}`")))?;
        let mut params: BTreeMap<String, f64> =
            entry.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        if entry.needs_forcing && forcing.is_none() {
            return Err(Error::InvalidArgument(format!("`{id}` needs a tabulated forcing")));
        }
        let mut rhs = Self::from_exprs(entry.exprs, params, forcing)?;
        rhs.label = id.to_string();
        Ok(rhs)
    }

    /// One expression per state component.
    pub fn from_exprs<S: AsRef<str>>(
        components: &[S],
        params: BTreeMap<String, f64>,
        forcing: Option<SampledSignal>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("right-hand side needs at least one component".into()));
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
        Ok(RhsSpec {
            label: components.iter().map(|c| c.as_ref()).collect::<Vec<_>>().join("; "),
            dim,
            params,
            forcing,
            time_offset: 0.0,
            sources: components.iter().map(|c| c.as_ref().to_string()).collect(),
            exprs,
        })
    }

    /// The equation along the hull at base point `h` further on.
    pub fn shifted(&self, h: f64) -> Self {
        RhsSpec {
            time_offset: self.time_offset + h,
            ..self.clone()
        }
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// Next kink of the tabulated forcing strictly after local time `t + eps`.
    fn next_breakpoint(&self, t: f64, eps: f64) -> Option<f64> {
        let sig = self.forcing.as_ref()?;
        let base = sig.t0() - self.time_offset;
        let j = ((t + eps - base) / sig.dt()).floor() + 1.0;
        Some(base + j * sig.dt())
    }

    pub fn is_autonomous(&self) -> bool {
        !self.exprs.iter().any(Expr::uses_time)
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let tt = t + self.time_offset;
        let mut fbuf = [0.0; 8];
        let f: &[f64] = match &self.forcing {
            Some(sig) => {
                let w = sig.width();
                if w > fbuf.len() {
                    return Err(Error::InvalidArgument("forcing wider than 8 components".into()));
                }
                sig.value_at(tt, &mut fbuf[..w])?;
                &fbuf[..w]
            }
            None => &[],
        };
        let ctx = Ctx { t: tt, x, f, z: &[] };
        for (o, e) in out.iter_mut().zip(&self.exprs) {
            *o = e.eval(&ctx);
            if !o.is_finite() {
                return Err(Error::NonFiniteRhs { t });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.05,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ivp {
    pub rhs: RhsSpec,
    pub x0: Vec<f64>,
    pub t_span: Window,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Ivp {
    pub fn new(rhs: RhsSpec, x0: Vec<f64>, t_span: Window, opts: SolverOptions) -> Self {
        Ivp {
            rhs,
            x0,
            t_span,
            rel_tol: opts.rel_tol,
            abs_tol: opts.abs_tol,
            max_step: opts.max_step,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(Error::InvalidArgument(format!("{name} = {tol} not in (0, 1e-2]")));
            }
        }
        if !(self.max_step > 0.0 && self.max_step.is_finite()) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        if self.t_span.is_empty() {
            return Err(Error::InvalidArgument("degenerate time span".into()));
        }
        if self.x0.len() != self.rhs.dim {
            return Err(Error::DimMismatch {
                left: self.x0.len(),
                right: self.rhs.dim,
            });
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("initial state is not finite".into()));
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau with the continuous extension of order 4.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn scaled_rms(v: &[f64], y: &[f64], atol: f64, rtol: f64) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(vi, yi)| {
            let r = vi / (atol + rtol * yi.abs());
            r * r
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

/// Uniform output grid for a span: `dt = min(max_step, span / 10^4)`, snapped so
/// that a whole number of steps fits.
pub fn output_grid(span: f64, max_step: f64) -> (usize, f64) {
    let target = max_step.min(span / 1e4);
    let n = ((span / target) - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

/// Adaptive Dormand–Prince 5(4) integration, resampled by dense output onto a uniform grid.
pub fn integrate(ivp: &Ivp) -> Result<SampledSignal> {
    ivp.validate()?;
    let d = ivp.rhs.dim;
    let (a, b) = (ivp.t_span.a, ivp.t_span.b);
    let (n_out, dt) = output_grid(b - a, ivp.max_step);
    let (rtol, atol) = (ivp.rel_tol, ivp.abs_tol);
    let f = |t: f64, y: &[f64], out: &mut [f64]| ivp.rhs.eval(t, y, out);

    let mut out = Vec::with_capacity((n_out + 1) * d);
    out.extend_from_slice(&ivp.x0);
    let mut next = 1usize;

    let mut y = ivp.x0.clone();
    let mut k = vec![vec![0.0; d]; 7];
    let mut tmp = vec![0.0; d];
    let mut ynew = vec![0.0; d];
    let mut err = vec![0.0; d];
    let mut cont = vec![vec![0.0; d]; 5];
    f(a, &y, &mut k[0])?;
    let mut t = a;
    let mut h = initial_step(&f, a, &y, &k[0], atol, rtol, ivp.max_step.min(b - a))?;
    let mut rejected = false;

    while next <= n_out {
        let h_min = 1e-13 * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        // Interpolated forcing is only continuous at its samples: end steps there
        // so each step sees a smooth right-hand side.
        let h_free = h;
        if let Some(bp) = ivp.rhs.next_breakpoint(t, 1e3 * h_min) {
            if bp < t + h {
                h = bp - t;
            }
        }
        if t + h > b || b - (t + h) < h_min {
            h = b - t;
        }
        for i in 0..d {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        f(t + C2 * h, &tmp, &mut k[1])?;
        for i in 0..d {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * h, &tmp, &mut k[2])?;
        for i in 0..d {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * h, &tmp, &mut k[3])?;
        for i in 0..d {
            tmp[i] =
                y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * h, &tmp, &mut k[4])?;
        for i in 0..d {
            tmp[i] = y[i]
                + h * (A61 * k[0][i]
                    + A62 * k[1][i]
                    + A63 * k[2][i]
                    + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        f(t + h, &tmp, &mut k[5])?;
        for i in 0..d {
            ynew[i] = y[i]
                + h * (A71 * k[0][i]
                    + A73 * k[2][i]
                    + A74 * k[3][i]
                    + A75 * k[4][i]
                    + A76 * k[5][i]);
        }
        f(t + h, &ynew, &mut k[6])?;
        for i in 0..d {
            err[i] = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
        }
        let big: Vec<f64> = y.iter().zip(&ynew).map(|(p, q)| p.abs().max(q.abs())).collect();
        let e = scaled_rms(&err, &big, atol, rtol);
        if !e.is_finite() {
            h *= 0.2;
            rejected = true;
            continue;
        }
        if e > 1.0 {
            h *= (0.9 * e.powf(-0.2)).max(0.2);
            rejected = true;
            continue;
        }
        let t_new = if b - (t + h) < h_min { b } else { t + h };
        for i in 0..d {
            let ydiff = ynew[i] - y[i];
            let bspl = h * k[0][i] - ydiff;
            cont[0][i] = y[i];
            cont[1][i] = ydiff;
            cont[2][i] = bspl;
            cont[3][i] = ydiff - h * k[6][i] - bspl;
            cont[4][i] = h
                * (D1 * k[0][i]
                    + D3 * k[2][i]
                    + D4 * k[3][i]
                    + D5 * k[4][i]
                    + D6 * k[5][i]
                    + D7 * k[6][i]);
        }
        while next <= n_out {
            let tg = if next == n_out { b } else { a + next as f64 * dt };
            if tg > t_new + GRID_TOL * dt {
                break;
            }
            let th = ((tg - t) / h).clamp(0.0, 1.0);
            let th1 = 1.0 - th;
            for i in 0..d {
                out.push(
                    cont[0][i]
                        + th * (cont[1][i]
                            + th1 * (cont[2][i] + th * (cont[3][i] + th1 * cont[4][i]))),
                );
            }
            next += 1;
        }
        t = t_new;
        y.copy_from_slice(&ynew);
        k.swap(0, 6);
        let mut fac = (0.9 * e.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
        if rejected {
            fac = fac.min(1.0);
            rejected = false;
        }
        if h < h_free {
            // A clipped step says nothing about the step size the solution allows.
            fac = fac.max(h_free.min(10.0 * h) / h);
        }
        h = (h * fac).min(ivp.max_step);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepSizeUnderflow { t, h });
    }
    Ok(SampledSignal::new(a, dt, d, out)?.with_label(ivp.rhs.label.clone()))
}

fn initial_step(
    f: &dyn Fn(f64, &[f64], &mut [f64]) -> Result<()>,
    t: f64,
    y: &[f64],
    f0: &[f64],
    atol: f64,
    rtol: f64,
    h_max: f64,
) -> Result<f64> {
    let d0 = scaled_rms(y, y, atol, rtol);
    let d1 = scaled_rms(f0, y, atol, rtol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(h_max);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_rms(&diff, y, atol, rtol) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(h_max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionHParams {
    pub kappa: f64,
    pub alpha: f64,
    /// Per-component `[lo, hi]`.
    pub sample_box: Vec<(f64, f64)>,
    pub n_pairs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ConditionHParams {
    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidArgument("kappa must be positive".into()));
        }
        if !(self.alpha > 2.0) {
            return Err(Error::InvalidArgument("alpha must exceed 2".into()));
        }
        if self.sample_box.len() != dim {
            return Err(Error::DimMismatch {
                left: self.sample_box.len(),
                right: dim,
            });
        }
        if self.sample_box.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidArgument("empty sample box".into()));
        }
        if self.n_pairs < 1000 {
            return Err(Error::InvalidArgument("at least 1000 sample pairs are required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HMargin {
    /// Smallest `-κ|Δ|^α - ⟨Δ, g(t,x1) - g(t,x2)⟩`; nonnegative means the
    /// condition held on every sample.
    pub margin: f64,
    pub worst_t: f64,
    pub worst_x1: Vec<f64>,
    pub worst_x2: Vec<f64>,
    pub n_samples: usize,
}

/// Samples the dissipativity condition on pseudo-random pairs (fixed seed) plus a
/// lattice, at each time in `t_samples`.
///
/// Margins within rounding of zero count as zero, so equality cases (such as
/// `x2 = -x1` for `-|x|x`) do not show up as spurious violations.
pub fn condition_h_margin(
    rhs: &RhsSpec,
    p: &ConditionHParams,
    t_samples: &[f64],
) -> Result<HMargin> {
    p.validate(rhs.dim)?;
    if t_samples.is_empty() {
        return Err(Error::InvalidArgument("no sample times".into()));
    }
    let d = rhs.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..p.n_pairs)
        .map(|_| {
            let mut draw = || -> Vec<f64> {
                p.sample_box.iter().map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo }).collect()
            };
            (draw(), draw())
        })
        .collect();
    let per_dim = (32f64.powf(1.0 / d as f64).floor() as usize).max(2);
    let lattice = lattice_points(&p.sample_box, per_dim);
    for (i, a) in lattice.iter().enumerate() {
        for b in &lattice[i + 1..] {
            pairs.push((a.clone(), b.clone()));
        }
    }
    let mut f1 = vec![0.0; d];
    let mut f2 = vec![0.0; d];
    let mut worst = HMargin {
        margin: f64::INFINITY,
        worst_t: t_samples[0],
        worst_x1: Vec::new(),
        worst_x2: Vec::new(),
        n_samples: pairs.len() * t_samples.len(),
    };
    for &t in t_samples {
        for (x1, x2) in &pairs {
            rhs.eval(t, x1, &mut f1)?;
            rhs.eval(t, x2, &mut f2)?;
            let mut r2 = 0.0;
            let mut inner = 0.0;
            let mut scale = 0.0;
            for i in 0..d {
                let di = x1[i] - x2[i];
                r2 += di * di;
                inner += di * (f1[i] - f2[i]);
                scale += (di * f1[i]).abs() + (di * f2[i]).abs();
            }
            if r2 == 0.0 {
                continue;
            }
            let bound = p.kappa * r2.sqrt().powf(p.alpha);
            let mut margin = -bound - inner;
            if margin.abs() <= 64.0 * f64::EPSILON * (bound + scale) {
                margin = 0.0;
            }
            if margin < worst.margin {
                worst.margin = margin;
                worst.worst_t = t;
                worst.worst_x1 = x1.clone();
                worst.worst_x2 = x2.clone();
            }
        }
    }
    Ok(worst)
}

fn lattice_points(bx: &[(f64, f64)], per_dim: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![Vec::new()];
    for &(lo, hi) in bx {
        let mut nextp = Vec::with_capacity(pts.len() * per_dim);
        for p in &pts {
            for k in 0..per_dim {
                let mut q = p.clone();
                q.push(lo + (hi - lo) * k as f64 / (per_dim - 1) as f64);
                nextp.push(q);
            }
        }
        pts = nextp;
    }
    pts
}

/// `ω_κ(t, r) = (r^{2-α} + κ(α-2)t)^{1/(2-α)}`: the separation reached after time
/// `t` from `r` under `d/dt |Δ|² ≤ -2κ|Δ|^α`.
pub fn contraction_modulus(t: f64, r: f64, kappa: f64, alpha: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    (r.powf(2.0 - alpha) + kappa * (alpha - 2.0) * t).powf(1.0 / (2.0 - alpha))
}

fn check_kappa_alpha(kappa: f64, alpha: f64) -> Result<()> {
    if !(kappa > 0.0 && alpha > 2.0) {
        return Err(Error::InvalidArgument(format!(
            "need kappa > 0 and alpha > 2, got {kappa}, {alpha}"
        )));
    }
    Ok(())
}

/// Time after which any two solutions starting `delta0` apart are within `eps`:
/// the solution of `ω_κ(L, delta0) = eps`, `L = (eps^{2-α} - delta0^{2-α}) / (κ(α-2))`.
pub fn attraction_time(delta0: f64, eps: f64, kappa: f64, alpha: f64) -> Result<f64> {
    check_kappa_alpha(kappa, alpha)?;
    if !(eps > 0.0) || eps >= delta0 {
        return Err(Error::BadOrder { eps, delta0 });
    }
    Ok((eps.powf(2.0 - alpha) - delta0.powf(2.0 - alpha)) / (kappa * (alpha - 2.0)))
}

/// `((delta0/eps)^{α-2} - 1) / (delta0 (α-2))`: the attraction time as often
/// written with the dissipation constant dropped. Coincides with
/// [`attraction_time`] for `κ = 1`, `α = 3`; kept for comparison only.
pub fn attraction_time_without_kappa(delta0: f64, eps: f64, alpha: f64) -> Result<f64> {
    check_kappa_alpha(1.0, alpha)?;
    if !(eps > 0.0) || eps >= delta0 {
        return Err(Error::BadOrder { eps, delta0 });
    }
    Ok(((delta0 / eps).powf(alpha - 2.0) - 1.0) / (delta0 * (alpha - 2.0)))
}

fn same_grid(a: &SampledSignal, b: &SampledSignal) -> Result<()> {
    let ok = a.len() == b.len()
        && a.width() == b.width()
        && (a.dt() - b.dt()).abs() <= GRID_TOL * a.dt()
        && (a.t0() - b.t0()).abs() <= GRID_TOL * a.dt();
    if ok {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "[{}, {}] step {} ({} pts) vs [{}, {}] step {} ({} pts)",
            a.t0(),
            a.end(),
            a.dt(),
            a.len(),
            b.t0(),
            b.end(),
            b.dt(),
            b.len()
        )))
    }
}

fn distance_at(a: &SampledSignal, b: &SampledSignal, i: usize) -> f64 {
    crate::signal::diff_norm(a.point(i), b.point(i))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub holds: bool,
    /// Largest `|Δ(t)| - ω_κ(t - t0, |Δ(t0)|)`, floored at 0.
    pub max_violation: f64,
    pub worst_t: f64,
}

/// Checks `|sol1(t) - sol2(t)| ≤ ω_κ(t - t0, |Δ(t0)|)` on the common grid, allowing
/// a violation up to `tolerance`.
pub fn contraction_bound_check(
    sol1: &SampledSignal,
    sol2: &SampledSignal,
    kappa: f64,
    alpha: f64,
    tolerance: f64,
) -> Result<ContractionCheck> {
    same_grid(sol1, sol2)?;
    check_kappa_alpha(kappa, alpha)?;
    let r0 = distance_at(sol1, sol2, 0);
    let mut worst = (0.0f64, sol1.t0());
    for i in 0..sol1.len() {
        let bound = contraction_modulus(sol1.time(i) - sol1.t0(), r0, kappa, alpha);
        let v = distance_at(sol1, sol2, i) - bound;
        if v > worst.0 {
            worst = (v, sol1.time(i));
        }
    }
    Ok(ContractionCheck {
        holds: worst.0 <= tolerance,
        max_violation: worst.0,
        worst_t: worst.1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationEstimate {
    pub inf: f64,
    pub at: f64,
}

/// Smallest pointwise distance between two solutions on the grid points in `w`.
pub fn separation_estimate(
    sol1: &SampledSignal,
    sol2: &SampledSignal,
    w: &Window,
) -> Result<SeparationEstimate> {
    same_grid(sol1, sol2)?;
    let (lo, hi) = sol1.index_range(w)?;
    let mut best = SeparationEstimate {
        inf: f64::INFINITY,
        at: w.a,
    };
    for i in lo..=hi {
        let d = distance_at(sol1, sol2, i);
        if d < best.inf {
            best = SeparationEstimate {
                inf: d,
                at: sol1.time(i),
            };
        }
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct HullSolution {
    pub shift: f64,
    pub x0_index: usize,
    pub solution: SampledSignal,
}

/// Solutions of the shifted equations `y' = g(t + h, y)` on `[0, horizon]` for every
/// `(h, x0)`, ordered by shift, then initial state.
pub fn hull_solutions(
    rhs: &RhsSpec,
    shifts: &[f64],
    x0s: &[Vec<f64>],
    horizon: f64,
    opts: SolverOptions,
) -> Result<Vec<HullSolution>> {
    if let Some(f) = &rhs.forcing {
        let need = rhs.time_offset + shifts.iter().copied().fold(0.0, f64::max) + horizon;
        if f.end() < need - GRID_TOL * f.dt() {
            return Err(Error::DomainTooShort {
                len: f.end(),
                need,
            });
        }
    }
    let span = Window::new(0.0, horizon)?;
    let mut out = Vec::with_capacity(shifts.len() * x0s.len());
    for &h in shifts {
        let g = rhs.shifted(h);
        for (j, x0) in x0s.iter().enumerate() {
            let solution = integrate(&Ivp::new(g.clone(), x0.clone(), span, opts))?;
            out.push(HullSolution {
                shift: h,
                x0_index: j,
                solution,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleCheck {
    pub tau: f64,
    pub t: f64,
    pub direct: Vec<f64>,
    pub composed: Vec<f64>,
    pub error: f64,
    /// Five times the solver tolerance at the size of the state.
    pub allowed: f64,
    pub holds: bool,
}

/// Compares `φ(τ + t, x0, g)` with `φ(t, φ(τ, x0, g), g^τ)`.
pub fn cocycle_check(
    rhs: &RhsSpec,
    x0: &[f64],
    tau: f64,
    t: f64,
    opts: SolverOptions,
) -> Result<CocycleCheck> {
    let last = |s: &SampledSignal| s.point(s.len() - 1).to_vec();
    let direct = last(&integrate(&Ivp::new(
        rhs.clone(),
        x0.to_vec(),
        Window::new(0.0, tau + t)?,
        opts,
    ))?);
    let mid = last(&integrate(&Ivp::new(rhs.clone(), x0.to_vec(), Window::new(0.0, tau)?, opts))?);
    let composed = last(&integrate(&Ivp::new(rhs.shifted(tau), mid, Window::new(0.0, t)?, opts))?);
    let error = crate::signal::diff_norm(&direct, &composed);
    let size = direct.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let allowed = 5.0 * (opts.abs_tol + opts.rel_tol * size);
    Ok(CocycleCheck {
        tau,
        t,
        holds: error <= allowed,
        direct,
        composed,
        error,
        allowed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberOptions {
    /// Transient discarded before comparing solutions.
    pub burn_in: f64,
    /// Length of the trailing comparison window.
    pub window: f64,
    pub cluster_tol: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberCount {
    /// Most frequent per-shift count (smallest on ties).
    pub m: usize,
    pub per_shift: Vec<usize>,
    pub constant: bool,
    /// Smallest distance between representatives of distinct clusters, if any.
    pub separation_min: Option<f64>,
    #[serde(skip)]
    pub representatives: Vec<Vec<SampledSignal>>,
}

/// Clusters, per base shift, the trailing segments of solutions started from each
/// initial state, and reports the number of clusters.
pub fn fiber_count(
    rhs: &RhsSpec,
    base_shifts: &[f64],
    x0s: &[Vec<f64>],
    opts: &FiberOptions,
) -> Result<FiberCount> {
    if base_shifts.is_empty() || x0s.is_empty() {
        return Err(Error::InvalidArgument("fiber count needs shifts and initial states".into()));
    }
    let horizon = opts.burn_in + opts.window;
    let sols = hull_solutions(rhs, base_shifts, x0s, horizon, opts.solver)?;
    let families: Vec<Vec<SampledSignal>> = sols
        .chunks(x0s.len())
        .map(|c| c.iter().map(|s| s.solution.clone()).collect())
        .collect();
    fiber_count_from_families(
        &families,
        &Window::new(opts.burn_in, horizon)?,
        opts.cluster_tol,
    )
}

/// Fiber count from precomputed solution families, one family per base point.
pub fn fiber_count_from_families(
    families: &[Vec<SampledSignal>],
    window: &Window,
    cluster_tol: f64,
) -> Result<FiberCount> {
    let mut per_shift = Vec::with_capacity(families.len());
    let mut representatives = Vec::with_capacity(families.len());
    let mut separation_min: Option<f64> = None;
    for fam in families {
        let mut reps: Vec<SampledSignal> = Vec::new();
        for sol in fam {
            let seg = sol.restrict(window)?;
            let w = seg.domain();
            let mut found = false;
            for r in &reps {
                if sup_distance(r, &seg, &w)? < cluster_tol {
                    found = true;
                    break;
                }
            }
            if !found {
                reps.push(seg);
            }
        }
        for i in 0..reps.len() {
            for j in i + 1..reps.len() {
                let d = sup_distance(&reps[i], &reps[j], &reps[i].domain())?;
                separation_min = Some(separation_min.map_or(d, |s: f64| s.min(d)));
            }
        }
        per_shift.push(reps.len());
        representatives.push(reps);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in &per_shift {
        *counts.entry(c).or_default() += 1;
    }
    let m = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(m, _)| *m)
        .unwrap_or(0);
    Ok(FiberCount {
        m,
        constant: per_shift.iter().all(|&c| c == m),
        per_shift,
        separation_min,
        representatives,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub restart_times: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub horizon: f64,
    /// Perturbation size for the attraction table.
    pub delta0: f64,
    /// `(κ, α)` when the dissipativity condition is known to hold.
    #[serde(default)]
    pub condition_h: Option<(f64, f64)>,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub eps: f64,
    /// Largest sampled δ whose perturbations stayed within `eps` throughout.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionRow {
    pub eps: f64,
    /// Latest re-entry time into the `eps`-tube over all restarts and perturbations.
    pub observed: Option<f64>,
    pub predicted: Option<f64>,
    /// `observed ≤ 1.1 × predicted`.
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbe {
    pub stability: Vec<StabilityRow>,
    pub attraction: Vec<AttractionRow>,
    pub uniformly_stable: bool,
    pub uniformly_attracting: bool,
}

/// Restarts the reference solution at each restart time, perturbs it by `±δ e_i`,
/// and records how far and for how long the perturbed solutions stray.
pub fn uniform_stability_probe(
    rhs: &RhsSpec,
    x_ref0: &[f64],
    opts: &StabilityOptions,
) -> Result<StabilityProbe> {
    if opts.restart_times.iter().any(|s| *s < 0.0) {
        return Err(Error::InvalidArgument("restart times must be nonnegative".into()));
    }
    if !(opts.horizon > 0.0) || !(opts.delta0 > 0.0) {
        return Err(Error::InvalidArgument("horizon and delta0 must be positive".into()));
    }
    let span = Window::new(0.0, opts.horizon)?;
    let mut restarts = Vec::with_capacity(opts.restart_times.len());
    for &s in &opts.restart_times {
        let state = if s == 0.0 {
            x_ref0.to_vec()
        } else {
            let sol = integrate(&Ivp::new(rhs.clone(), x_ref0.to_vec(), Window::new(0.0, s)?, opts.solver))?;
            sol.point(sol.len() - 1).to_vec()
        };
        let g = rhs.shifted(s);
        let reference = integrate(&Ivp::new(g.clone(), state.clone(), span, opts.solver))?;
        restarts.push((g, state, reference));
    }
    // Distance curves of all perturbed runs of size `delta`.
    let runs = |delta: f64| -> Result<Vec<Vec<f64>>> {
        let mut curves = Vec::new();
        for (g, state, reference) in &restarts {
            for i in 0..rhs.dim {
                for sign in [1.0, -1.0] {
                    let mut x = state.clone();
                    x[i] += sign * delta;
                    let sol = integrate(&Ivp::new(g.clone(), x, span, opts.solver))?;
                    curves.push((0..sol.len()).map(|k| distance_at(&sol, reference, k)).collect());
                }
            }
        }
        Ok(curves)
    };
    let mut deltas = opts.delta_grid.clone();
    deltas.sort_by(f64::total_cmp);
    let mut sups = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        let curves = runs(d)?;
        sups.push(curves.iter().flatten().copied().fold(0.0, f64::max));
    }
    let stability: Vec<StabilityRow> = opts
        .eps_grid
        .iter()
        .map(|&eps| StabilityRow {
            eps,
            delta: deltas
                .iter()
                .zip(&sups)
                .filter(|(_, s)| **s <= eps * (1.0 + 1e-6))
                .map(|(d, _)| *d)
                .next_back(),
        })
        .collect();
    let curves = runs(opts.delta0)?;
    let dt = restarts.first().map_or(1.0, |r| r.2.dt());
    let mut attraction = Vec::with_capacity(opts.eps_grid.len());
    for &eps in &opts.eps_grid {
        let mut latest = Some(0.0f64);
        for c in &curves {
            let re_entry = match c.iter().rposition(|d| *d >= eps) {
                None => Some(0.0),
                Some(k) if k + 1 < c.len() => Some((k + 1) as f64 * dt),
                Some(_) => None,
            };
            latest = match (latest, re_entry) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        let predicted = match opts.condition_h {
            Some((kappa, alpha)) if eps < opts.delta0 => {
                Some(attraction_time(opts.delta0, eps, kappa, alpha)?)
            }
            Some(_) => Some(0.0),
            None => None,
        };
        let within_bound = match (latest, predicted) {
            (Some(o), Some(p)) => Some(o <= 1.1 * p + dt),
            (None, Some(_)) => Some(false),
            _ => None,
        };
        attraction.push(AttractionRow {
            eps,
            observed: latest,
            predicted,
            within_bound,
        });
    }
    Ok(StabilityProbe {
        uniformly_stable: stability.iter().all(|r| r.delta.is_some()),
        uniformly_attracting: attraction.iter().all(|r| r.observed.is_some()),
        stability,
        attraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(rhs: &RhsSpec, x0: f64, t1: f64, opts: SolverOptions) -> SampledSignal {
        integrate(&Ivp::new(rhs.clone(), vec![x0], Window::new(0.0, t1).unwrap(), opts)).unwrap()
    }

    #[test]
    fn tabulated_forcing_steps_stop_at_samples() {
        // x' = f with f(t) = |t - 0.5| tabulated at 0.1: the solution is exact
        // piecewise quadratic once every step stays between two samples.
        let f = SampledSignal::from_fn(0.0, 0.1, 31, |t| (t - 0.5).abs()).unwrap();
        let rhs = RhsSpec::from_exprs(&["f0"], BTreeMap::new(), Some(f)).unwrap();
        let x = solve(&rhs, 0.0, 2.97, SolverOptions::default());
        let exact = |t: f64| if t < 0.5 { 0.5 * t - 0.5 * t * t } else { 0.125 + 0.5 * (t - 0.5).powi(2) };
        let last = x.len() - 1;
        assert!((x.scalar(last) - exact(2.97)).abs() < 1e-12);
        let c = cocycle_check(&rhs, &[0.3], 0.73, 1.9, SolverOptions::default()).unwrap();
        assert!(c.error < 1e-12, "{}", c.error);
    }

    fn tight() -> SolverOptions {
        SolverOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
        }
    }

    fn last(s: &SampledSignal) -> f64 {
        s.scalar(s.len() - 1)
    }

    #[test]
    fn linear_decay_matches_exponential() {
        let s = solve(&RhsSpec::builtin("decay").unwrap(), 1.0, 10.0, SolverOptions::default());
        assert!((last(&s) - (-10f64).exp()).abs() < 1e-7);
        assert!((s.end() - 10.0).abs() < 1e-12);
        assert!((s.dt() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs_keeps_constant() {
        let s = solve(&RhsSpec::builtin("zero").unwrap(), 0.37, 5.0, SolverOptions::default());
        assert!(s.scalars().iter().all(|v| *v == 0.37));
    }

    #[test]
    fn cubic_decay_matches_closed_form() {
        let s = solve(&RhsSpec::builtin("cubic").unwrap(), 1.0, 9.0, tight());
        assert!((last(&s) - 0.1).abs() < 1e-6);
        for i in (0..s.len()).step_by(97) {
            assert!((s.scalar(i) - 1.0 / (1.0 + s.time(i))).abs() < 1e-8);
        }
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let opts = SolverOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1.0,
        };
        let rhs = RhsSpec::from_exprs(&["cos(t)"], BTreeMap::new(), None).unwrap();
        let s = solve(&rhs, 0.0, 20.0, opts);
        let worst = (0..s.len()).map(|i| (s.scalar(i) - s.time(i).sin()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn blow_up_is_an_error() {
        let rhs = RhsSpec::from_exprs(&["x0 * x0"], BTreeMap::new(), None).unwrap();
        let r = integrate(&Ivp::new(rhs, vec![1.0], Window::new(0.0, 2.0).unwrap(), SolverOptions::default()));
        assert!(matches!(r, Err(Error::StepSizeUnderflow { .. }) | Err(Error::NonFiniteRhs { .. })), "{r:?}");
    }

    #[test]
    fn tolerances_are_validated() {
        let rhs = RhsSpec::builtin("decay").unwrap();
        let bad = SolverOptions {
            rel_tol: 0.1,
            ..SolverOptions::default()
        };
        let r = integrate(&Ivp::new(rhs, vec![1.0], Window::new(0.0, 1.0).unwrap(), bad));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    fn box_params(r: f64, kappa: f64) -> ConditionHParams {
        ConditionHParams {
            kappa,
            alpha: 3.0,
            sample_box: vec![(-r, r)],
            n_pairs: 2000,
            seed: 7,
        }
    }

    #[test]
    fn condition_h_examples() {
        let ts = [0.0, 1.3, 7.0];
        let heq = RhsSpec::builtin("heq1").unwrap();
        assert!(condition_h_margin(&heq, &box_params(10.0, 0.5), &ts).unwrap().margin >= 0.0);
        let lin = RhsSpec::builtin("decay").unwrap();
        assert!(condition_h_margin(&lin, &box_params(0.1, 0.5), &ts).unwrap().margin >= 0.0);
        assert!(condition_h_margin(&lin, &box_params(10.0, 0.5), &ts).unwrap().margin < 0.0);
        let zero = RhsSpec::builtin("zero").unwrap();
        assert!(condition_h_margin(&zero, &box_params(1.0, 0.5), &ts).unwrap().margin < 0.0);
        let mut few = box_params(1.0, 0.5);
        few.n_pairs = 10;
        assert!(condition_h_margin(&zero, &few, &ts).is_err());
    }

    #[test]
    fn attraction_time_closed_form() {
        assert!((attraction_time(1.0, 0.1, 1.0, 3.0).unwrap() - 9.0).abs() < 1e-12);
        assert!((attraction_time(1.0, 0.1, 0.5, 3.0).unwrap() - 18.0).abs() < 1e-12);
        assert!(attraction_time(1.0, 1.0 - 1e-12, 0.5, 3.0).unwrap() < 1e-10);
        assert!(matches!(attraction_time(1.0, 1.0, 0.5, 3.0), Err(Error::BadOrder { .. })));
        assert!((attraction_time_without_kappa(1.0, 0.1, 3.0).unwrap() - 9.0).abs() < 1e-12);
        let l = attraction_time(2.0, 0.3, 0.7, 3.5).unwrap();
        assert!((contraction_modulus(l, 2.0, 0.7, 3.5) - 0.3).abs() < 1e-12);
        assert_eq!(contraction_modulus(0.0, 1.7, 0.5, 3.0), 1.7);
    }

    #[test]
    fn contraction_and_separation() {
        let rhs = RhsSpec::builtin("cubic").unwrap();
        let a = solve(&rhs, 0.0, 100.0, tight());
        let b = solve(&rhs, 2.0, 100.0, tight());
        let c = contraction_bound_check(&a, &b, 0.5, 3.0, 1e-6).unwrap();
        assert!(c.holds, "{c:?}");
        assert!(contraction_bound_check(&a, &a, 0.5, 3.0, 0.0).unwrap().holds);
        let short = solve(&rhs, 0.0, 50.0, tight());
        assert!(matches!(contraction_bound_check(&a, &short, 0.5, 3.0, 0.0), Err(Error::GridMismatch(_))));

        let rhs = RhsSpec::builtin("decay_sin").unwrap();
        let a = solve(&rhs, 0.0, 10.0, tight());
        let b = solve(&rhs, 1.0, 10.0, tight());
        let sep = separation_estimate(&a, &b, &Window::new(0.0, 10.0).unwrap()).unwrap();
        assert!((sep.inf - (-10f64).exp()).abs() < 1e-7);
        assert_eq!(separation_estimate(&a, &a, &a.domain()).unwrap().inf, 0.0);
    }

    #[test]
    fn cocycle_identity() {
        for id in ["decay_sin", "heq1", "cubic_sin", "decay_remote"] {
            let rhs = RhsSpec::builtin(id).unwrap();
            let c = cocycle_check(&rhs, &[0.7], 3.3, 5.1, SolverOptions::default()).unwrap();
            assert!(c.holds, "{id}: {c:?}");
        }
    }

    #[test]
    fn hull_solutions_shift_and_autonomy() {
        let rhs = RhsSpec::builtin("decay_sin").unwrap();
        let opts = SolverOptions::default();
        let sols = hull_solutions(&rhs, &[0.0, 1.0], &[vec![0.5]], 5.0, opts).unwrap();
        let direct = solve(&rhs, 0.5, 5.0, opts);
        assert_eq!(sols[0].solution, direct);
        assert_ne!(sols[1].solution, direct);
        let auto = RhsSpec::builtin("cubic").unwrap();
        let sols = hull_solutions(&auto, &[0.0, 3.0, 10.0], &[vec![1.0]], 5.0, opts).unwrap();
        assert_eq!(sols[0].solution, sols[2].solution);
        assert!(auto.is_autonomous() && !rhs.is_autonomous());
    }

    #[test]
    fn fiber_counts() {
        let opts = FiberOptions {
            burn_in: 20.0,
            window: 10.0,
            cluster_tol: 1e-3,
            solver: SolverOptions::default(),
        };
        let x0s = vec![vec![-2.0], vec![0.0], vec![2.0]];
        let f = fiber_count(&RhsSpec::builtin("decay_sin").unwrap(), &[0.0, 1.0, 2.5], &x0s, &opts).unwrap();
        assert_eq!(f.m, 1);
        assert!(f.constant);
        let rep = &f.representatives[0][0];
        for i in 0..rep.len() {
            let t = rep.time(i);
            assert!((rep.scalar(i) - (t.sin() - t.cos()) / 2.0).abs() < 1e-6);
        }
        let z = fiber_count(&RhsSpec::builtin("zero").unwrap(), &[0.0, 1.0], &[vec![0.0], vec![1.0]], &opts).unwrap();
        assert_eq!(z.m, 2);
        assert!((z.separation_min.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_probe_linear_and_neutral() {
        let opts = StabilityOptions {
            restart_times: vec![0.0, 3.0, 10.0],
            delta_grid: vec![0.01, 0.05, 0.1, 0.2],
            eps_grid: vec![0.1],
            horizon: 15.0,
            delta0: 1.0,
            condition_h: None,
            solver: SolverOptions::default(),
        };
        let p = uniform_stability_probe(&RhsSpec::builtin("decay_sin").unwrap(), &[0.0], &opts).unwrap();
        assert_eq!(p.stability[0].delta, Some(0.1));
        let l = p.attraction[0].observed.unwrap();
        assert!((l - 10f64.ln()).abs() < 0.1 * 10f64.ln(), "{l}");
        let z = uniform_stability_probe(&RhsSpec::builtin("zero").unwrap(), &[0.0], &opts).unwrap();
        assert!(z.uniformly_stable && !z.uniformly_attracting);
    }
}
