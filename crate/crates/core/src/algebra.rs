//! Monic polynomial equations `x^n + a_1(t) x^{n-1} + ... + a_n(t) = 0` with
//! sampled coefficients: roots, discriminant, continuous branches, separation and
//! recurrence of the branches.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::catalog::{self, EntryKind};
use crate::error::{Error, Result};
use crate::expr::sample_in_t;
use crate::recurrence::{classify, RecurrenceReport, Thresholds};
use crate::signal::{SampledSignal, Window, GRID_TOL};

/// Coefficients `a_1, ..., a_n` of a monic polynomial on a common grid.
#[derive(Clone, Debug)]
pub struct PolyPath {
    pub coeffs: Vec<SampledSignal>,
    pub label: String,
}

impl PolyPath {
    pub fn new(coeffs: Vec<SampledSignal>, label: impl Into<String>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidArgument("polynomial needs degree at least 1".into()))?;
        for c in &coeffs {
            if c.dim() != 1 {
                return Err(Error::DimMismatch {
                    left: c.dim(),
                    right: 1,
                });
            }
            let same = c.len() == first.len()
                && (c.dt() - first.dt()).abs() <= GRID_TOL * first.dt()
                && (c.t0() - first.t0()).abs() <= GRID_TOL * first.dt();
            if !same {
                return Err(Error::GridMismatch(format!(
                    "coefficient grids differ: [{}, {}] vs [{}, {}]",
                    first.t0(),
                    first.end(),
                    c.t0(),
                    c.end()
                )));
            }
        }
        Ok(PolyPath {
            coeffs,
            label: label.into(),
        })
    }

    /// Samples coefficient expressions in `t` on `[w.a, w.b]` with step `dt`.
    pub fn from_exprs<S: AsRef<str>>(
        exprs: &[S],
        params: &BTreeMap<String, f64>,
        w: &Window,
        dt: f64,
    ) -> Result<Self> {
        let coeffs = exprs
            .iter()
            .map(|src| sample_in_t(src.as_ref(), params, w, dt))
            .collect::<Result<Vec<_>>>()?;
        let label = exprs.iter().map(|e| e.as_ref()).collect::<Vec<_>>().join(", ");
        Self::new(coeffs, label)
    }

    pub fn builtin(id: &str, w: &Window, dt: f64) -> Result<Self> {
        let entry = catalog::lookup(id)
            .filter(|e| e.kind == EntryKind::Poly)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown polynomial path `{id}`")))?;
        let params = entry.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let mut p = Self::from_exprs(entry.exprs, &params, w, dt)?;
        p.label = id.to_string();
        Ok(p)
    }

    /// Constant coefficients on `n` grid points.
    pub fn constant(coeffs: &[Complex64], t0: f64, dt: f64, n: usize) -> Result<Self> {
        let cs = coeffs
            .iter()
            .map(|&a| SampledSignal::from_fn_complex(t0, dt, n, |_| a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cs, "constant")
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn len(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs[0].is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.coeffs[0].time(i)
    }

    /// `a_1(t_i), ..., a_n(t_i)`.
    pub fn coeffs_at(&self, i: usize) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.complex_at(i)).collect()
    }
}

/// `A = max |a_k|`.
fn coeff_bound(a: &[Complex64]) -> f64 {
    a.iter().fold(0.0, |m, c| m.max(c.norm()))
}

/// `P(z)` and `P'(z)` by Horner's rule.
fn horner(a: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in a {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

const ABERTH_ITERS: usize = 500;

/// All roots of `x^n + a_1 x^{n-1} + ... + a_n`, with multiplicity, sorted by (re, im).
///
/// Simultaneous Aberth–Ehrlich iteration from a rotated circle of radius `1 + A`
/// (which encloses every root), then Newton polishing of each root.
pub fn roots_of(a: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidArgument("polynomial needs degree at least 1".into()));
    }
    let big = coeff_bound(a);
    if a.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteValue { t });
    }
    let radius = 1.0 + big;
    let tol = 1e-10 * radius.powi(n as i32);
    let mut z: Vec<Complex64> = if big == 0.0 {
        vec![Complex64::new(0.0, 0.0); n]
    } else {
        (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                Complex64::from_polar(radius, angle)
            })
            .collect()
    };
    if big > 0.0 {
        for _ in 0..ABERTH_ITERS {
            let mut moved = 0.0f64;
            for i in 0..n {
                let (p, dp) = horner(a, z[i]);
                if p == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = p / dp;
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let d = z[i] - z[j];
                        if d == Complex64::new(0.0, 0.0) {
                            Complex64::new(0.0, 0.0)
                        } else {
                            d.inv()
                        }
                    })
                    .sum();
                let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if w.is_finite() {
                    z[i] -= w;
                    moved = moved.max(w.norm());
                }
            }
            if moved <= 1e-15 * radius {
                break;
            }
        }
        for zi in &mut z {
            for _ in 0..3 {
                let (p, dp) = horner(a, *zi);
                let step = p / dp;
                let cand = *zi - step;
                if step.is_finite() && horner(a, cand).0.norm() < p.norm() {
                    *zi = cand;
                } else {
                    break;
                }
            }
        }
    }
    let residual = z.iter().map(|&zi| horner(a, zi).0.norm()).fold(0.0, f64::max);
    if !(residual <= tol) {
        return Err(Error::NonConvergence { t, residual });
    }
    z.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(z)
}

/// Roots at grid point `i`.
pub fn roots_at(p: &PolyPath, i: usize) -> Result<Vec<Complex64>> {
    roots_of(&p.coeffs_at(i), p.time(i))
}

/// `∏_{i≠j} (λ_i - λ_j)` over ordered pairs.
pub fn discriminant_of_roots(roots: &[Complex64]) -> Complex64 {
    let mut d = Complex64::new(1.0, 0.0);
    for (i, a) in roots.iter().enumerate() {
        for (j, b) in roots.iter().enumerate() {
            if i != j {
                d *= a - b;
            }
        }
    }
    d
}

/// Discriminant at every grid point.
pub fn discriminant_signal(p: &PolyPath) -> Result<SampledSignal> {
    let values = (0..p.len())
        .map(|i| roots_at(p, i).map(|r| discriminant_of_roots(&r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledSignal::new_complex(p.time(0), p.coeffs[0].dt(), 1, values)?.with_label("discriminant"))
}

/// Minimum-cost perfect matching on a square cost matrix; `result[i]` is the column of row `i`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// One continuation step: branch `i` moved to root `assignment[i]` of the new time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchStep {
    pub t: f64,
    pub assignment: Vec<usize>,
    pub max_motion: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RootBranches {
    #[serde(skip)]
    pub branches: Vec<SampledSignal>,
    pub residual_max: f64,
    #[serde(skip)]
    pub discriminant: SampledSignal,
    pub separation_min: f64,
    pub separation_argmin: f64,
    pub inf_abs_d: f64,
    pub inf_abs_d_at: f64,
    /// Intervals where continuation was not justified; empty for a complete set of branches.
    pub collisions: Vec<(f64, f64)>,
    #[serde(skip)]
    pub matching_log: Vec<MatchStep>,
}

/// Continues the roots along the grid by optimal assignment between consecutive
/// root sets. Fails with every offending interval when a step moves a root by
/// half the current separation or more, or when `|D|` drops below `1e-8 (1+A)^{n(n-1)}`.
pub fn track_branches(p: &PolyPath) -> Result<RootBranches> {
    let rb = track_branches_through(p)?;
    if rb.collisions.is_empty() {
        Ok(rb)
    } else {
        Err(Error::BranchCollision {
            intervals: rb.collisions,
        })
    }
}

fn min_separation(r: &[Complex64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            m = m.min((r[i] - r[j]).norm());
        }
    }
    m
}

/// As [`track_branches`], but keeps continuing across problem intervals and lists
/// them in `collisions`; branches are only provisional inside those intervals.
pub fn track_branches_through(p: &PolyPath) -> Result<RootBranches> {
    let n = p.degree();
    let len = p.len();
    let mut values: Vec<Vec<Complex64>> = vec![Vec::with_capacity(len); n];
    let mut disc = Vec::with_capacity(len);
    let mut log = Vec::with_capacity(len.saturating_sub(1));
    let mut residual_max = 0.0f64;
    let mut sep = (f64::INFINITY, p.time(0));
    let mut inf_d = (f64::INFINITY, p.time(0));
    let mut collisions: Vec<(f64, f64)> = Vec::new();
    let flag = |a: f64, b: f64, collisions: &mut Vec<(f64, f64)>| match collisions.last_mut() {
        Some(last) if last.1 >= a - GRID_TOL * (b - a).abs() => last.1 = last.1.max(b),
        _ => collisions.push((a, b)),
    };
    let mut prev: Vec<Complex64> = Vec::new();
    for i in 0..len {
        let t = p.time(i);
        let a = p.coeffs_at(i);
        let roots = roots_of(&a, t)?;
        let current: Vec<Complex64> = if i == 0 {
            roots
        } else {
            let cost: Vec<Vec<f64>> = prev
                .iter()
                .map(|x| roots.iter().map(|y| (x - y).norm()).collect())
                .collect();
            let assignment = hungarian(&cost);
            let next: Vec<Complex64> = assignment.iter().map(|&j| roots[j]).collect();
            let max_motion = prev.iter().zip(&next).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            if n > 1 && max_motion >= 0.5 * min_separation(&prev) {
                flag(p.time(i - 1), t, &mut collisions);
            }
            log.push(MatchStep {
                t,
                assignment,
                max_motion,
            });
            next
        };
        for (k, &z) in current.iter().enumerate() {
            residual_max = residual_max.max(horner(&a, z).0.norm());
            values[k].push(z);
        }
        let d = discriminant_of_roots(&current);
        let scale = (1.0 + coeff_bound(&a)).powi((n * (n - 1)) as i32);
        if n > 1 && d.norm() < 1e-8 * scale {
            let lo = if i > 0 { p.time(i - 1) } else { t };
            let hi = if i + 1 < len { p.time(i + 1) } else { t };
            flag(lo, hi, &mut collisions);
        }
        if d.norm() < inf_d.0 {
            inf_d = (d.norm(), t);
        }
        let s = min_separation(&current);
        if s < sep.0 {
            sep = (s, t);
        }
        disc.push(d);
        prev = current;
    }
    let (t0, dt) = (p.time(0), p.coeffs[0].dt());
    let branches = values
        .into_iter()
        .enumerate()
        .map(|(k, v)| Ok(SampledSignal::new_complex(t0, dt, 1, v)?.with_label(format!("{}#{k}", p.label))))
        .collect::<Result<Vec<_>>>()?;
    Ok(RootBranches {
        branches,
        residual_max,
        discriminant: SampledSignal::new_complex(t0, dt, 1, disc)?.with_label("discriminant"),
        separation_min: if n > 1 { sep.0 } else { f64::INFINITY },
        separation_argmin: sep.1,
        inf_abs_d: inf_d.0,
        inf_abs_d_at: inf_d.1,
        collisions,
        matching_log: log,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootBound {
    pub holds: bool,
    /// Largest `|λ_i(t)| - (1 + A(t))`.
    pub max_excess: f64,
    pub max_abs_root: f64,
}

/// Checks `|λ_i(t)| ≤ 1 + max_k |a_k(t)|` at every grid point.
pub fn root_bound_check(rb: &RootBranches, p: &PolyPath) -> RootBound {
    let mut excess = f64::NEG_INFINITY;
    let mut max_abs = 0.0f64;
    for i in 0..p.len() {
        let bound = 1.0 + coeff_bound(&p.coeffs_at(i));
        for b in &rb.branches {
            let r = b.complex_at(i).norm();
            max_abs = max_abs.max(r);
            excess = excess.max(r - bound);
        }
    }
    RootBound {
        holds: excess <= 0.0,
        max_excess: excess,
        max_abs_root: max_abs,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationCertificate {
    pub holds: bool,
    pub alpha_claim: f64,
    pub separation_min: f64,
    pub argmin: f64,
    pub inf_abs_d: f64,
    pub inf_abs_d_at: f64,
}

/// Checks `|λ_i(t) - λ_j(t)| ≥ alpha_claim` for all `i ≠ j` and grid `t`.
pub fn separation_certificate(rb: &RootBranches, alpha_claim: f64) -> SeparationCertificate {
    SeparationCertificate {
        holds: rb.separation_min >= alpha_claim,
        alpha_claim,
        separation_min: rb.separation_min,
        argmin: rb.separation_argmin,
        inf_abs_d: rb.inf_abs_d,
        inf_abs_d_at: rb.inf_abs_d_at,
    }
}

/// Recurrence report of every branch.
pub fn classify_branches(rb: &RootBranches, th: &Thresholds) -> Result<Vec<RecurrenceReport>> {
    rb.branches.iter().map(|b| classify(b, th)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ZhikovReport {
    pub with_decay: bool,
    pub inf_abs_p: f64,
    pub inf_abs_p_at: f64,
    /// `inf |D|` over the first and second half of the window.
    pub inf_abs_d_halves: [f64; 2],
    /// `|D|` stayed above `floor` and did not keep decreasing across the window.
    pub discriminant_bounded_below: bool,
    /// `floor_fraction` times the median `|D|`; values below count as near zero.
    pub floor: f64,
    pub collisions: Vec<(f64, f64)>,
    /// Branches were continued across collisions.
    pub provisional: bool,
    pub branch_reports: Vec<RecurrenceReport>,
    #[serde(skip)]
    pub branches: Option<RootBranches>,
}

/// Forms `x^2 - p(t) = 0` with `p = f` or `p = f + e^{-t}`, tracks the two branches,
/// and sets the lower bound of `|p|` against the recurrence of the branches.
///
/// The discriminant is `-4p`. It counts as bounded below when its infimum stays
/// above `floor_fraction` times its median and the second half of the window
/// does not push it below half the first-half infimum.
pub fn zhikov_pipeline(
    f: &SampledSignal,
    with_decay: bool,
    floor_fraction: f64,
    th: &Thresholds,
) -> Result<ZhikovReport> {
    if f.dim() != 1 {
        return Err(Error::DimMismatch {
            left: f.dim(),
            right: 1,
        });
    }
    let pv: Vec<Complex64> = (0..f.len())
        .map(|i| {
            let decay = if with_decay { (-f.time(i)).exp() } else { 0.0 };
            f.complex_at(i) + decay
        })
        .collect();
    let (inf_abs_p, inf_abs_p_at) = pv
        .iter()
        .enumerate()
        .map(|(i, z)| (z.norm(), f.time(i)))
        .fold((f64::INFINITY, f.t0()), |a, b| if b.0 < a.0 { b } else { a });
    let a2 = SampledSignal::new_complex(f.t0(), f.dt(), 1, pv.iter().map(|z| -z).collect())?;
    let a1 = SampledSignal::new_complex(f.t0(), f.dt(), 1, vec![Complex64::new(0.0, 0.0); f.len()])?;
    let path = PolyPath::new(vec![a1, a2], "x^2 - p")?;
    let rb = track_branches_through(&path)?;
    let mid = f.len() / 2;
    let half_inf = |lo: usize, hi: usize| (lo..hi).map(|i| 4.0 * pv[i].norm()).fold(f64::INFINITY, f64::min);
    let halves = [half_inf(0, mid.max(1)), half_inf(mid, f.len())];
    let mut abs_d: Vec<f64> = pv.iter().map(|z| 4.0 * z.norm()).collect();
    abs_d.sort_by(f64::total_cmp);
    let floor = floor_fraction * abs_d[abs_d.len() / 2];
    let bounded = 4.0 * inf_abs_p >= floor && halves[1] >= 0.5 * halves[0];
    let branch_reports = classify_branches(&rb, th)?;
    Ok(ZhikovReport {
        with_decay,
        inf_abs_p,
        inf_abs_p_at,
        inf_abs_d_halves: halves,
        discriminant_bounded_below: bounded,
        floor,
        provisional: !rb.collisions.is_empty(),
        collisions: rb.collisions.clone(),
        branch_reports,
        branches: Some(rb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_small_polynomials() {
        let r = roots_of(&[c(0.0, 0.0), c(1.0, 0.0)], 0.0).unwrap();
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-12 && (r[1] - c(0.0, 1.0)).norm() < 1e-12);
        let r = roots_of(&[c(-3.0, 0.0), c(2.0, 0.0)], 0.0).unwrap();
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-12 && (r[1] - c(2.0, 0.0)).norm() < 1e-12);
        let r = roots_of(&[c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)], 0.0).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(((r[i] - r[j]).norm() - 3f64.sqrt()).abs() < 1e-10);
            }
        }
        assert_eq!(roots_of(&[c(0.0, 0.0); 4], 0.0).unwrap(), vec![c(0.0, 0.0); 4]);
    }

    #[test]
    fn discriminant_conventions() {
        assert!((discriminant_of_roots(&[c(1.0, 0.0), c(-1.0, 0.0)]) - c(-4.0, 0.0)).norm() < 1e-15);
        let r = roots_of(&[c(0.0, 0.0), c(0.0, 0.0)], 0.0).unwrap();
        assert!(discriminant_of_roots(&r).norm() < 1e-12);
        // Quadratic oracle: D = -(a1^2 - 4 a2).
        let a = [c(0.7, -0.2), c(-1.3, 0.4)];
        let d = discriminant_of_roots(&roots_of(&a, 0.0).unwrap());
        assert!((d + (a[0] * a[0] - 4.0 * a[1])).norm() < 1e-10);
    }

    #[test]
    fn hungarian_finds_optimum() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        assert_eq!(hungarian(&cost), vec![1, 0, 2]);
    }

    #[test]
    fn separated_quadratic_branches() {
        let p = PolyPath::builtin("sep_quadratic", &Window::new(0.0, 200.0).unwrap(), 0.05).unwrap();
        let rb = track_branches(&p).unwrap();
        assert!(rb.residual_max <= 1e-10);
        assert!(rb.separation_min >= 2.0 - 1e-9);
        assert!(rb.inf_abs_d >= 4.0 - 1e-9);
        for i in (0..p.len()).step_by(37) {
            let t = p.time(i);
            let f = 3.0 + t.sin() + (2f64.sqrt() * t).sin();
            assert!((rb.branches[1].complex_at(i) - c(f.sqrt(), 0.0)).norm() < 1e-10);
            assert!((rb.discriminant.complex_at(i) - c(-4.0 * f, 0.0)).norm() < 1e-9 * f);
        }
        let bound = root_bound_check(&rb, &p);
        assert!(bound.holds && bound.max_abs_root <= 5f64.sqrt() + 1e-9);
        assert!(separation_certificate(&rb, 2.0 - 1e-9).holds);
        let fail = separation_certificate(&rb, 2.5);
        let f_at = 3.0 + fail.argmin.sin() + (2f64.sqrt() * fail.argmin).sin();
        assert!(!fail.holds && f_at < 1.1);
    }

    #[test]
    fn constant_coefficients_give_constant_branches() {
        let p = PolyPath::constant(&[c(-3.0, 0.0), c(2.0, 0.0)], 0.0, 0.1, 50).unwrap();
        let rb = track_branches(&p).unwrap();
        assert!(rb.branches[0].complex_values().iter().all(|z| *z == rb.branches[0].complex_at(0)));
        assert!(rb.matching_log.iter().all(|m| m.assignment == vec![0, 1]));
    }

    #[test]
    fn reconstruction_from_branches() {
        let p = PolyPath::builtin("sep_quadratic", &Window::new(0.0, 20.0).unwrap(), 0.1).unwrap();
        let rb = track_branches(&p).unwrap();
        for i in 0..p.len() {
            let (x, y) = (rb.branches[0].complex_at(i), rb.branches[1].complex_at(i));
            let a = p.coeffs_at(i);
            assert!((-(x + y) - a[0]).norm() < 2e-10 && (x * y - a[1]).norm() < 2e-10);
        }
    }

    #[test]
    fn collision_is_reported() {
        let p = PolyPath::builtin("collision_quadratic", &Window::new(-1.0, 1.0).unwrap(), 0.01).unwrap();
        match track_branches(&p) {
            Err(Error::BranchCollision { intervals }) => {
                assert!(intervals.iter().any(|(a, b)| *a <= 0.0 && *b >= 0.0), "{intervals:?}");
            }
            other => panic!("{other:?}"),
        }
        let p = PolyPath::constant(&[c(0.0, 0.0), c(0.0, 0.0)], 0.0, 0.1, 10).unwrap();
        let rb = track_branches_through(&p).unwrap();
        assert_eq!(rb.separation_min, 0.0);
        assert!(!separation_certificate(&rb, 1e-6).holds);
    }

    #[test]
    fn zhikov_trivial_cases() {
        let th = |s: &SampledSignal| Thresholds::for_signal(s);
        let one = SampledSignal::from_fn(0.0, 0.05, 4001, |_| 1.0).unwrap();
        let r = zhikov_pipeline(&one, false, 0.1, &th(&one)).unwrap();
        assert_eq!(r.inf_abs_p, 1.0);
        assert!(r.discriminant_bounded_below && r.collisions.is_empty());
        assert!(r.branch_reports.iter().all(|b| b.flags.remotely_stationary));

        let e = SampledSignal::from_fn(0.0, 0.05, 4001, |t| (-t).exp()).unwrap();
        let r = zhikov_pipeline(&e, true, 0.1, &th(&e)).unwrap();
        assert!(!r.discriminant_bounded_below);
        assert!(r.branch_reports.iter().all(|b| b.flags.remotely_stationary));
        let last = r.branches.as_ref().unwrap().branches[0].complex_at(e.len() - 1);
        assert!(last.norm() < 1e-6);
    }
}
