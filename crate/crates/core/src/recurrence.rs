//! Translation sets, relative density, hull sampling and the recurrence classifiers.
//!
//! Every test reduces to one primitive: for a shift `τ`, the sup over some index
//! range of `|s(t + τ) - s(t)|`. The map `τ ↦ sup` is Lipschitz with the largest
//! slope of the (piecewise linear) signal, which lets the candidate scan refine
//! near-misses by branch and bound and skip cells that provably hold no
//! ε-translation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{d_infinity_estimate, sup_distance, SampledSignal, Shift, Window, GRID_TOL};

/// Evaluations spent refining one near-miss cell.
const REFINE_BUDGET: usize = 48;

fn yes() -> bool {
    true
}

/// Candidate shifts for a translation-set scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauCandidates {
    /// `start, start + step, ...` up to `end`; `refine` bisects around near-misses.
    Grid {
        start: f64,
        end: f64,
        step: f64,
        #[serde(default = "yes")]
        refine: bool,
    },
    /// Explicit shifts, scanned as given.
    List { taus: Vec<f64> },
}

impl TauCandidates {
    pub fn grid(start: f64, end: f64, step: f64) -> Self {
        TauCandidates::Grid {
            start,
            end,
            step,
            refine: true,
        }
    }

    pub fn list(taus: impl Into<Vec<f64>>) -> Self {
        TauCandidates::List { taus: taus.into() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TauCandidates::Grid {
                start, end, step, ..
            } => {
                if !(start.is_finite() && end.is_finite() && *start >= 0.0 && end >= start) {
                    return Err(Error::InvalidArgument(format!(
                        "bad tau range [{start}, {end}]"
                    )));
                }
                if !(*step > 0.0 && step.is_finite()) {
                    return Err(Error::InvalidArgument(format!("bad tau step {step}")));
                }
            }
            TauCandidates::List { taus } => {
                if taus.is_empty() {
                    return Err(Error::InvalidArgument("empty tau list".into()));
                }
                if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                    return Err(Error::InvalidArgument(format!("bad tau {t}")));
                }
            }
        }
        Ok(())
    }

    /// Coarse candidates in increasing order; integer grids round to integers.
    pub fn coarse(&self, integer: bool) -> Vec<f64> {
        let mut out: Vec<f64> = match self {
            TauCandidates::Grid {
                start, end, step, ..
            } => {
                let step = if integer { step.round().max(1.0) } else { *step };
                let start = if integer { start.ceil() } else { *start };
                let n = ((end - start) / step + GRID_TOL).floor();
                if n < 0.0 {
                    Vec::new()
                } else {
                    (0..=n as usize).map(|k| start + k as f64 * step).collect()
                }
            }
            TauCandidates::List { taus } => taus
                .iter()
                .map(|t| if integer { t.round() } else { *t })
                .collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        out
    }

    /// Grid step, or the smallest spacing of a list (the value itself for a singleton).
    pub fn step(&self) -> f64 {
        match self {
            TauCandidates::Grid { step, .. } => *step,
            TauCandidates::List { .. } => {
                let c = self.coarse(false);
                c.windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min)
                    .min(if c.len() == 1 { c[0] } else { f64::INFINITY })
                    .max(f64::MIN_POSITIVE)
            }
        }
    }

    pub fn refine(&self) -> bool {
        matches!(self, TauCandidates::Grid { refine: true, .. })
    }

    pub fn max_tau(&self) -> f64 {
        self.coarse(false).last().copied().unwrap_or(0.0)
    }

    /// Same candidates with the range end replaced by `end`.
    pub fn with_end(&self, end: f64) -> Self {
        match self {
            TauCandidates::Grid {
                start,
                step,
                refine,
                ..
            } => TauCandidates::Grid {
                start: *start,
                end,
                step: *step,
                refine: *refine,
            },
            TauCandidates::List { taus } => TauCandidates::List {
                taus: taus.iter().copied().filter(|t| *t <= end).collect(),
            },
        }
    }
}

/// One scanned shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEntry {
    pub tau: f64,
    pub accepted: bool,
    /// Tail start for accepted shifts.
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Sup over the tested tail. For rejected shifts the scan may stop early,
    /// so the value is then only a lower bound that already reaches `epsilon`.
    pub tail_sup: f64,
}

/// Outcome of scanning candidate shifts at one `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationSet {
    pub epsilon: f64,
    pub entries: Vec<TauEntry>,
    /// Largest gap between accepted shifts, boundary gaps of `scan_range` included.
    pub max_gap: f64,
    pub scan_range: Window,
    /// Coarse candidate spacing.
    pub step: f64,
}

impl TranslationSet {
    fn assemble(epsilon: f64, mut entries: Vec<TauEntry>, scan_range: Window, step: f64) -> Self {
        entries.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        entries.dedup_by(|a, b| a.tau == b.tau);
        let acc: Vec<f64> = entries
            .iter()
            .filter(|e| e.accepted)
            .map(|e| e.tau)
            .collect();
        let max_gap = match (acc.first(), acc.last()) {
            (Some(first), Some(last)) => {
                let inner = acc.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
                inner
                    .max(first - scan_range.a)
                    .max(scan_range.b - last)
                    .max(0.0)
            }
            _ => scan_range.len(),
        };
        TranslationSet {
            epsilon,
            entries,
            max_gap,
            scan_range,
            step,
        }
    }

    pub fn accepted(&self) -> impl Iterator<Item = &TauEntry> {
        self.entries.iter().filter(|e| e.accepted)
    }

    pub fn accepted_taus(&self) -> Vec<f64> {
        self.accepted().map(|e| e.tau).collect()
    }

    pub fn is_accepted(&self, tau: f64) -> bool {
        self.accepted().any(|e| (e.tau - tau).abs() <= 1e-9 * tau.abs().max(1.0))
    }

    /// Smallest accepted shift of each run of accepted shifts closer than two steps.
    pub fn cluster_representatives(&self) -> Vec<f64> {
        let mut reps: Vec<f64> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for tau in self.accepted_taus() {
            if tau - last > 2.0 * self.step {
                reps.push(tau);
            }
            last = tau;
        }
        reps
    }

    /// Median spacing between consecutive cluster representatives, if there are at least two.
    ///
    /// The median rather than the minimum keeps one stray close pair from
    /// tightening the density bound when a larger ε accepts more shifts.
    pub fn typical_spacing(&self) -> Option<f64> {
        let reps = self.cluster_representatives();
        let mut gaps: Vec<f64> = reps.windows(2).map(|w| w[1] - w[0]).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(f64::total_cmp);
        Some(gaps[(gaps.len() - 1) / 2])
    }

    /// Finite-horizon relative density: nonempty, and `max_gap` within `factor`
    /// times either the candidate step or the typical spacing of accepted clusters.
    pub fn is_relatively_dense(&self, factor: f64) -> bool {
        if self.accepted().next().is_none() {
            return false;
        }
        if self.max_gap <= factor * self.step * (1.0 + 1e-9) {
            return true;
        }
        self.typical_spacing()
            .is_some_and(|d| self.max_gap <= factor * d)
    }

    /// CSV with header `tau,accepted,L,tail_sup`; a missing `L` is an empty field.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "accepted", "L", "tail_sup"])?;
        for e in &self.entries {
            w.write_record([
                e.tau.to_string(),
                e.accepted.to_string(),
                e.l.map(|l| l.to_string()).unwrap_or_default(),
                e.tail_sup.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest slope of the piecewise linear interpolant, i.e. a Lipschitz constant of
/// `τ ↦ sup_k |s(t_k + τ) - s(t_k)|`.
fn slope(s: &SampledSignal) -> f64 {
    s.max_increment() / s.dt() * (1.0 + 1e-9)
}

/// Sup of the shift difference over visible indices `lo..=hi`, stopping once `cutoff` is reached.
fn sup_shift_diff(s: &SampledSignal, shift: &Shift, lo: usize, hi: usize, cutoff: f64) -> f64 {
    let Some(last) = s.last_shiftable(shift) else {
        return f64::INFINITY;
    };
    let hi = hi.min(last);
    let mut best = 0.0f64;
    for k in lo..=hi {
        let d = s.shift_diff(k, shift);
        if d > best {
            best = d;
            if best >= cutoff {
                break;
            }
        }
    }
    best
}

/// Shared scan parameters.
struct ScanPlan {
    coarse: Vec<f64>,
    step: f64,
    refine: bool,
    /// Largest shift any evaluation may use.
    reach: f64,
    scan_range: Window,
}

impl ScanPlan {
    fn new(cands: &TauCandidates, integer: bool) -> Result<Self> {
        cands.validate()?;
        let coarse = cands.coarse(integer);
        let (Some(&first), Some(&last)) = (coarse.first(), coarse.last()) else {
            return Err(Error::InvalidArgument("no tau candidates in range".into()));
        };
        let step = if integer {
            cands.step().round().max(1.0)
        } else {
            cands.step()
        };
        let refine = cands.refine() && !integer;
        let reach = if refine { last + step / 2.0 } else { last };
        Ok(ScanPlan {
            coarse,
            step,
            refine,
            reach,
            scan_range: Window { a: first, b: last },
        })
    }

    fn tau_max(&self) -> f64 {
        self.scan_range.b
    }
}

/// Evaluates every coarse candidate (plus `extra`) and refines near-misses.
///
/// `eval(τ, cutoff)` returns the sup for shift `τ`, or any value `>= cutoff` once
/// the sup is known to reach it. Returns `(τ, value)` pairs in evaluation order.
fn scan(
    plan: &ScanPlan,
    extra: &[f64],
    eps: f64,
    lipschitz: f64,
    min_half: f64,
    eval: &mut dyn FnMut(f64, f64) -> f64,
) -> Vec<(f64, f64)> {
    let half0 = plan.step / 2.0;
    let mut out = Vec::with_capacity(plan.coarse.len() + extra.len());
    for &tau in &plan.coarse {
        let near = if plan.refine {
            eps + lipschitz * half0
        } else {
            eps
        };
        let v = eval(tau, near.max(eps));
        out.push((tau, v));
        if plan.refine && v >= eps && v < near {
            refine_cell(tau, v, half0, eps, lipschitz, min_half, plan, eval, &mut out);
        }
    }
    for &tau in extra {
        if tau >= 0.0 && tau <= plan.reach {
            out.push((tau, eval(tau, eps)));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn refine_cell(
    center: f64,
    value: f64,
    half: f64,
    eps: f64,
    lipschitz: f64,
    min_half: f64,
    plan: &ScanPlan,
    eval: &mut dyn FnMut(f64, f64) -> f64,
    out: &mut Vec<(f64, f64)>,
) {
    let mut open = vec![(value, center, half)];
    let mut spent = 0;
    while spent < REFINE_BUDGET && !open.is_empty() {
        let best = open
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.1 .1.total_cmp(&b.1 .1)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (_, c, h) = open.swap_remove(best);
        let hh = h / 2.0;
        if hh < min_half {
            continue;
        }
        for child in [c - hh, c + hh] {
            if child <= 0.0 || child > plan.reach {
                continue;
            }
            let v = eval(child, eps + lipschitz * hh);
            spent += 1;
            out.push((child, v));
            if v < eps {
                return;
            }
            if v - lipschitz * hh < eps {
                open.push((v, child, hh));
            }
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad epsilon {eps}")));
    }
    Ok(())
}

/// Shifts `τ` with `sup_{t ∈ w'} |s(t + τ) - s(t)| < eps`.
///
/// `w'` is `w` with its right end pulled in by the largest shift the scan can
/// use, the same for every candidate so that results at different `τ` compare
/// over one window. Accepted entries carry `L = w'.a`.
pub fn translation_set_global(
    s: &SampledSignal,
    eps: f64,
    w: &Window,
    cands: &TauCandidates,
) -> Result<TranslationSet> {
    family_translation_set(std::slice::from_ref(s), eps, w, cands, &[])
}

/// Common ε-translations of a family: shifts that work for every member on `w`.
pub fn family_translation_set(
    members: &[SampledSignal],
    eps: f64,
    w: &Window,
    cands: &TauCandidates,
    extra: &[f64],
) -> Result<TranslationSet> {
    check_eps(eps)?;
    let first = members
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    let dt = first.dt();
    for m in members {
        if (m.dt() - dt).abs() > GRID_TOL * dt {
            return Err(Error::GridMismatch(format!("steps {} and {}", dt, m.dt())));
        }
    }
    let integer = members.iter().all(SampledSignal::is_integer_grid);
    let plan = ScanPlan::new(cands, integer)?;
    if w.len() < 4.0 * plan.tau_max() * (1.0 - 1e-12) {
        return Err(Error::WindowTooShort {
            len: w.len(),
            tau_max: plan.tau_max(),
        });
    }
    let shrunk = Window {
        a: w.a,
        b: (w.b - plan.reach).max(w.a),
    };
    let mut ranges = Vec::with_capacity(members.len());
    for m in members {
        let (lo, hi) = m.index_range(w)?;
        let hi_eff = ((m.position(shrunk.b) + GRID_TOL).floor().max(0.0) as usize).min(hi);
        if hi_eff < lo {
            return Err(Error::WindowTooShort {
                len: w.len(),
                tau_max: plan.tau_max(),
            });
        }
        ranges.push((lo, hi_eff));
    }
    let lipschitz = members.iter().map(slope).fold(0.0, f64::max);
    let mut eval = |tau: f64, cutoff: f64| {
        let shift = Shift::new(tau, dt);
        let mut best = 0.0f64;
        for (m, &(lo, hi)) in members.iter().zip(&ranges) {
            best = best.max(sup_shift_diff(m, &shift, lo, hi, cutoff));
            if best >= cutoff {
                break;
            }
        }
        best
    };
    let values = scan(&plan, extra, eps, lipschitz, dt / 4.0, &mut eval);
    let entries = values
        .into_iter()
        .map(|(tau, v)| TauEntry {
            tau,
            accepted: v < eps,
            l: (v < eps).then_some(shrunk.a),
            tail_sup: v,
        })
        .collect();
    Ok(TranslationSet::assemble(eps, entries, plan.scan_range, plan.step))
}

/// Geometry of a remote (tail) scan over the whole domain of `s`.
struct Tail {
    /// Last index compared, `end - reach`.
    e: usize,
    /// First index of the shortest admissible residual tail.
    screen: usize,
}

impl Tail {
    fn new(s: &SampledSignal, plan: &ScanPlan) -> Result<Self> {
        let need = 4.0 * plan.tau_max();
        if s.span() < need * (1.0 - 1e-12) || s.len() < 2 {
            return Err(Error::DomainTooShort {
                len: s.span(),
                need,
            });
        }
        let e = (s.position(s.end() - plan.reach) + GRID_TOL).floor().max(0.0) as usize;
        let min_tail = plan.step.max(plan.tau_max());
        let back = (min_tail / s.dt() - GRID_TOL).ceil() as usize;
        Ok(Tail {
            e,
            screen: e.saturating_sub(back),
        })
    }
}

/// Least index `k` such that the shift difference stays below `eps` on `k..=e`,
/// with the sup over that tail. Walks down from `e`; the suffix sup only grows as
/// the tail lengthens, so the first violation fixes the answer.
fn least_tail_start(s: &SampledSignal, shift: &Shift, e: usize, eps: f64) -> (usize, f64) {
    let mut sup = 0.0f64;
    let mut k = e;
    loop {
        let d = s.shift_diff(k, shift);
        if d >= eps {
            return (k + 1, sup);
        }
        sup = sup.max(d);
        if k == 0 {
            return (0, sup);
        }
        k -= 1;
    }
}

/// Shifts `τ` for which `|s(t + τ) - s(t)| < eps` holds on some tail `[L, E]`.
///
/// `E = end - τ_max` for every candidate. A shift is accepted when the residual
/// tail is at least `max(step, τ_max)` long; `L` is then the least grid time
/// with that property.
pub fn translation_set_remote(
    s: &SampledSignal,
    eps: f64,
    cands: &TauCandidates,
) -> Result<TranslationSet> {
    remote_with_extra(s, eps, cands, &[])
}

fn remote_with_extra(
    s: &SampledSignal,
    eps: f64,
    cands: &TauCandidates,
    extra: &[f64],
) -> Result<TranslationSet> {
    check_eps(eps)?;
    let plan = ScanPlan::new(cands, s.is_integer_grid())?;
    let tail = Tail::new(s, &plan)?;
    let dt = s.dt();
    let mut eval = |tau: f64, cutoff: f64| {
        sup_shift_diff(s, &Shift::new(tau, dt), tail.screen, tail.e, cutoff)
    };
    let values = scan(&plan, extra, eps, slope(s), dt / 4.0, &mut eval);
    let entries = values
        .into_iter()
        .map(|(tau, v)| {
            if v < eps {
                let (k, sup) = least_tail_start(s, &Shift::new(tau, dt), tail.e, eps);
                TauEntry {
                    tau,
                    accepted: true,
                    l: Some(s.time(k)),
                    tail_sup: sup,
                }
            } else {
                TauEntry {
                    tau,
                    accepted: false,
                    l: None,
                    tail_sup: v,
                }
            }
        })
        .collect();
    Ok(TranslationSet::assemble(eps, entries, plan.scan_range, plan.step))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicRow {
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub tail_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicTest {
    pub periodic: bool,
    pub tau: f64,
    pub table: Vec<PeriodicRow>,
}

/// Whether `|s(t + τ) - s(t)|` falls below every `eps` of the grid on some tail.
pub fn remotely_tau_periodic_test(
    s: &SampledSignal,
    tau: f64,
    eps_grid: &[f64],
) -> Result<PeriodicTest> {
    let cands = TauCandidates::list([tau]);
    let mut table = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let set = translation_set_remote(s, eps, &cands)?;
        let e = &set.entries[0];
        table.push(PeriodicRow {
            epsilon: eps,
            l: e.l,
            tail_sup: e.tail_sup,
        });
    }
    Ok(PeriodicTest {
        periodic: table.iter().all(|r| r.l.is_some()),
        tau,
        table,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryTest {
    pub stationary: bool,
    /// First `(eps, τ)` whose tail test failed.
    pub first_failure: Option<(f64, f64)>,
}

/// Remote stationarity: every coarse candidate passes the tail test at every `eps`.
pub fn remotely_stationary_test(
    s: &SampledSignal,
    cands: &TauCandidates,
    eps_grid: &[f64],
) -> Result<StationaryTest> {
    let mut plan = ScanPlan::new(cands, s.is_integer_grid())?;
    plan.refine = false;
    plan.reach = plan.tau_max();
    let tail = Tail::new(s, &plan)?;
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for &eps in &grid {
        check_eps(eps)?;
        for &tau in &plan.coarse {
            let v = sup_shift_diff(s, &Shift::new(tau, s.dt()), tail.screen, tail.e, eps);
            if v >= eps {
                return Ok(StationaryTest {
                    stationary: false,
                    first_failure: Some((eps, tau)),
                });
            }
        }
    }
    Ok(StationaryTest {
        stationary: true,
        first_failure: None,
    })
}

/// Translates of a signal, clustered and reduced to representatives.
#[derive(Clone, Debug)]
pub struct HullSample {
    pub members: Vec<SampledSignal>,
    /// Originating shift of each representative (`NaN` for explicit members).
    pub shifts: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    /// Pairwise sup distances on `comparison`.
    pub dist: Vec<Vec<f64>>,
    pub comparison: Window,
}

impl HullSample {
    /// Hull from explicit members, compared on `comparison`.
    pub fn from_members(members: Vec<SampledSignal>, comparison: Window) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("empty hull".into()));
        }
        let dist = distance_matrix(&members, &comparison)?;
        let n = members.len();
        Ok(HullSample {
            members,
            shifts: vec![f64::NAN; n],
            cluster_sizes: vec![1; n],
            dist,
            comparison,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Common domain of all members.
    pub fn member_domain(&self) -> Window {
        let a = self.members.iter().map(|m| m.t0()).fold(f64::NEG_INFINITY, f64::max);
        let b = self.members.iter().map(|m| m.end()).fold(f64::INFINITY, f64::min);
        Window { a, b }
    }
}

fn distance_matrix(members: &[SampledSignal], w: &Window) -> Result<Vec<Vec<f64>>> {
    let n = members.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sup_distance(&members[i], &members[j], w)?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(dist)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaOptions {
    /// Length of the comparison window on which members are clustered.
    pub window_len: f64,
    /// Extra length kept on each member beyond the comparison window, so that
    /// later tests can shift members.
    #[serde(default)]
    pub extension: f64,
    pub cluster_tol: f64,
}

/// Samples the ω-limit set: `translate(s, h)` on `[t0, t0 + window_len + extension]`
/// for each `h`, clustered by sup distance on `[t0, t0 + window_len]`.
///
/// Clustering is greedy in shift order; each cluster is represented by its
/// medoid, and medoids closer than `cluster_tol` are merged afterwards.
pub fn omega_limit_sample(
    s: &SampledSignal,
    shifts: &[f64],
    opts: &OmegaOptions,
) -> Result<HullSample> {
    if shifts.is_empty() {
        return Err(Error::InvalidArgument("no shifts".into()));
    }
    if !(opts.window_len > 0.0 && opts.extension >= 0.0 && opts.cluster_tol >= 0.0) {
        return Err(Error::InvalidArgument("bad omega-limit options".into()));
    }
    let comparison = Window {
        a: s.t0(),
        b: s.t0() + opts.window_len,
    };
    let mut members = Vec::with_capacity(shifts.len());
    for &h in shifts {
        members.push(s.shifted_window(h, opts.window_len + opts.extension)?);
    }
    let d = |i: usize, j: usize| sup_distance(&members[i], &members[j], &comparison);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..members.len() {
        let mut home = None;
        for (c, cl) in clusters.iter().enumerate() {
            if d(cl[0], i)? < opts.cluster_tol {
                home = Some(c);
                break;
            }
        }
        match home {
            Some(c) => clusters[c].push(i),
            None => clusters.push(vec![i]),
        }
    }
    let mut reps: Vec<(usize, usize)> = Vec::with_capacity(clusters.len());
    for cl in &clusters {
        let mut best = (f64::INFINITY, cl[0]);
        for &i in cl {
            let mut total = 0.0;
            for &j in cl {
                if i != j {
                    total += d(i, j)?;
                }
            }
            if total < best.0 {
                best = (total, i);
            }
        }
        reps.push((best.1, cl.len()));
    }
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(reps.len());
    for (r, size) in reps {
        let mut absorbed = false;
        for m in merged.iter_mut() {
            if d(m.0, r)? < opts.cluster_tol {
                m.1 += size;
                absorbed = true;
                break;
            }
        }
        if !absorbed {
            merged.push((r, size));
        }
    }
    let chosen: Vec<SampledSignal> = merged.iter().map(|&(r, _)| members[r].clone()).collect();
    let dist = distance_matrix(&chosen, &comparison)?;
    Ok(HullSample {
        members: chosen,
        shifts: merged.iter().map(|&(r, _)| shifts[r]).collect(),
        cluster_sizes: merged.iter().map(|&(_, n)| n).collect(),
        dist,
        comparison,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquiApResult {
    pub equi_ap: bool,
    pub common: TranslationSet,
}

/// Equi-almost periodicity of a hull: the common ε-translations of all members
/// on `w` must be relatively dense.
pub fn equi_ap_test(
    hull: &HullSample,
    eps: f64,
    w: &Window,
    cands: &TauCandidates,
    gap_bound_factor: f64,
) -> Result<EquiApResult> {
    let common = family_translation_set(&hull.members, eps, w, cands, &[])?;
    Ok(EquiApResult {
        equi_ap: common.is_relatively_dense(gap_bound_factor),
        common,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityResult {
    pub minimal: bool,
    /// First `(m, j)` such that no shift of member `m` came within eps of member `j`.
    pub unreached: Option<(usize, usize)>,
}

/// One-sided minimality check: every member must come within `eps` of every other
/// member after some internal shift along its own stored extension.
///
/// `false` certifies non-minimality at this resolution; `true` is only consistent
/// with minimality.
pub fn minimality_test(hull: &HullSample, eps: f64) -> Result<MinimalityResult> {
    check_eps(eps)?;
    let n = hull.members.len();
    if n <= 1 {
        return Ok(MinimalityResult {
            minimal: true,
            unreached: None,
        });
    }
    let dt = hull.members[0].dt();
    let width = hull.members[0].width();
    // Targets: each member's samples on the comparison window.
    let mut targets = Vec::with_capacity(n);
    for m in &hull.members {
        if (m.dt() - dt).abs() > GRID_TOL * dt || m.width() != width {
            return Err(Error::GridMismatch("hull members differ in grid or width".into()));
        }
        let (lo, hi) = m.index_range(&hull.comparison)?;
        targets.push(m.slice(lo, hi - lo + 1));
    }
    let len = targets.iter().map(SampledSignal::len).min().unwrap_or(0);
    // Sorted first components of target heads, for a cheap necessary condition.
    let mut heads: Vec<(f64, usize)> = targets.iter().enumerate().map(|(j, t)| (t.point(0)[0], j)).collect();
    heads.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (i, m) in hull.members.iter().enumerate() {
        let mut reached = vec![false; n];
        let mut left = n;
        if m.len() < len {
            return Err(Error::DomainTooShort {
                len: m.span(),
                need: hull.comparison.len(),
            });
        }
        for d in 0..=(m.len() - len) {
            let x = m.point(d)[0];
            let start = heads.partition_point(|h| h.0 <= x - eps);
            for &(hv, j) in &heads[start..] {
                if hv >= x + eps {
                    break;
                }
                if reached[j] {
                    continue;
                }
                let t = &targets[j];
                let close = (0..len).all(|k| {
                    crate::signal::diff_norm(m.point(d + k), t.point(k)) < eps
                });
                if close {
                    reached[j] = true;
                    left -= 1;
                }
            }
            if left == 0 {
                break;
            }
        }
        if let Some(j) = reached.iter().position(|r| !r) {
            return Ok(MinimalityResult {
                minimal: false,
                unreached: Some((i, j)),
            });
        }
    }
    Ok(MinimalityResult {
        minimal: true,
        unreached: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AapOptions {
    /// Candidates for the AP test of each hull member.
    pub candidates: TauCandidates,
    pub tail_fraction: f64,
    pub gap_bound_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AapResult {
    pub aap: bool,
    pub residual: f64,
    pub best_member: usize,
    pub member_sets: Vec<TranslationSet>,
}

/// Asymptotic almost periodicity against an AP hull: the smallest tail distance
/// `d_infinity_estimate(s, p)` over members `p`, compared with `eps`.
///
/// Members are compared with `s` in absolute time; phase alignment comes from
/// the hull's own members rather than a free optimization.
pub fn aap_test(
    s: &SampledSignal,
    hull: &HullSample,
    eps: f64,
    opts: &AapOptions,
) -> Result<AapResult> {
    check_eps(eps)?;
    let mut member_sets = Vec::with_capacity(hull.len());
    for (index, m) in hull.members.iter().enumerate() {
        let set = translation_set_global(m, eps, &m.domain(), &opts.candidates)?;
        if !set.is_relatively_dense(opts.gap_bound_factor) {
            return Err(Error::HullNotAp { index, eps });
        }
        member_sets.push(set);
    }
    let mut best = (f64::INFINITY, 0);
    for (i, m) in hull.members.iter().enumerate() {
        let r = d_infinity_estimate(s, m, opts.tail_fraction)?;
        if r < best.0 {
            best = (r, i);
        }
    }
    Ok(AapResult {
        aap: best.0 < eps,
        residual: best.0,
        best_member: best.1,
        member_sets,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Ascending.
    pub epsilon_grid: Vec<f64>,
    pub tau_candidates: TauCandidates,
    pub cluster_tol: f64,
    pub tail_fraction: f64,
    pub gap_bound_factor: f64,
    /// Allowed ratio of late to early sup norm and slope in the Lagrange proxy.
    #[serde(default = "default_growth_bound")]
    pub growth_bound: f64,
    /// Largest slope the Lagrange proxy accepts.
    #[serde(default = "default_lipschitz_bound")]
    pub lipschitz_bound: f64,
}

fn default_growth_bound() -> f64 {
    1.5
}

fn default_lipschitz_bound() -> f64 {
    1e6
}

impl Thresholds {
    /// Defaults scaled to the domain of `s`: ε ∈ {0.05, 0.1, 0.2}, shifts up to a
    /// twentieth of the span.
    pub fn for_signal(s: &SampledSignal) -> Self {
        let span = s.span();
        let (start, step) = if s.is_integer_grid() {
            (1.0, 1.0)
        } else {
            let step = s.dt().max(0.25);
            (step, step)
        };
        Thresholds {
            epsilon_grid: vec![0.05, 0.1, 0.2],
            tau_candidates: TauCandidates::grid(start, (span / 20.0).max(start), step),
            cluster_tol: 0.05,
            tail_fraction: 0.75,
            gap_bound_factor: 3.0,
            growth_bound: default_growth_bound(),
            lipschitz_bound: default_lipschitz_bound(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_grid.is_empty() {
            return Err(Error::InvalidArgument("empty epsilon grid".into()));
        }
        if self.epsilon_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("epsilon values must be positive".into()));
        }
        if self.epsilon_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("epsilon grid must be ascending".into()));
        }
        self.tau_candidates.validate()?;
        for (name, v) in [
            ("cluster_tol", self.cluster_tol),
            ("tail_fraction", self.tail_fraction),
            ("gap_bound_factor", self.gap_bound_factor),
            ("growth_bound", self.growth_bound),
            ("lipschitz_bound", self.lipschitz_bound),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.tail_fraction > 1.0 {
            return Err(Error::InvalidArgument("tail_fraction must be at most 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub ap: bool,
    pub aap: bool,
    pub rap: bool,
    pub remotely_tau_periodic: bool,
    pub tau: Option<f64>,
    pub remotely_stationary: bool,
    pub lagrange_stable_proxy: bool,
}

impl Flags {
    /// `ap ⇒ aap ⇒ rap` and `τ-periodic or stationary ⇒ rap`.
    pub fn is_monotone(&self) -> bool {
        (!self.ap || self.aap)
            && (!self.aap || self.rap)
            && (!self.remotely_tau_periodic || self.rap)
            && (!self.remotely_stationary || (self.rap && self.remotely_tau_periodic))
    }
}

/// Compact view of one translation set for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub epsilon: f64,
    pub scan_range: [f64; 2],
    pub n_scanned: usize,
    pub accepted: Vec<f64>,
    pub max_l: Option<f64>,
    pub max_gap: f64,
    pub typical_spacing: Option<f64>,
    pub relatively_dense: bool,
}

impl SetSummary {
    pub fn of(set: &TranslationSet, factor: f64) -> Self {
        SetSummary {
            epsilon: set.epsilon,
            scan_range: [set.scan_range.a, set.scan_range.b],
            n_scanned: set.entries.len(),
            accepted: set.cluster_representatives(),
            max_l: set.accepted().filter_map(|e| e.l).reduce(f64::max),
            max_gap: set.max_gap,
            typical_spacing: set.typical_spacing(),
            relatively_dense: set.is_relatively_dense(factor),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagEvidence {
    pub epsilon_grid: Vec<f64>,
    pub window: [f64; 2],
    pub sets: Vec<SetSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeEvidence {
    pub sup_first_half: f64,
    pub sup_second_half: f64,
    pub growth_ratio: f64,
    pub slope_first_half: f64,
    pub slope_second_half: f64,
    pub slope_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub ap: FlagEvidence,
    pub aap: FlagEvidence,
    pub rap: FlagEvidence,
    pub remotely_tau_periodic: Option<PeriodicTest>,
    pub remotely_stationary: StationaryTest,
    pub lagrange: LagrangeEvidence,
    /// Flags before the implications `ap ⇒ aap ⇒ rap` were closed.
    pub raw_flags: Flags,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub flags: Flags,
    pub evidence: Evidence,
    pub thresholds: Thresholds,
    pub window: [f64; 2],
    /// Full translation sets keyed `"{test}@{eps}"`, for CSV export.
    #[serde(skip)]
    pub sets: Vec<(String, TranslationSet)>,
}

/// Runs the whole classifier stack on `s`.
///
/// * `ap`: global translation sets over the whole domain are relatively dense at every ε.
/// * `aap`: `ap`, or the final `tail_fraction` of the signal is AP with shifts up
///   to a quarter of the tail. The tail is its own AP part; the residual vanishes there.
/// * `rap`: remote translation sets are relatively dense at every ε.
/// * remote τ-periodicity is tested for the smallest remote translation at the
///   finest ε, on the ε grid extended by `ε_min/2` and `ε_min/4`; remote
///   stationarity asks every coarse candidate to pass on that grid.
/// * the Lagrange proxy bounds the growth of the sup norm and of the slope from
///   the first to the second half of the domain.
///
/// Raw verdicts are kept in the evidence; the reported flags are closed under
/// the implications between the notions.
pub fn classify(s: &SampledSignal, th: &Thresholds) -> Result<RecurrenceReport> {
    th.validate()?;
    let factor = th.gap_bound_factor;
    let cands = &th.tau_candidates;
    let domain = s.domain();
    let plan = ScanPlan::new(cands, s.is_integer_grid())?;
    if domain.len() < 4.0 * plan.tau_max() {
        return Err(Error::DomainTooShort {
            len: domain.len(),
            need: 4.0 * plan.tau_max(),
        });
    }
    let mut sets = Vec::new();
    let window = [domain.a, domain.b];

    let mut ap = true;
    let mut ap_sets = Vec::new();
    let mut global_accepted = Vec::new();
    for &eps in &th.epsilon_grid {
        let set = translation_set_global(s, eps, &domain, cands)?;
        ap &= set.is_relatively_dense(factor);
        ap_sets.push(SetSummary::of(&set, factor));
        global_accepted.push(set.accepted_taus());
        sets.push((format!("global@{eps}"), set));
    }

    let mut rap = true;
    let mut rap_sets = Vec::new();
    let mut finest_remote = None;
    for (i, &eps) in th.epsilon_grid.iter().enumerate() {
        let set = remote_with_extra(s, eps, cands, &global_accepted[i])?;
        rap &= set.is_relatively_dense(factor);
        rap_sets.push(SetSummary::of(&set, factor));
        if i == 0 {
            finest_remote = set.accepted_taus().first().copied();
        }
        sets.push((format!("remote@{eps}"), set));
    }

    let tail_len = th.tail_fraction * domain.len();
    let tail_window = Window {
        a: domain.b - tail_len,
        b: domain.b,
    };
    let tail = s.restrict(&tail_window)?;
    let tail_cands = cands.with_end(tail.span() / 4.0);
    let mut aap_tail = true;
    let mut aap_sets = Vec::new();
    for &eps in &th.epsilon_grid {
        let set = translation_set_global(&tail, eps, &tail.domain(), &tail_cands)?;
        aap_tail &= set.is_relatively_dense(factor);
        aap_sets.push(SetSummary::of(&set, factor));
        sets.push((format!("tail@{eps}"), set));
    }

    let eps_min = th.epsilon_grid[0];
    let mut decay_grid = th.epsilon_grid.clone();
    decay_grid.extend([eps_min / 2.0, eps_min / 4.0]);
    let periodic = match finest_remote {
        Some(tau) => {
            let tau = polish_period(s, tau, plan.step);
            Some(remotely_tau_periodic_test(s, tau, &decay_grid)?)
        }
        None => None,
    };
    let stationary = remotely_stationary_test(s, cands, &decay_grid)?;
    let (lagrange_ok, lagrange) = lagrange_proxy(s, th);

    let raw_flags = Flags {
        ap,
        aap: aap_tail,
        rap,
        remotely_tau_periodic: periodic.as_ref().is_some_and(|p| p.periodic),
        tau: periodic.as_ref().map(|p| p.tau),
        remotely_stationary: stationary.stationary,
        lagrange_stable_proxy: lagrange_ok,
    };
    let mut flags = raw_flags.clone();
    flags.aap |= flags.ap;
    if flags.remotely_stationary {
        flags.remotely_tau_periodic = true;
        flags.tau = flags.tau.or(plan.coarse.first().copied());
    }
    flags.rap |= flags.aap || flags.remotely_tau_periodic;

    let eps_grid = th.epsilon_grid.clone();
    Ok(RecurrenceReport {
        flags,
        evidence: Evidence {
            ap: FlagEvidence {
                epsilon_grid: eps_grid.clone(),
                window,
                sets: ap_sets,
            },
            aap: FlagEvidence {
                epsilon_grid: eps_grid.clone(),
                window: [tail_window.a, tail_window.b],
                sets: aap_sets,
            },
            rap: FlagEvidence {
                epsilon_grid: eps_grid,
                window,
                sets: rap_sets,
            },
            remotely_tau_periodic: periodic,
            remotely_stationary: stationary,
            lagrange,
            raw_flags,
        },
        thresholds: th.clone(),
        window,
        sets,
    })
}

/// Moves `tau` within half a step to minimize the sup difference over the final
/// stretch of the domain (golden-section search).
fn polish_period(s: &SampledSignal, tau: f64, step: f64) -> f64 {
    if s.is_integer_grid() {
        return tau;
    }
    let reach = tau + step / 2.0;
    if s.span() < 4.0 * reach {
        return tau;
    }
    let e = (s.position(s.end() - reach) + GRID_TOL).floor() as usize;
    let back = (reach.max(step) / s.dt()).ceil() as usize;
    let lo_idx = e.saturating_sub(back);
    let f = |x: f64| sup_shift_diff(s, &Shift::new(x, s.dt()), lo_idx, e, f64::INFINITY);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((tau - step / 2.0).max(s.dt()), reach);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > s.dt() * 1e-3 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let best = (a + b) / 2.0;
    if f(best) <= f(tau) {
        best
    } else {
        tau
    }
}

fn lagrange_proxy(s: &SampledSignal, th: &Thresholds) -> (bool, LagrangeEvidence) {
    let n = s.len();
    let mid = n / 2;
    let first = s.slice(0, mid.max(1));
    let second = s.slice(mid, n - mid);
    let floor = 1e-12;
    let sup_first = first.sup_norm();
    let sup_second = second.sup_norm();
    let slope_first = if first.len() > 1 { slope(&first) } else { 0.0 };
    let slope_second = if second.len() > 1 { slope(&second) } else { 0.0 };
    let growth_ratio = sup_second / sup_first.max(floor);
    let slope_ratio = slope_second / slope_first.max(floor);
    let ok = (growth_ratio <= th.growth_bound || sup_second <= floor)
        && (slope_ratio <= th.growth_bound || slope_second <= floor)
        && slope_second <= th.lipschitz_bound;
    (
        ok,
        LagrangeEvidence {
            sup_first_half: sup_first,
            sup_second_half: sup_second,
            growth_ratio,
            slope_first_half: slope_first,
            slope_second_half: slope_second,
            slope_ratio,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thap4Result {
    pub equivalent: bool,
    /// Shifts accepted by one variant of the tail condition but not the other.
    pub mismatches: Vec<f64>,
    /// Whether negative shifts were scanned too (signal starting before 0).
    pub two_sided: bool,
}

/// Compares the remote acceptance condition "for all t ≥ L" with the variant
/// "for all t with t ≥ L and t + τ ≥ L" over the coarse candidates, and over
/// their negatives when the signal is defined before time 0.
pub fn thap4_equivalence_check(
    s: &SampledSignal,
    eps: f64,
    cands: &TauCandidates,
) -> Result<Thap4Result> {
    check_eps(eps)?;
    let mut plan = ScanPlan::new(cands, s.is_integer_grid())?;
    plan.refine = false;
    plan.reach = plan.tau_max();
    let tail = Tail::new(s, &plan)?;
    let min_tail = plan.step.max(plan.tau_max());
    let two_sided = s.t0() < 0.0;
    let mut mismatches = Vec::new();
    let dt = s.dt();
    let t_end = s.time(tail.e);
    for &tau in &plan.coarse {
        // Pairs are indexed by their earlier time u, partner u + τ. The longest
        // suffix of admissible pairs is shared; the variants differ in which of
        // the two times has to clear L.
        let (k, _) = least_tail_start(s, &Shift::new(tau, dt), tail.e, eps);
        if k > tail.e {
            continue;
        }
        let u = s.time(k);
        let long_enough = |l: f64, last: f64| last - l >= min_tail - GRID_TOL * dt;
        // τ ≥ 0: "t ≥ L" with t = u; the variant adds t + τ ≥ L, implied.
        let plain = long_enough(u, t_end);
        let variant = long_enough(u, t_end);
        if plain != variant {
            mismatches.push(tau);
        }
        if two_sided {
            // Shift -τ pairs (t, t - τ) with t = u + τ. Plain: t ≥ L, so L = u + τ
            // on the later times. Variant: t - τ ≥ L as well, so L = u on the earlier ones.
            let plain = long_enough(u + tau, t_end + tau);
            let variant = long_enough(u, t_end);
            if plain != variant {
                mismatches.push(-tau);
            }
        }
    }
    Ok(Thap4Result {
        equivalent: mismatches.is_empty(),
        mismatches,
        two_sided,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaCoherence {
    pub epsilon: f64,
    pub rap_and_lagrange: bool,
    pub equi_ap: bool,
    pub consistent: bool,
    pub n_members: usize,
}

/// Cross-check between a report and the ω-limit sample: `rap` plus the Lagrange
/// proxy at the coarsest ε should agree with equi-almost periodicity of the
/// sampled hull at that ε.
pub fn omega_coherence(
    s: &SampledSignal,
    report: &RecurrenceReport,
    shifts: &[f64],
    opts: &OmegaOptions,
    cands: &TauCandidates,
) -> Result<OmegaCoherence> {
    let th = &report.thresholds;
    let eps = *th.epsilon_grid.last().expect("validated grid");
    let rap_at_eps = report
        .evidence
        .rap
        .sets
        .last()
        .is_some_and(|set| set.relatively_dense);
    let rap_and_lagrange = rap_at_eps && report.flags.lagrange_stable_proxy;
    let hull = omega_limit_sample(s, shifts, opts)?;
    let w = hull.member_domain();
    let equi = equi_ap_test(&hull, eps, &w, cands, th.gap_bound_factor)?;
    Ok(OmegaCoherence {
        epsilon: eps,
        rap_and_lagrange,
        equi_ap: equi.equi_ap,
        consistent: rap_and_lagrange == equi.equi_ap,
        n_members: hull.len(),
    })
}

/// Every hull member returns within `eps` of itself after a shift by `tau`.
pub fn hull_members_tau_periodic(hull: &HullSample, tau: f64, eps: f64) -> Result<bool> {
    for m in &hull.members {
        let shifted = m.translate(tau)?;
        let w = Window {
            a: m.t0(),
            b: shifted.end(),
        };
        if sup_distance(&shifted, m, &w)? >= eps {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sampled(t1: f64, dt: f64, f: impl Fn(f64) -> f64) -> SampledSignal {
        SampledSignal::from_fn(0.0, dt, SampledSignal::points_for(0.0, t1, dt), f).unwrap()
    }

    fn rap_signal(t1: f64, dt: f64) -> SampledSignal {
        sampled(t1, dt, |t| (t + (1.0 + t).ln()).sin())
    }

    #[test]
    fn global_set_of_sine_on_quarter_periods() {
        let s = sampled(400.0, 0.01, f64::sin);
        let taus: Vec<f64> = (1..=40).map(|k| k as f64 * PI / 2.0).collect();
        let set = translation_set_global(&s, 0.05, &s.domain(), &TauCandidates::list(taus.clone()))
            .unwrap();
        for (k, tau) in taus.iter().enumerate() {
            let expect = (2.0 * (tau / 2.0).sin()).abs() < 0.05;
            assert_eq!(set.is_accepted(*tau), expect, "k = {}", k + 1);
            assert_eq!(expect, (k + 1) % 4 == 0);
        }
    }

    #[test]
    fn constant_accepts_everything_with_step_gap() {
        let s = sampled(100.0, 0.1, |_| 0.7);
        let set = translation_set_global(&s, 1e-9, &s.domain(), &TauCandidates::grid(1.0, 20.0, 0.5))
            .unwrap();
        assert!(set.entries.iter().all(|e| e.accepted));
        assert!((set.max_gap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eps_above_diameter_accepts_everything() {
        let s = sampled(200.0, 0.05, f64::sin);
        let set = translation_set_global(&s, 3.0, &s.domain(), &TauCandidates::grid(1.0, 40.0, 0.5))
            .unwrap();
        assert!(set.entries.iter().all(|e| e.accepted));
    }

    #[test]
    fn short_window_is_rejected() {
        let s = sampled(100.0, 0.1, f64::sin);
        let err = translation_set_global(&s, 0.1, &Window::new(0.0, 30.0).unwrap(), &TauCandidates::grid(1.0, 10.0, 1.0));
        assert!(matches!(err, Err(Error::WindowTooShort { .. })));
        let err = translation_set_remote(&s, 0.1, &TauCandidates::grid(1.0, 30.0, 1.0));
        assert!(matches!(err, Err(Error::DomainTooShort { .. })));
    }

    #[test]
    fn refinement_finds_off_grid_period() {
        let s = sampled(300.0, 0.01, f64::sin);
        let set = translation_set_global(&s, 0.02, &s.domain(), &TauCandidates::grid(1.0, 70.0, 0.5))
            .unwrap();
        let reps = set.cluster_representatives();
        assert_eq!(reps.len(), 11, "{reps:?}");
        for (k, r) in reps.iter().enumerate() {
            assert!((r - 2.0 * PI * (k + 1) as f64).abs() < 0.02, "{r}");
        }
        assert!(set.is_relatively_dense(3.0));
    }

    #[test]
    fn remote_set_for_log_phase_sine() {
        let s = rap_signal(4000.0, 0.005);
        let set = translation_set_remote(&s, 0.05, &TauCandidates::list([2.0 * PI])).unwrap();
        let e = &set.entries[0];
        assert!(e.accepted);
        let l = e.l.unwrap();
        assert!(l <= 126.0 && l > 100.0, "L = {l}");
        let set = translation_set_remote(&s, 0.05, &TauCandidates::list([PI])).unwrap();
        assert!(!set.entries[0].accepted);
        assert!(set.entries[0].tail_sup > 0.05);
    }

    #[test]
    fn huge_eps_accepts_from_domain_start() {
        let s = sampled(100.0, 0.05, |t| (0.3 * t).cos());
        let set = translation_set_remote(&s, 2.5, &TauCandidates::grid(1.0, 20.0, 1.0)).unwrap();
        assert!(set.entries.iter().all(|e| e.accepted && e.l == Some(0.0)));
    }

    #[test]
    fn periodic_and_stationary_tests() {
        let s = rap_signal(4000.0, 0.005);
        let p = remotely_tau_periodic_test(&s, 2.0 * PI, &[0.2, 0.1, 0.05]).unwrap();
        assert!(p.periodic, "{p:?}");
        let sine = sampled(400.0, 0.01, f64::sin);
        let p = remotely_tau_periodic_test(&sine, PI, &[0.1]).unwrap();
        assert!(!p.periodic);
        let decay = sampled(4000.0, 0.05, |t| 0.3 + 1.0 / (1.0 + t));
        let st = remotely_stationary_test(&decay, &TauCandidates::grid(0.5, 50.0, 0.5), &[0.05, 0.0125]).unwrap();
        assert!(st.stationary, "{st:?}");
        let st = remotely_stationary_test(&sine, &TauCandidates::grid(0.5, 50.0, 0.5), &[0.1]).unwrap();
        assert!(!st.stationary);
    }

    #[test]
    fn omega_sample_of_decay_is_one_cluster() {
        let s = sampled(300.0, 0.05, |t| (-t).exp());
        let shifts: Vec<f64> = (0..20).map(|k| 100.0 + 5.0 * k as f64).collect();
        let hull = omega_limit_sample(
            &s,
            &shifts,
            &OmegaOptions {
                window_len: 20.0,
                extension: 10.0,
                cluster_tol: 0.01,
            },
        )
        .unwrap();
        assert_eq!(hull.len(), 1);
        assert_eq!(hull.cluster_sizes, vec![20]);
        assert!(hull.members[0].sup_norm() < 1e-10);
    }

    #[test]
    fn omega_sample_rejects_shift_beyond_domain() {
        let s = sampled(100.0, 0.1, f64::sin);
        let r = omega_limit_sample(
            &s,
            &[95.0],
            &OmegaOptions {
                window_len: 10.0,
                extension: 0.0,
                cluster_tol: 0.1,
            },
        );
        assert!(matches!(r, Err(Error::DomainTooShort { .. })));
    }

    #[test]
    fn minimality_of_rotation_and_of_two_constants() {
        let s = sampled(2000.0, 0.05, f64::sin);
        let shifts: Vec<f64> = (0..12).map(|k| 500.0 + 0.5 * k as f64).collect();
        let hull = omega_limit_sample(
            &s,
            &shifts,
            &OmegaOptions {
                window_len: 10.0,
                extension: 20.0,
                cluster_tol: 0.05,
            },
        )
        .unwrap();
        assert!(hull.len() > 1);
        assert!(minimality_test(&hull, 0.1).unwrap().minimal);

        let w = Window::new(0.0, 10.0).unwrap();
        let a = sampled(30.0, 0.05, |_| 0.3);
        let b = sampled(30.0, 0.05, |_| -0.7);
        let hull = HullSample::from_members(vec![a.clone(), b], w).unwrap();
        let r = minimality_test(&hull, 0.1).unwrap();
        assert!(!r.minimal);
        assert_eq!(r.unreached, Some((0, 1)));
        let single = HullSample::from_members(vec![a], w).unwrap();
        assert!(minimality_test(&single, 0.1).unwrap().minimal);
    }

    #[test]
    fn equi_ap_of_phase_family_and_of_zero() {
        let members: Vec<SampledSignal> = (0..6)
            .map(|k| sampled(200.0, 0.01, move |t| (t + k as f64).sin()))
            .collect();
        let w = Window::new(0.0, 200.0).unwrap();
        let hull = HullSample::from_members(members, w).unwrap();
        let r = equi_ap_test(&hull, 0.05, &w, &TauCandidates::grid(1.0, 40.0, 0.25), 3.0).unwrap();
        assert!(r.equi_ap);
        for tau in r.common.cluster_representatives() {
            let k = (tau / (2.0 * PI)).round();
            assert!((tau - 2.0 * PI * k).abs() < 0.05);
        }
        let zero = HullSample::from_members(vec![sampled(100.0, 0.1, |_| 0.0)], Window::new(0.0, 100.0).unwrap()).unwrap();
        let r = equi_ap_test(&zero, 0.01, &Window::new(0.0, 100.0).unwrap(), &TauCandidates::grid(1.0, 20.0, 1.0), 3.0).unwrap();
        assert!(r.common.entries.iter().all(|e| e.accepted));
    }

    #[test]
    fn aap_against_phase_family() {
        let s = sampled(400.0, 0.01, |t| t.sin() + (-t).exp());
        let members: Vec<SampledSignal> = (0..16)
            .map(|k| sampled(400.0, 0.01, move |t| (t + 2.0 * PI * k as f64 / 16.0).sin()))
            .collect();
        let hull = HullSample::from_members(members, Window::new(0.0, 400.0).unwrap()).unwrap();
        let opts = AapOptions {
            candidates: TauCandidates::grid(1.0, 20.0, 0.25),
            tail_fraction: 0.75,
            gap_bound_factor: 3.0,
        };
        let r = aap_test(&s, &hull, 0.05, &opts).unwrap();
        assert!(r.aap && r.residual < 1e-9 && r.best_member == 0);

        let zero = sampled(400.0, 0.01, |_| 0.0);
        let hull = HullSample::from_members(vec![zero.clone()], Window::new(0.0, 400.0).unwrap()).unwrap();
        assert!(aap_test(&zero, &hull, 0.05, &opts).unwrap().aap);

        let ramp = sampled(400.0, 0.01, |t| t / 100.0);
        let hull = HullSample::from_members(vec![ramp], Window::new(0.0, 400.0).unwrap()).unwrap();
        assert!(matches!(aap_test(&zero, &hull, 0.05, &opts), Err(Error::HullNotAp { index: 0, .. })));
    }

    #[test]
    fn classify_sine_and_decay() {
        let s = sampled(1000.0, 0.01, f64::sin);
        let th = Thresholds::for_signal(&s);
        let r = classify(&s, &th).unwrap();
        assert!(r.flags.ap && r.flags.aap && r.flags.rap, "{:?}", r.flags);
        assert!(r.flags.lagrange_stable_proxy);

        let d = sampled(1000.0, 0.01, |t| (-t).exp());
        let r = classify(&d, &Thresholds::for_signal(&d)).unwrap();
        assert!(!r.flags.ap && r.flags.aap && r.flags.rap && r.flags.remotely_stationary, "{:?}", r.flags);
    }

    #[test]
    fn classify_rejects_unbounded_growth() {
        let s = sampled(400.0, 0.05, |t| t);
        let r = classify(&s, &Thresholds::for_signal(&s)).unwrap();
        assert!(!r.flags.ap && !r.flags.rap && !r.flags.lagrange_stable_proxy, "{:?}", r.flags);
        assert!(r.flags.is_monotone());
    }

    #[test]
    fn integer_grids_use_integer_shifts() {
        let s = SampledSignal::from_fn(0.0, 1.0, 400, |n| if n as i64 % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let set = translation_set_global(&s, 0.1, &s.domain(), &TauCandidates::grid(0.5, 20.0, 0.7)).unwrap();
        assert!(set.entries.iter().all(|e| e.tau.fract() == 0.0));
        assert_eq!(set.accepted_taus(), (1..=10).map(|k| 2.0 * k as f64).collect::<Vec<_>>());
    }

    #[test]
    fn thap4_variants_agree() {
        let s = rap_signal(800.0, 0.01);
        let r = thap4_equivalence_check(&s, 0.1, &TauCandidates::grid(1.0, 40.0, 0.5)).unwrap();
        assert!(r.equivalent && !r.two_sided);
    }

    #[test]
    fn csv_layout() {
        let s = sampled(100.0, 0.1, f64::sin);
        let set = translation_set_global(&s, 0.1, &s.domain(), &TauCandidates::list([PI, 2.0 * PI])).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("tau,accepted,L,tail_sup"));
        assert!(lines.next().unwrap().contains(",false,,"));
        assert!(lines.next().unwrap().contains(",true,0,"));
    }
}
