//! Dispatch of one configuration to the library, writing artifacts into the run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use raplab::algebra::{
    classify_branches, root_bound_check, separation_certificate, track_branches,
    track_branches_through, zhikov_pipeline, PolyPath, RootBranches,
};
use raplab::catalog::{self, EntryKind};
use raplab::delay::{integrate_dde, precompactness_proxy, DelayRhsSpec, HistorySegment, MIN_STEPS_PER_DELAY};
use raplab::expr::sample_in_t;
use raplab::flows::{
    attraction_time, cocycle_check, condition_h_margin, contraction_bound_check, fiber_count,
    integrate, uniform_stability_probe, ConditionHParams, FiberOptions, Ivp, RhsSpec, SolverOptions,
    StabilityOptions,
};
use raplab::io::write_signal_csv;
use raplab::maps::{discrete_fiber_count, iterate, DiscreteFiberOptions, MapSpec};
use raplab::recurrence::{
    classify, equi_ap_test, minimality_test, omega_limit_sample, translation_set_global,
    translation_set_remote, OmegaOptions, RecurrenceReport, TauCandidates, TranslationSet,
};
use raplab::{Error, SampledSignal, Window};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::config::{Config, ConfigError, Kind, SignalSource, SolverConfig, SpecRef};
use crate::expect::Observed;

/// Failure while running: a configuration problem (exit 2) or a numerical one (exit 1).
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Failed(anyhow::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Failed(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Failed(e.into())
    }
}

type Res<T> = std::result::Result<T, RunError>;

/// Library errors raised while building a model from config values point at `key`.
fn at<T>(key: &str, r: raplab::Result<T>) -> Res<T> {
    r.map_err(|e| match e {
        Error::InvalidArgument(m) | Error::Parse(m) => RunError::Config(ConfigError::new(key, m)),
        Error::Io(m) => RunError::Config(ConfigError::new(key, m)),
        Error::LagOutOfRange { .. } | Error::DimMismatch { .. } => {
            RunError::Config(ConfigError::new(key, e.to_string()))
        }
        other => RunError::Failed(other.into()),
    })
}

/// Artifacts of one run, relative to the run directory, with the observed metrics.
pub struct Outputs {
    pub dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub observed: Observed,
    write_signals: bool,
}

impl Outputs {
    fn new(dir: &Path, write_signals: bool) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            observed: BTreeMap::new(),
            write_signals,
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| path.display().to_string())?;
        self.artifacts.push(PathBuf::from(name));
        Ok(())
    }

    fn signal(&mut self, name: &str, s: &SampledSignal) -> anyhow::Result<()> {
        if !self.write_signals {
            return Ok(());
        }
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_signal_csv(s, &path)?;
        self.artifacts.push(PathBuf::from(name));
        self.artifacts.push(PathBuf::from(name).with_extension("json"));
        Ok(())
    }

    fn set_csv(&mut self, name: &str, set: &TranslationSet) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        set.write_csv(std::fs::File::create(&path)?)?;
        self.artifacts.push(PathBuf::from(name));
        Ok(())
    }

    fn put(&mut self, key: impl Into<String>, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(Json::Null);
        self.observed.insert(key.into(), v);
    }
}

/// JSON has no infinities or NaN; they are reported as strings.
fn finite(x: f64) -> Json {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn execute(cfg: &Config, dir: &Path) -> Res<Outputs> {
    let mut out = Outputs::new(dir, cfg.write_signals);
    match cfg.kind {
        Kind::Classify => run_classify(cfg, &mut out)?,
        Kind::Omega => run_omega(cfg, &mut out)?,
        Kind::Ode => run_ode(cfg, &mut out)?,
        Kind::Dde => run_dde(cfg, &mut out)?,
        Kind::Map => run_map(cfg, &mut out)?,
        Kind::Roots => run_roots(cfg, &mut out)?,
        Kind::Zhikov => run_zhikov(cfg, &mut out)?,
    }
    Ok(out)
}

pub fn load_signal(cfg: &Config, src: &SignalSource, key: &str) -> Res<SampledSignal> {
    let s = if let Some(file) = &src.file {
        at(&format!("{key}.file"), raplab::io::read_signal_csv(&cfg.resolve(file)))?
    } else {
        let t0 = src.t0.unwrap_or(0.0);
        let t1 = src.t1.ok_or_else(|| ConfigError::missing(&format!("{key}.t1")))?;
        let dt = src.dt.ok_or_else(|| ConfigError::missing(&format!("{key}.dt")))?;
        let w = at(&format!("{key}.t1"), Window::new(t0, t1))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::new(format!("{key}.dt"), "must be positive").into());
        }
        match (&src.catalog, &src.expr) {
            (Some(id), _) => at(&format!("{key}.catalog"), catalog::forcing(id, &src.params, &w, dt))?,
            (_, Some(e)) => at(&format!("{key}.expr"), sample_in_t(e, &src.params, &w, dt))?,
            _ => return Err(ConfigError::missing(&format!("{key}.catalog")).into()),
        }
    };
    match src.restrict {
        Some([a, b]) => at(&format!("{key}.restrict"), Window::new(a, b).and_then(|w| s.restrict(&w))),
        None => Ok(s),
    }
}

fn put_flags(out: &mut Outputs, prefix: &str, r: &RecurrenceReport) {
    let p = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    let f = &r.flags;
    out.put(p("ap"), f.ap);
    out.put(p("aap"), f.aap);
    out.put(p("rap"), f.rap);
    out.put(p("remotely_tau_periodic"), f.remotely_tau_periodic);
    out.put(p("tau"), f.tau);
    out.put(p("remotely_stationary"), f.remotely_stationary);
    out.put(p("lagrange_stable_proxy"), f.lagrange_stable_proxy);
    out.put(p("monotone"), f.is_monotone());
}

/// Classifies `s`, writes the report and its translation sets under `name`.
fn classify_into(cfg: &Config, out: &mut Outputs, s: &SampledSignal, name: &str, prefix: &str) -> Res<RecurrenceReport> {
    let th = cfg.thresholds.resolve(s);
    let report = at("thresholds", classify(s, &th))?;
    out.json(&format!("{name}.json"), &report)?;
    for (key, set) in &report.sets {
        out.set_csv(&format!("{name}_sets/{}.csv", key.replace('@', "_")), set)?;
    }
    put_flags(out, prefix, &report);
    Ok(report)
}

fn run_classify(cfg: &Config, out: &mut Outputs) -> Res<()> {
    let src = cfg.signal.as_ref().ok_or_else(|| ConfigError::missing("signal"))?;
    let s = load_signal(cfg, src, "signal")?;
    out.signal("signal.csv", &s)?;
    classify_into(cfg, out, &s, "report", "")?;
    if let Some(tc) = &cfg.translation {
        let set = match tc.test.as_str() {
            "remote" => at("translation.tau", translation_set_remote(&s, tc.epsilon, &tc.tau))?,
            "global" => at("translation.tau", translation_set_global(&s, tc.epsilon, &s.domain(), &tc.tau))?,
            other => return Err(ConfigError::new("translation.test", format!("`{other}` is neither `remote` nor `global`")).into()),
        };
        out.set_csv("translation.csv", &set)?;
        let n_acc = set.accepted().count();
        out.put("translation.n_scanned", set.entries.len());
        out.put("translation.n_accepted", n_acc);
        out.put("translation.all_accepted", n_acc == set.entries.len());
        out.put("translation.max_l", set.accepted().filter_map(|e| e.l).reduce(f64::max));
        out.put("translation.first_l", set.entries.first().and_then(|e| e.l));
        out.put("translation.max_gap", set.max_gap);
        out.put("translation.relatively_dense", set.is_relatively_dense(cfg.thresholds.gap_bound_factor.unwrap_or(3.0)));
    }
    Ok(())
}

fn run_omega(cfg: &Config, out: &mut Outputs) -> Res<()> {
    let src = cfg.signal.as_ref().ok_or_else(|| ConfigError::missing("signal"))?;
    let oc = cfg.omega.as_ref().ok_or_else(|| ConfigError::missing("omega"))?;
    let s = load_signal(cfg, src, "signal")?;
    let opts = OmegaOptions {
        window_len: oc.window_len,
        extension: oc.extension,
        cluster_tol: oc.cluster_tol,
    };
    let hull = at("omega", omega_limit_sample(&s, &oc.shifts.values(), &opts))?;
    let minimal = at("omega.epsilon", minimality_test(&hull, oc.epsilon))?;
    let member_len = oc.window_len + oc.extension;
    let cands = oc.tau.clone().unwrap_or_else(|| {
        let step = s.dt().max(0.25);
        TauCandidates::grid(step, (member_len / 4.0).max(step), step)
    });
    let equi = at("omega.tau", equi_ap_test(&hull, oc.epsilon, &hull.member_domain(), &cands, oc.gap_bound_factor))?;
    out.json(
        "hull.json",
        &json!({
            "shifts": hull.shifts,
            "cluster_sizes": hull.cluster_sizes,
            "comparison": [hull.comparison.a, hull.comparison.b],
            "dist": hull.dist,
            "minimality": minimal,
            "equi_ap": equi.equi_ap,
            "common_translations": raplab::recurrence::SetSummary::of(&equi.common, oc.gap_bound_factor),
        }),
    )?;
    for (k, m) in hull.members.iter().take(oc.max_member_files).enumerate() {
        out.signal(&format!("members/member_{k:03}.csv"), m)?;
    }
    out.put("n_members", hull.len());
    out.put("minimal", minimal.minimal);
    out.put("equi_ap", equi.equi_ap);
    out.put("common_max_gap", equi.common.max_gap);
    Ok(())
}

fn solver(c: &Option<SolverConfig>) -> SolverOptions {
    let mut o = SolverOptions::default();
    if let Some(c) = c {
        o.rel_tol = c.rel_tol.unwrap_or(o.rel_tol);
        o.abs_tol = c.abs_tol.unwrap_or(o.abs_tol);
        o.max_step = c.max_step.unwrap_or(o.max_step);
    }
    o
}

fn optional_forcing(cfg: &Config) -> Res<Option<SampledSignal>> {
    match cfg.system.as_ref().and_then(|s| s.forcing.as_ref()) {
        Some(f) => Ok(Some(load_signal(cfg, f, "system.forcing")?)),
        None => Ok(None),
    }
}

fn build_rhs(cfg: &Config) -> Res<RhsSpec> {
    let sys = cfg.system.as_ref().ok_or_else(|| ConfigError::missing("system.rhs"))?;
    let forcing = optional_forcing(cfg)?;
    match sys.rhs.as_ref().ok_or_else(|| ConfigError::missing("system.rhs"))? {
        SpecRef::Id(id) => {
            let entry = catalog::lookup(id).filter(|e| e.kind == EntryKind::Rhs);
            if entry.is_none() {
                return Err(ConfigError::new("system.rhs", format!("unknown right-hand side `{id}`")).into());
            }
            if entry.is_some_and(|e| e.needs_forcing) && forcing.is_none() {
                return Err(ConfigError::missing("system.forcing").into());
            }
            at("system.rhs", RhsSpec::builtin_with(id, &sys.params, forcing))
        }
        SpecRef::Exprs(ex) => at("system.rhs", RhsSpec::from_exprs(ex, sys.params.clone(), forcing)),
    }
}

/// Trajectory restricted to `analysis.restrict`, then classified if requested.
fn analyse(cfg: &Config, out: &mut Outputs, u: &SampledSignal) -> Res<()> {
    let a = &cfg.analysis;
    let u = match a.restrict {
        Some([lo, hi]) => at("analysis.restrict", Window::new(lo, hi).and_then(|w| u.restrict(&w)))?,
        None => u.clone(),
    };
    if a.classify {
        classify_into(cfg, out, &u, "report", "")?;
    }
    if let Some(b) = &cfg.band {
        if b.target.len() != u.dim() {
            return Err(ConfigError::new("band.target", format!("needs {} components", u.dim())).into());
        }
        let mut sup = 0.0f64;
        let mut settle = u.t0();
        for i in 0..u.len() {
            let dev = u
                .point(i)
                .iter()
                .zip(&b.target)
                .map(|(x, c)| (x - c).powi(2))
                .sum::<f64>()
                .sqrt();
            if u.time(i) >= b.from {
                sup = sup.max(dev);
            }
            if dev > b.tol {
                settle = u.time(i);
            }
        }
        out.put("band.sup", sup);
        out.put("band.holds", sup <= b.tol);
        out.put("band.settle_time", settle);
    }
    Ok(())
}

fn run_ode(cfg: &Config, out: &mut Outputs) -> Res<()> {
    let sys = cfg.system.as_ref().ok_or_else(|| ConfigError::missing("system.rhs"))?;
    let rhs = build_rhs(cfg)?;
    let x0 = sys.x0.clone().ok_or_else(|| ConfigError::missing("system.x0"))?;
    let [a, b] = sys.t_span.ok_or_else(|| ConfigError::missing("system.t_span"))?;
    let span = at("system.t_span", Window::new(a, b))?;
    let opts = solver(&sys.solver);
    let u = at("system", integrate(&Ivp::new(rhs.clone(), x0.clone(), span, opts)))?;
    out.signal("solution.csv", &u)?;
    out.put("final_state", u.point(u.len() - 1).to_vec());
    analyse(cfg, out, &u)?;

    let mut details = serde_json::Map::new();
    if let Some(c) = &cfg.condition_h {
        let p = ConditionHParams {
            kappa: c.kappa,
            alpha: c.alpha,
            sample_box: c.sample_box.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
            n_pairs: c.n_pairs,
            seed: cfg.seed,
        };
        let m = at("condition_h", condition_h_margin(&rhs, &p, &c.t_samples))?;
        out.put("condition_h.margin", m.margin);
        out.put("condition_h.holds", m.margin >= 0.0);
        details.insert("condition_h".into(), serde_json::to_value(&m).map_err(anyhow::Error::from)?);
    }
    if let Some(c) = &cfg.contraction {
        let v = at("contraction", integrate(&Ivp::new(rhs.clone(), c.x0.clone(), span, opts)))?;
        out.signal("solution_b.csv", &v)?;
        let chk = at("contraction", contraction_bound_check(&u, &v, c.kappa, c.alpha, c.tolerance))?;
        out.put("contraction.holds", chk.holds);
        out.put("contraction.max_violation", chk.max_violation);
        details.insert("contraction".into(), serde_json::to_value(&chk).map_err(anyhow::Error::from)?);
    }
    if let Some(f) = &cfg.fibers {
        let opts = FiberOptions {
            burn_in: f.burn_in,
            window: f.window.ok_or_else(|| ConfigError::missing("fibers.window"))?,
            cluster_tol: f.cluster_tol,
            solver: opts,
        };
        let fc = at("fibers", fiber_count(&rhs, &f.shifts.values(), &f.x0s, &opts))?;
        out.put("fibers.m", fc.m);
        out.put("fibers.constant", fc.constant);
        details.insert("fibers".into(), serde_json::to_value(&fc).map_err(anyhow::Error::from)?);
    }
    if let Some(s) = &cfg.stability {
        let condition_h = match (s.kappa, s.alpha) {
            (Some(k), Some(a)) => Some((k, a)),
            (None, None) => None,
            _ => return Err(ConfigError::new("stability.kappa", "give both `kappa` and `alpha` or neither").into()),
        };
        let so = StabilityOptions {
            restart_times: s.restart_times.clone(),
            delta_grid: s.delta_grid.clone(),
            eps_grid: s.eps_grid.clone(),
            horizon: s.horizon,
            delta0: s.delta0,
            condition_h,
            solver: opts,
        };
        let probe = at("stability", uniform_stability_probe(&rhs, &x0, &so))?;
        out.put("stability.uniformly_stable", probe.uniformly_stable);
        out.put("stability.uniformly_attracting", probe.uniformly_attracting);
        if let Some(row) = probe.attraction.first() {
            out.put("stability.observed", row.observed);
            out.put("stability.predicted", row.predicted);
            out.put("stability.within_bound", row.within_bound);
        }
        if let Some((k, a)) = condition_h {
            let eps = s.eps_grid.first().copied().unwrap_or(f64::NAN);
            out.put("stability.attraction_time", at("stability", attraction_time(s.delta0, eps, k, a))?);
        }
        details.insert("stability".into(), serde_json::to_value(&probe).map_err(anyhow::Error::from)?);
    }
    if let Some(c) = &cfg.cocycle {
        let chk = at("cocycle", cocycle_check(&rhs, &x0, c.tau, c.t, opts))?;
        out.put("cocycle.holds", chk.holds);
        out.put("cocycle.error", chk.error);
        details.insert("cocycle".into(), serde_json::to_value(&chk).map_err(anyhow::Error::from)?);
    }
    if !details.is_empty() {
        out.json("analysis.json", &details)?;
    }
    Ok(())
}

fn run_dde(cfg: &Config, out: &mut Outputs) -> Res<()> {
    let sys = cfg.system.as_ref().ok_or_else(|| ConfigError::missing("system.delay"))?;
    let forcing = optional_forcing(cfg)?;
    let rhs = match sys.delay.as_ref().ok_or_else(|| ConfigError::missing("system.delay"))? {
        SpecRef::Id(id) => {
            let mut r = at("system.delay", DelayRhsSpec::builtin(id))?;
            if forcing.is_some() || !sys.params.is_empty() {
                return Err(ConfigError::new("system.delay", "catalog delay equations take no forcing or parameters").into());
            }
            r.label = id.clone();
            r
        }
        SpecRef::Exprs(ex) => {
            let lags = sys.lags.clone().ok_or_else(|| ConfigError::missing("system.lags"))?;
            at("system.delay", DelayRhsSpec::from_exprs(ex, lags, sys.params.clone(), forcing))?
        }
    };
    let history = sys.history.clone().ok_or_else(|| ConfigError::missing("system.history"))?;
    let horizon = sys.horizon.ok_or_else(|| ConfigError::missing("system.horizon"))?;
    let r = sys.history_span.unwrap_or(if rhs.max_delay() > 0.0 { rhs.max_delay() } else { 1.0 });
    let init = at("system.history", HistorySegment::constant(r, &history))?;
    let steps = sys.steps_per_delay.unwrap_or(MIN_STEPS_PER_DELAY);
    let u = at("system", integrate_dde(&rhs, &init, horizon, steps))?;
    out.signal("solution.csv", &u)?;
    let proxy = precompactness_proxy(&u, &rhs);
    out.put("final_state", u.point(u.len() - 1).to_vec());
    out.put("precompact", proxy.precompact);
    out.put("range_bound", proxy.range_bound);
    out.put("growth_ratio", finite(proxy.growth_ratio));
    out.json("precompactness.json", &proxy)?;
    analyse(cfg, out, &u)
}

fn run_map(cfg: &Config, out: &mut Outputs) -> Res<()> {
    let sys = cfg.system.as_ref().ok_or_else(|| ConfigError::missing("system.map"))?;
    let forcing = optional_forcing(cfg)?;
    let m = match sys.map.as_ref().ok_or_else(|| ConfigError::missing("system.map"))? {
        SpecRef::Id(id) => {
            if forcing.is_some() {
                return Err(ConfigError::new("system.forcing", "catalog maps take no forcing").into());
            }
            at("system.map", MapSpec::builtin_with(id, &sys.params))?
        }
        SpecRef::Exprs(ex) => at("system.map", MapSpec::from_exprs(ex, sys.params.clone(), forcing))?,
    };
    let x0 = sys.x0.clone().ok_or_else(|| ConfigError::missing("system.x0"))?;
    let n = sys.n_steps.ok_or_else(|| ConfigError::missing("system.n_steps"))?;
    let u = at("system", iterate(&m, &x0, n))?;
    out.signal("orbit.csv", &u)?;
    out.put("final_state", u.point(u.len() - 1).to_vec());
    analyse(cfg, out, &u)?;
    if let Some(f) = &cfg.fibers {
        let shifts: Vec<i64> = f
            .shifts
            .values()
            .iter()
            .map(|h| {
                if h.fract() == 0.0 {
                    Ok(*h as i64)
                } else {
                    Err(ConfigError::new("fibers.shifts", "map shifts must be integers"))
                }
            })
            .collect::<Result<_, _>>()?;
        if f.burn_in.fract() != 0.0 || f.burn_in < 0.0 {
            return Err(ConfigError::new("fibers.burn_in", "must be a nonnegative integer for maps").into());
        }
        let opts = DiscreteFiberOptions {
            burn_in: f.burn_in as usize,
            n_steps: f.n_steps.ok_or_else(|| ConfigError::missing("fibers.n_steps"))?,
            cluster_tol: f.cluster_tol,
            forcing_period: f.forcing_period,
        };
        let fc = at("fibers", discrete_fiber_count(&m, &shifts, &f.x0s, &opts))?;
        out.put("fibers.m", fc.fibers.m);
        out.put("fibers.constant", fc.fibers.constant);
        out.put("fibers.period", fc.period);
        out.put("fibers.period_consistent", fc.period_consistent);
        if let Some(reps) = fc.fibers.representatives.first() {
            for (k, r) in reps.iter().enumerate() {
                out.signal(&format!("fibers/representative_{k}.csv"), r)?;
            }
        }
        out.json("fibers.json", &fc)?;
    }
    Ok(())
}

fn write_branches(out: &mut Outputs, rb: &RootBranches) -> anyhow::Result<()> {
    for (k, b) in rb.branches.iter().enumerate() {
        out.signal(&format!("branches/branch_{k}.csv"), b)?;
    }
    out.signal("discriminant.csv", &rb.discriminant)?;
    Ok(())
}

fn run_roots(cfg: &Config, out: &mut Outputs) -> Res<()> {
    let pc = cfg.poly.as_ref().ok_or_else(|| ConfigError::missing("poly"))?;
    let w = at("poly.t_span", Window::new(pc.t_span[0], pc.t_span[1]))?;
    if !(pc.dt > 0.0) {
        return Err(ConfigError::new("poly.dt", "must be positive").into());
    }
    let p = match (&pc.id, &pc.exprs) {
        (Some(id), _) => {
            if !pc.params.is_empty() {
                return Err(ConfigError::new("poly.params", "catalog paths take no parameters").into());
            }
            at("poly.id", PolyPath::builtin(id, &w, pc.dt))?
        }
        (_, Some(ex)) => at("poly.exprs", PolyPath::from_exprs(ex, &pc.params, &w, pc.dt))?,
        _ => return Err(ConfigError::missing("poly.id").into()),
    };
    let tracked = if pc.lenient { track_branches_through(&p) } else { track_branches(&p) };
    let rb = match tracked {
        Ok(rb) => rb,
        Err(Error::BranchCollision { intervals }) => {
            out.put("collision", true);
            out.put("collision_intervals", &intervals);
            out.json("roots.json", &json!({ "collisions": intervals }))?;
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    out.put("collision", !rb.collisions.is_empty());
    out.put("collision_intervals", &rb.collisions);
    out.put("residual_max", rb.residual_max);
    out.put("separation_min", finite(rb.separation_min));
    out.put("inf_abs_d", rb.inf_abs_d);
    let bound = root_bound_check(&rb, &p);
    out.put("root_bound.holds", bound.holds);
    out.put("root_bound.max_abs_root", bound.max_abs_root);
    let cert = pc.separation_alpha.map(|a| separation_certificate(&rb, a));
    if let Some(c) = &cert {
        out.put("separation.holds", c.holds);
    }
    write_branches(out, &rb)?;
    let mut reports = Vec::new();
    if pc.classify_branches {
        let th = cfg.thresholds.resolve(&rb.branches[0]);
        reports = at("thresholds", classify_branches(&rb, &th))?;
        for (k, r) in reports.iter().enumerate() {
            put_flags(out, &format!("branch{k}"), r);
        }
        out.put("branches.ap", reports.iter().all(|r| r.flags.ap));
        out.put("branches.aap", reports.iter().all(|r| r.flags.aap));
        out.put("branches.rap", reports.iter().all(|r| r.flags.rap));
    }
    out.json(
        "roots.json",
        &json!({
            "branches": rb,
            "root_bound": bound,
            "separation": cert,
            "branch_reports": reports,
        }),
    )?;
    Ok(())
}

fn run_zhikov(cfg: &Config, out: &mut Outputs) -> Res<()> {
    let src = cfg.signal.as_ref().ok_or_else(|| ConfigError::missing("signal"))?;
    let f = load_signal(cfg, src, "signal")?;
    let zc = cfg.zhikov.clone().unwrap_or(crate::config::ZhikovConfig {
        with_decay: false,
        floor_fraction: 0.1,
    });
    let th = cfg.thresholds.resolve(&f);
    let r = at("zhikov", zhikov_pipeline(&f, zc.with_decay, zc.floor_fraction, &th))?;
    out.put("inf_abs_p", r.inf_abs_p);
    out.put("inf_abs_p_at", r.inf_abs_p_at);
    out.put("discriminant_bounded_below", r.discriminant_bounded_below);
    out.put("provisional", r.provisional);
    for (k, b) in r.branch_reports.iter().enumerate() {
        put_flags(out, &format!("branch{k}"), b);
    }
    out.put("branches.ap", r.branch_reports.iter().all(|b| b.flags.ap));
    out.put("branches.rap", r.branch_reports.iter().all(|b| b.flags.rap));
    if let Some(rb) = &r.branches {
        write_branches(out, rb)?;
    }
    out.json("zhikov.json", &r)?;
    Ok(())
}

pub fn describe(e: &RunError) -> String {
    match e {
        RunError::Config(c) => c.to_string(),
        RunError::Failed(e) => format!("{e:#}"),
    }
}
