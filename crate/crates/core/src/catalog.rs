//! Built-in right-hand sides, forcings, maps, delay equations and polynomial paths.
//!
//! Every entry is written in the expression language of [`crate::expr`], so a
//! catalog id and the equivalent hand-written expression behave identically.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::sample_in_t;
use crate::signal::{SampledSignal, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    /// `x' = g(t, x)`, one expression per component.
    Rhs,
    /// Scalar function of `t`.
    Forcing,
    /// `u(t+1) = f(t, u(t))`.
    Map,
    /// `u'(t) = f(t, u(t), u(t+θ_1), ...)` with the lags in `lags`.
    Delay,
    /// Coefficients `a_1(t), ..., a_n(t)` of a monic polynomial.
    Poly,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub kind: EntryKind,
    pub exprs: &'static [&'static str],
    pub params: &'static [(&'static str, f64)],
    pub lags: &'static [f64],
    /// The entry expects a tabulated forcing (read as `f`).
    pub needs_forcing: bool,
    pub description: &'static str,
}

const fn entry(
    id: &'static str,
    kind: EntryKind,
    exprs: &'static [&'static str],
    description: &'static str,
) -> CatalogEntry {
    CatalogEntry {
        id,
        kind,
        exprs,
        params: &[],
        lags: &[],
        needs_forcing: false,
        description,
    }
}

/// `sin(t + ln(1+t)) + sin(√2 t + ln(1 + √2 t))`: quasi-periodic carrier with a
/// logarithmic phase drift; remotely almost periodic, not asymptotically so.
pub const HEQ1_FORCING: &str = "sin(t + ln(1 + t)) + sin(sqrt(2)*t + ln(1 + sqrt(2)*t))";

static CATALOG: &[CatalogEntry] = &[
    entry("zero", EntryKind::Rhs, &["0"], "x' = 0"),
    entry("decay", EntryKind::Rhs, &["-x0"], "x' = -x"),
    entry("decay_sin", EntryKind::Rhs, &["-x0 + sin(t)"], "x' = -x + sin t"),
    CatalogEntry {
        params: &[("c", 0.5)],
        ..entry(
            "decay_remote",
            EntryKind::Rhs,
            &["-x0 + c + 1/(1 + t)"],
            "x' = -x + c + 1/(1+t), remotely stationary forcing",
        )
    },
    entry("cubic", EntryKind::Rhs, &["-abs(x0)*x0"], "x' = -|x|x"),
    entry("cubic_sin", EntryKind::Rhs, &["-abs(x0)*x0 + sin(t)"], "x' = -|x|x + sin t"),
    entry(
        "heq1",
        EntryKind::Rhs,
        &["-abs(x0)*x0 + sin(t + ln(1 + t)) + sin(sqrt(2)*t + ln(1 + sqrt(2)*t))"],
        "x' + |x|x = f(t) with f = heq1_forcing",
    ),
    CatalogEntry {
        needs_forcing: true,
        ..entry(
            "cubic_forced",
            EntryKind::Rhs,
            &["-abs(x0)*x0 + f"],
            "x' = -|x|x + f(t) with a tabulated forcing f",
        )
    },
    entry(
        "heq1_forcing",
        EntryKind::Forcing,
        &[HEQ1_FORCING],
        "sin(t + ln(1+t)) + sin(√2 t + ln(1+√2 t))",
    ),
    entry("sin", EntryKind::Forcing, &["sin(t)"], "sin t"),
    entry("rap_sin_log", EntryKind::Forcing, &["sin(t + ln(1 + t))"], "sin(t + ln(1+t))"),
    entry("qp_sin", EntryKind::Forcing, &["sin(t) + sin(sqrt(2)*t)"], "sin t + sin √2 t"),
    CatalogEntry {
        params: &[("c", 0.5)],
        ..entry(
            "remote_stationary",
            EntryKind::Forcing,
            &["c + 1/(1 + t)"],
            "c + 1/(1+t)",
        )
    },
    entry(
        "zhikov_surrogate",
        EntryKind::Forcing,
        &["2 + sin(t) + sin(sqrt(2)*t)"],
        "2 + sin t + sin √2 t: almost periodic, infimum 0 not attained",
    ),
    entry("exp_decay", EntryKind::Forcing, &["exp(-t)"], "e^{-t}"),
    entry("halving", EntryKind::Map, &["x0/2"], "u(t+1) = u(t)/2"),
    entry("increment", EntryKind::Map, &["x0 + 1"], "u(t+1) = u(t) + 1"),
    entry("affine_sin", EntryKind::Map, &["0.5*x0 + sin(t)"], "u(t+1) = u(t)/2 + sin t"),
    CatalogEntry {
        params: &[("c", 0.5)],
        ..entry(
            "affine_remote",
            EntryKind::Map,
            &["0.5*x0 + c + 1/(1 + t)"],
            "u(t+1) = u(t)/2 + c + 1/(1+t)",
        )
    },
    entry("negate", EntryKind::Map, &["-x0"], "u(t+1) = -u(t)"),
    entry(
        "affine_period2",
        EntryKind::Map,
        &["0.5*x0 + cos(pi*t)"],
        "u(t+1) = u(t)/2 + (-1)^t",
    ),
    CatalogEntry {
        lags: &[-1.0],
        ..entry("delayed_decay", EntryKind::Delay, &["-z0"], "u'(t) = -u(t-1)")
    },
    CatalogEntry {
        lags: &[0.0],
        ..entry("lag0_decay", EntryKind::Delay, &["-z0"], "u'(t) = -u(t)")
    },
    CatalogEntry {
        lags: &[-1.0],
        ..entry(
            "forced_decay",
            EntryKind::Delay,
            &["-2*x0 + 0.5*z0 + sin(t + ln(1 + t))"],
            "u'(t) = -2u(t) + u(t-1)/2 + sin(t + ln(1+t))",
        )
    },
    CatalogEntry {
        lags: &[-1.0],
        ..entry("decay_sin_delay", EntryKind::Delay, &["-x0 + sin(t)"], "u'(t) = -u(t) + sin t, delay 1")
    },
    CatalogEntry {
        lags: &[-1.0],
        ..entry("growth", EntryKind::Delay, &["x0"], "u'(t) = u(t), delay 1")
    },
    entry(
        "sep_quadratic",
        EntryKind::Poly,
        &["0", "-(3 + sin(t) + sin(sqrt(2)*t))"],
        "x^2 - (3 + sin t + sin √2 t)",
    ),
    entry(
        "rap_quadratic",
        EntryKind::Poly,
        &["0", "-(3 + sin(t + ln(1 + t)))"],
        "x^2 - (3 + sin(t + ln(1+t)))",
    ),
    entry("collision_quadratic", EntryKind::Poly, &["0", "-t"], "x^2 - t"),
    entry("cube_roots", EntryKind::Poly, &["0", "0", "-1"], "x^3 - 1"),
];

pub fn catalog() -> &'static [CatalogEntry] {
    CATALOG
}

pub fn lookup(id: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.id == id)
}

/// Samples the forcing `id` on `[w.a, w.b]`, with `overrides` replacing default parameters.
pub fn forcing(id: &str, overrides: &BTreeMap<String, f64>, w: &Window, dt: f64) -> Result<SampledSignal> {
    let entry = lookup(id)
        .filter(|e| e.kind == EntryKind::Forcing)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown forcing `{id}`")))?;
    let mut params: BTreeMap<String, f64> = entry.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    Ok(sample_in_t(entry.exprs[0], &params, w, dt)?.with_label(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, Scope};
    use std::collections::BTreeMap;

    #[test]
    fn forcing_samples_only_forcing_entries() {
        let w = crate::signal::Window::new(0.0, 10.0).unwrap();
        let f = forcing("sin", &BTreeMap::new(), &w, 0.5).unwrap();
        assert_eq!(f.len(), 21);
        assert!((f.scalar(3) - 1.5f64.sin()).abs() < 1e-15);
        assert!(forcing("heq1", &BTreeMap::new(), &w, 0.5).is_err());
        assert!(forcing("nope", &BTreeMap::new(), &w, 0.5).is_err());
    }

    #[test]
    fn ids_are_unique_and_include_the_flagship_example() {
        let mut ids: Vec<&str> = catalog().iter().map(|e| e.id).collect();
        ids.sort_unstable();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n);
        assert_eq!(lookup("heq1").unwrap().kind, EntryKind::Rhs);
        assert_eq!(lookup("heq1_forcing").unwrap().kind, EntryKind::Forcing);
    }

    #[test]
    fn every_expression_parses() {
        for e in catalog() {
            let params: BTreeMap<String, f64> =
                e.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            let scope = Scope {
                dim: if e.kind == EntryKind::Poly { 1 } else { e.exprs.len().max(1) },
                forcing_dim: usize::from(e.needs_forcing),
                lags: e.lags.len(),
                params: &params,
            };
            for src in e.exprs {
                Expr::parse(src, &scope).unwrap_or_else(|err| panic!("{}: {err}", e.id));
            }
        }
    }
}
