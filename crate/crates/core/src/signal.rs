//! Uniform-grid sampled trajectories and the distances every classifier uses.
//!
//! A [`SampledSignal`] is immutable. Slicing and whole-step translation share
//! the underlying buffer, so restricting a long trajectory to a window is
//! cheap. Values are points of ℝᵈ or ℂᵈ; complex components are stored as
//! interleaved `(re, im)` pairs, which makes the Euclidean norm of a point the
//! plain 2-norm of its stored reals in both cases.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance (in units of `dt`) used to decide whether a time lies on the grid.
pub const GRID_TOL: f64 = 1e-9;

/// Closed time interval `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub a: f64,
    pub b: f64,
}

impl Window {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a > b {
            return Err(Error::InvalidArgument(format!("bad window [{a}, {b}]")));
        }
        Ok(Window { a, b })
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.b <= self.a
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }
}

#[derive(Clone, Debug)]
pub struct SampledSignal {
    t0: f64,
    dt: f64,
    dim: usize,
    complex: bool,
    data: Arc<[f64]>,
    offset: usize,
    len: usize,
    label: String,
}

impl PartialEq for SampledSignal {
    fn eq(&self, other: &Self) -> bool {
        self.t0 == other.t0
            && self.dt == other.dt
            && self.dim == other.dim
            && self.complex == other.complex
            && self.raw() == other.raw()
    }
}

impl SampledSignal {
    /// Builds a real signal from flattened values (`len * dim` numbers).
    pub fn new(t0: f64, dt: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_raw(t0, dt, dim, false, values)
    }

    /// Builds a complex signal; `values` holds `len * dim` complex numbers.
    pub fn new_complex(t0: f64, dt: f64, dim: usize, values: Vec<Complex64>) -> Result<Self> {
        let mut raw = Vec::with_capacity(values.len() * 2);
        for z in values {
            raw.push(z.re);
            raw.push(z.im);
        }
        Self::from_raw(t0, dt, dim, true, raw)
    }

    pub(crate) fn from_raw(
        t0: f64,
        dt: f64,
        dim: usize,
        complex: bool,
        raw: Vec<f64>,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidArgument(format!("bad grid t0={t0}, dt={dt}")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be at least 1".into()));
        }
        let width = dim * if complex { 2 } else { 1 };
        if raw.is_empty() || raw.len() % width != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form points of width {width}",
                raw.len()
            )));
        }
        if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                t: t0 + dt * (i / width) as f64,
            });
        }
        let len = raw.len() / width;
        Ok(SampledSignal {
            t0,
            dt,
            dim,
            complex,
            data: raw.into(),
            offset: 0,
            len,
            label: String::new(),
        })
    }

    /// Samples a scalar function on `n` grid points.
    pub fn from_fn(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|i| f(t0 + dt * i as f64)).collect();
        Self::new(t0, dt, 1, values)
    }

    /// Samples a vector function; the closure writes one point into its buffer.
    pub fn from_fn_vec(
        t0: f64,
        dt: f64,
        n: usize,
        dim: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; n * dim];
        for (i, chunk) in values.chunks_mut(dim).enumerate() {
            f(t0 + dt * i as f64, chunk);
        }
        Self::new(t0, dt, dim, values)
    }

    pub fn from_fn_complex(
        t0: f64,
        dt: f64,
        n: usize,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let values = (0..n).map(|i| f(t0 + dt * i as f64)).collect();
        Self::new_complex(t0, dt, 1, values)
    }

    /// Number of grid points needed to cover `[t0, t1]` with step `dt` (snapping `t1` to the grid).
    pub fn points_for(t0: f64, t1: f64, dt: f64) -> usize {
        ((t1 - t0) / dt + GRID_TOL).floor() as usize + 1
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    /// Stored reals per point.
    pub fn width(&self) -> usize {
        self.dim * if self.complex { 2 } else { 1 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn end(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn span(&self) -> f64 {
        self.dt * (self.len - 1) as f64
    }

    pub fn domain(&self) -> Window {
        Window {
            a: self.t0,
            b: self.end(),
        }
    }

    /// True when the grid consists of integer times with unit step.
    pub fn is_integer_grid(&self) -> bool {
        (self.dt - 1.0).abs() < GRID_TOL && (self.t0 - self.t0.round()).abs() < GRID_TOL
    }

    /// Flattened stored reals of the visible points.
    pub fn raw(&self) -> &[f64] {
        let w = self.width();
        &self.data[self.offset * w..(self.offset + self.len) * w]
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let w = self.width();
        let start = (self.offset + i) * w;
        &self.data[start..start + w]
    }

    /// First stored real of point `i` (the value of a real scalar signal).
    pub fn scalar(&self, i: usize) -> f64 {
        self.data[(self.offset + i) * self.width()]
    }

    /// First component of point `i` as a complex number.
    pub fn complex_at(&self, i: usize) -> Complex64 {
        let p = self.point(i);
        if self.complex {
            Complex64::new(p[0], p[1])
        } else {
            Complex64::new(p[0], 0.0)
        }
    }

    /// Scalar values of a real one-dimensional signal.
    pub fn scalars(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.scalar(i)).collect()
    }

    pub fn complex_values(&self) -> Vec<Complex64> {
        (0..self.len).map(|i| self.complex_at(i)).collect()
    }

    /// Euclidean norm of point `i`.
    pub fn norm_at(&self, i: usize) -> f64 {
        norm(self.point(i))
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len).map(|i| self.norm_at(i)).fold(0.0, f64::max)
    }

    /// Largest Euclidean increment between consecutive samples.
    pub fn max_increment(&self) -> f64 {
        max_increment(self.raw(), self.width())
    }

    /// Sub-signal of `n` points starting at visible index `start`; shares the buffer.
    pub fn slice(&self, start: usize, n: usize) -> SampledSignal {
        assert!(n >= 1 && start + n <= self.len, "slice out of range");
        SampledSignal {
            t0: self.time(start),
            dt: self.dt,
            dim: self.dim,
            complex: self.complex,
            data: Arc::clone(&self.data),
            offset: self.offset + start,
            len: n,
            label: self.label.clone(),
        }
    }

    /// Same samples on a grid starting at `t0`.
    pub fn rebase(&self, t0: f64) -> SampledSignal {
        SampledSignal {
            t0,
            ..self.clone()
        }
    }

    /// Fractional grid position of time `t`.
    pub fn position(&self, t: f64) -> f64 {
        (t - self.t0) / self.dt
    }

    /// Linear interpolation at time `t` written into `out`.
    pub fn value_at(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let pos = self.position(t);
        if pos < -GRID_TOL || pos > (self.len - 1) as f64 + GRID_TOL {
            return Err(Error::WindowOutOfDomain {
                a: t,
                b: t,
                lo: self.t0,
                hi: self.end(),
            });
        }
        self.interp_into(pos, out);
        Ok(())
    }

    pub(crate) fn interp_into(&self, pos: f64, out: &mut [f64]) {
        let (i, fr) = split_position(pos, self.len);
        let p = self.point(i);
        if fr == 0.0 {
            out.copy_from_slice(p);
        } else {
            let q = self.point(i + 1);
            for ((o, a), b) in out.iter_mut().zip(p).zip(q) {
                *o = a + fr * (b - a);
            }
        }
    }

    /// Index range `[lo, hi]` of grid points inside `w`. Fails when `w` leaves the domain.
    pub fn index_range(&self, w: &Window) -> Result<(usize, usize)> {
        let lo = self.position(w.a);
        let hi = self.position(w.b);
        if lo < -GRID_TOL || hi > (self.len - 1) as f64 + GRID_TOL {
            return Err(Error::WindowOutOfDomain {
                a: w.a,
                b: w.b,
                lo: self.t0,
                hi: self.end(),
            });
        }
        let i_lo = (lo - GRID_TOL).ceil().max(0.0) as usize;
        let i_hi = ((hi + GRID_TOL).floor() as usize).min(self.len - 1);
        Ok((i_lo, i_hi))
    }

    /// Grid points inside `w`, as a shared view.
    pub fn restrict(&self, w: &Window) -> Result<SampledSignal> {
        let (lo, hi) = self.index_range(w)?;
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "window [{}, {}] holds no grid point",
                w.a, w.b
            )));
        }
        Ok(self.slice(lo, hi - lo + 1))
    }

    /// `t ↦ s(t + h)` on the surviving domain, on the original grid phase.
    ///
    /// Whole-step shifts share the buffer; fractional shifts interpolate linearly.
    pub fn translate(&self, h: f64) -> Result<SampledSignal> {
        if h < 0.0 || !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "translation must be nonnegative, got {h}"
            )));
        }
        if h > self.span() * (1.0 + GRID_TOL) + GRID_TOL * self.dt {
            return Err(Error::EmptyDomain {
                shift: h,
                span: self.span(),
            });
        }
        let shift = Shift::new(h, self.dt);
        let n = shift.surviving(self.len);
        if n == 0 {
            return Err(Error::EmptyDomain {
                shift: h,
                span: self.span(),
            });
        }
        if shift.frac == 0.0 {
            let mut out = self.slice(shift.whole, n);
            out.t0 = self.t0;
            return Ok(out);
        }
        let w = self.width();
        let mut raw = Vec::with_capacity(n * w);
        for k in 0..n {
            let a = self.point(k + shift.whole);
            let b = self.point(k + shift.whole + 1);
            raw.extend(a.iter().zip(b).map(|(x, y)| x + shift.frac * (y - x)));
        }
        let mut out = SampledSignal::from_raw(self.t0, self.dt, self.dim, self.complex, raw)?;
        out.label = self.label.clone();
        Ok(out)
    }

    /// `u ↦ s(t0 + h + u)` for `u ∈ [0, len]`, rebased to start at `t0`.
    ///
    /// Equivalent to `translate(h)` followed by a restriction, without touching
    /// samples outside the requested window.
    pub fn shifted_window(&self, h: f64, len: f64) -> Result<SampledSignal> {
        if h < 0.0 || len < 0.0 {
            return Err(Error::InvalidArgument(format!("bad window h={h}, len={len}")));
        }
        let n = ((len / self.dt) + GRID_TOL).floor() as usize + 1;
        let shift = Shift::new(h, self.dt);
        if shift.surviving(self.len) < n {
            return Err(Error::DomainTooShort {
                len: self.span(),
                need: h + len,
            });
        }
        if shift.frac == 0.0 {
            let mut out = self.slice(shift.whole, n);
            out.t0 = self.t0;
            return Ok(out);
        }
        let w = self.width();
        let mut raw = Vec::with_capacity(n * w);
        for k in 0..n {
            let a = self.point(k + shift.whole);
            let b = self.point(k + shift.whole + 1);
            raw.extend(a.iter().zip(b).map(|(x, y)| x + shift.frac * (y - x)));
        }
        Ok(SampledSignal::from_raw(self.t0, self.dt, self.dim, self.complex, raw)?
            .with_label(self.label.clone()))
    }

    /// Euclidean norm of `s(t_k + shift) - s(t_k)` at visible index `k`.
    #[inline]
    pub(crate) fn shift_diff(&self, k: usize, shift: &Shift) -> f64 {
        let w = self.width();
        let base = (self.offset + k) * w;
        let a = (self.offset + k + shift.whole) * w;
        let data = &self.data;
        let mut acc = 0.0;
        if shift.frac == 0.0 {
            for c in 0..w {
                let d = data[a + c] - data[base + c];
                acc += d * d;
            }
        } else {
            let fr = shift.frac;
            for c in 0..w {
                let x = data[a + c];
                let y = data[a + w + c];
                let d = x + fr * (y - x) - data[base + c];
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// Largest index `k` for which `k + shift` is still on the visible grid.
    pub(crate) fn last_shiftable(&self, shift: &Shift) -> Option<usize> {
        let n = shift.surviving(self.len);
        n.checked_sub(1)
    }
}

/// A translation expressed in grid steps: `whole + frac` with `0 <= frac < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Shift {
    pub whole: usize,
    pub frac: f64,
}

impl Shift {
    pub fn new(h: f64, dt: f64) -> Shift {
        let q = (h / dt).max(0.0);
        let mut whole = q.floor();
        let mut frac = q - whole;
        if frac > 1.0 - GRID_TOL {
            whole += 1.0;
            frac = 0.0;
        } else if frac < GRID_TOL {
            frac = 0.0;
        }
        Shift {
            whole: whole as usize,
            frac,
        }
    }

    /// Number of points `k` with `k + shift` inside a grid of `len` points.
    pub fn surviving(&self, len: usize) -> usize {
        let need = self.whole + usize::from(self.frac > 0.0);
        len.saturating_sub(need)
    }
}

fn split_position(pos: f64, len: usize) -> (usize, f64) {
    let pos = pos.clamp(0.0, (len - 1) as f64);
    let mut i = pos.floor();
    let mut fr = pos - i;
    if fr > 1.0 - GRID_TOL {
        i += 1.0;
        fr = 0.0;
    } else if fr < GRID_TOL {
        fr = 0.0;
    }
    let i = i as usize;
    if i >= len - 1 {
        (len - 1, 0.0)
    } else {
        (i, fr)
    }
}

pub(crate) fn norm(p: &[f64]) -> f64 {
    if p.len() == 1 {
        p[0].abs()
    } else {
        p.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn max_increment(raw: &[f64], width: usize) -> f64 {
    raw.chunks(width)
        .zip(raw.chunks(width).skip(1))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (y - x) * (y - x))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn check_compatible(s1: &SampledSignal, s2: &SampledSignal) -> Result<()> {
    if s1.dim != s2.dim || s1.complex != s2.complex {
        return Err(Error::DimMismatch {
            left: s1.width(),
            right: s2.width(),
        });
    }
    Ok(())
}

/// Common domain of two signals, if nonempty.
pub fn common_domain(s1: &SampledSignal, s2: &SampledSignal) -> Result<Window> {
    let a = s1.t0.max(s2.t0);
    let b = s1.end().min(s2.end());
    if a > b {
        return Err(Error::WindowOutOfDomain {
            a,
            b,
            lo: s1.t0,
            hi: s1.end(),
        });
    }
    Ok(Window { a, b })
}

/// Maximum over the grid points of `s1` inside `w` of `|s1(t) - s2(t)|`.
///
/// `s2` is read on the same grid when the grids are aligned and interpolated otherwise.
pub fn sup_distance(s1: &SampledSignal, s2: &SampledSignal, w: &Window) -> Result<f64> {
    check_compatible(s1, s2)?;
    let (lo, hi) = s1.index_range(w)?;
    s2.index_range(w)?;
    if lo > hi {
        return Ok(0.0);
    }
    let same_step = (s1.dt - s2.dt).abs() <= GRID_TOL * s1.dt;
    let offset = (s1.t0 - s2.t0) / s2.dt;
    let aligned = same_step && (offset - offset.round()).abs() < 1e-6;
    let mut best = 0.0f64;
    if aligned {
        let off = offset.round() as i64;
        for i in lo..=hi {
            let j = (i as i64 + off).clamp(0, s2.len as i64 - 1) as usize;
            let d = diff_norm(s1.point(i), s2.point(j));
            best = best.max(d);
        }
    } else {
        let mut buf = vec![0.0; s2.width()];
        for i in lo..=hi {
            s2.interp_into(s2.position(s1.time(i)), &mut buf);
            best = best.max(diff_norm(s1.point(i), &buf));
        }
    }
    Ok(best)
}

#[inline]
pub(crate) fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        (a[0] - b[0]).abs()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// `sup_distance` over `[l, end of the common domain]`.
pub fn tail_sup_distance(s1: &SampledSignal, s2: &SampledSignal, l: f64) -> Result<f64> {
    check_compatible(s1, s2)?;
    let common = common_domain(s1, s2)?;
    if l < common.a - GRID_TOL * s1.dt || l > common.b + GRID_TOL * s1.dt {
        return Err(Error::WindowOutOfDomain {
            a: l,
            b: common.b,
            lo: common.a,
            hi: common.b,
        });
    }
    sup_distance(s1, s2, &Window { a: l.max(common.a), b: common.b })
}

/// Finite-horizon surrogate for `limsup_{t→∞} |s1(t) - s2(t)|`: the sup distance over
/// the final `tail_fraction` of the common domain.
pub fn d_infinity_estimate(
    s1: &SampledSignal,
    s2: &SampledSignal,
    tail_fraction: f64,
) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail fraction {tail_fraction} not in (0, 1]"
        )));
    }
    check_compatible(s1, s2)?;
    let common = common_domain(s1, s2)?;
    let a = common.b - tail_fraction * common.len();
    sup_distance(s1, s2, &Window { a, b: common.b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_signal(t1: f64, dt: f64) -> SampledSignal {
        SampledSignal::from_fn(0.0, dt, SampledSignal::points_for(0.0, t1, dt), f64::sin).unwrap()
    }

    #[test]
    fn translate_by_zero_is_identity() {
        let s = sin_signal(10.0, 0.01);
        assert_eq!(s.translate(0.0).unwrap(), s);
    }

    #[test]
    fn translate_sin_by_period() {
        let s = sin_signal(100.0, 0.001);
        let shifted = s.translate(2.0 * PI).unwrap();
        let d = sup_distance(&shifted, &s, &Window::new(0.0, 50.0).unwrap()).unwrap();
        assert!(d <= 1e-5, "d = {d}");
    }

    #[test]
    fn translate_past_span_is_empty() {
        let s = sin_signal(10.0, 0.01);
        assert!(matches!(s.translate(11.0), Err(Error::EmptyDomain { .. })));
        assert!(s.translate(-1.0).is_err());
    }

    #[test]
    fn translate_whole_steps_shares_buffer() {
        let s = sin_signal(10.0, 0.5);
        let t = s.translate(1.0).unwrap();
        assert_eq!(t.t0(), 0.0);
        assert_eq!(t.len(), s.len() - 2);
        assert_eq!(t.scalar(0), s.scalar(2));
    }

    #[test]
    fn sup_distance_examples() {
        let s = sin_signal(10.0, 0.01);
        let w = Window::new(0.0, 2.0 * PI).unwrap();
        assert_eq!(sup_distance(&s, &s, &w).unwrap(), 0.0);

        let dt = 1e-4;
        let n = SampledSignal::points_for(0.0, 2.0 * PI, dt);
        let a = SampledSignal::from_fn(0.0, dt, n, f64::sin).unwrap();
        let b = SampledSignal::from_fn(0.0, dt, n, |t| (t + PI).sin()).unwrap();
        let d = sup_distance(&a, &b, &Window::new(0.0, 2.0 * PI - dt).unwrap()).unwrap();
        assert!((d - 2.0).abs() < 1e-5);

        let c3 = SampledSignal::from_fn(0.0, 0.1, 50, |_| 3.0).unwrap();
        let c1 = SampledSignal::from_fn(0.0, 0.1, 50, |_| 1.0).unwrap();
        let d = sup_distance(&c3, &c1, &Window::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn sup_distance_errors() {
        let s = sin_signal(10.0, 0.01);
        let v = SampledSignal::from_fn_vec(0.0, 0.01, 10, 2, |_, p| p.fill(0.0)).unwrap();
        assert!(matches!(
            sup_distance(&s, &v, &Window::new(0.0, 0.05).unwrap()),
            Err(Error::DimMismatch { .. })
        ));
        assert!(matches!(
            sup_distance(&s, &s, &Window::new(0.0, 20.0).unwrap()),
            Err(Error::WindowOutOfDomain { .. })
        ));
    }

    #[test]
    fn sup_distance_on_misaligned_grids_interpolates() {
        let a = SampledSignal::from_fn(0.0, 0.01, 1001, |t| 2.0 * t).unwrap();
        let b = SampledSignal::from_fn(0.005, 0.01, 900, |t| 2.0 * t).unwrap();
        let d = sup_distance(&a, &b, &Window::new(1.0, 8.0).unwrap()).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn tail_sup_examples() {
        let dt = 1e-3;
        let n = SampledSignal::points_for(0.0, 20.0, dt);
        let e = SampledSignal::from_fn(0.0, dt, n, |t| (-t).exp()).unwrap();
        let z = SampledSignal::from_fn(0.0, dt, n, |_| 0.0).unwrap();
        let d = tail_sup_distance(&e, &z, 10.0).unwrap();
        assert!((d - (-10.0f64).exp()).abs() < 1e-6);
        assert_eq!(tail_sup_distance(&e, &e, 3.0).unwrap(), 0.0);

        let s = sin_signal(40.0, dt);
        let z = SampledSignal::from_fn(0.0, dt, s.len(), |_| 0.0).unwrap();
        let d = tail_sup_distance(&s, &z, 17.3).unwrap();
        assert!((d - 1.0).abs() < 1e-6);
        assert!(tail_sup_distance(&s, &z, 41.0).is_err());
    }

    #[test]
    fn d_infinity_examples() {
        let dt = 1e-3;
        let n = SampledSignal::points_for(0.0, 100.0, dt);
        let s1 = SampledSignal::from_fn(0.0, dt, n, f64::sin).unwrap();
        assert_eq!(d_infinity_estimate(&s1, &s1, 0.25).unwrap(), 0.0);
        let s2 = SampledSignal::from_fn(0.0, dt, n, |t| t.sin() + (-t).exp()).unwrap();
        assert!(d_infinity_estimate(&s1, &s2, 0.25).unwrap() < 1e-6);
        let c = SampledSignal::from_fn(0.0, dt, n, f64::cos).unwrap();
        let d = d_infinity_estimate(&s1, &c, 0.25).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-3);
        assert!(d_infinity_estimate(&s1, &c, 0.0).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        assert!(SampledSignal::new(0.0, 0.1, 1, vec![1.0, f64::NAN]).is_err());
        assert!(SampledSignal::new(0.0, 0.0, 1, vec![1.0]).is_err());
        assert!(SampledSignal::new(0.0, 0.1, 1, vec![]).is_err());
    }

    #[test]
    fn complex_points_use_euclidean_norm() {
        let a = SampledSignal::new_complex(0.0, 1.0, 1, vec![Complex64::new(3.0, 4.0); 3]).unwrap();
        let z = SampledSignal::new_complex(0.0, 1.0, 1, vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        assert_eq!(a.norm_at(1), 5.0);
        assert_eq!(sup_distance(&a, &z, &a.domain()).unwrap(), 5.0);
    }
}
