//! Signal CSV files with their JSON sidecar descriptor.
//!
//! Layout: header `t,v0,v1,...` for real signals and `t,v0_re,v0_im,...` for
//! complex ones. The descriptor `{dim, complex, label}` lives next to the CSV
//! with the extension replaced by `.json`. Times must be strictly increasing
//! and uniformly spaced up to a relative jitter of `1e-9`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

pub const SPACING_JITTER: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalDescriptor {
    pub dim: usize,
    pub complex: bool,
    #[serde(default)]
    pub label: String,
    /// Only needed for single-sample signals, whose step cannot be read off the times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV body of `s` to any writer.
pub fn write_signal<W: Write>(s: &SampledSignal, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let mut header = String::from("t");
    for c in 0..s.dim() {
        if s.is_complex() {
            header.push_str(&format!(",v{c}_re,v{c}_im"));
        } else {
            header.push_str(&format!(",v{c}"));
        }
    }
    writeln!(out, "{header}")?;
    for i in 0..s.len() {
        write!(out, "{}", s.time(i))?;
        for v in s.point(i) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn descriptor(s: &SampledSignal) -> SignalDescriptor {
    SignalDescriptor {
        dim: s.dim(),
        complex: s.is_complex(),
        label: s.label().to_string(),
        dt: if s.len() == 1 { Some(s.dt()) } else { None },
    }
}

/// Writes `path` and its sidecar descriptor.
pub fn write_signal_csv(s: &SampledSignal, path: &Path) -> Result<()> {
    write_signal(s, File::create(path)?)?;
    let desc = serde_json::to_string_pretty(&descriptor(s))?;
    std::fs::write(sidecar_path(path), desc)?;
    Ok(())
}

/// Reads a signal CSV. Without a sidecar the signal is taken as real with one
/// component per value column.
pub fn read_signal_csv(path: &Path) -> Result<SampledSignal> {
    let side = sidecar_path(path);
    let desc: Option<SignalDescriptor> = if side.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&side)?)?)
    } else {
        None
    };
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("t") {
        return Err(Error::Parse(format!(
            "{}: first column must be `t`",
            path.display()
        )));
    }
    let cols = headers.len() - 1;
    let (dim, complex, label) = match &desc {
        Some(d) => (d.dim, d.complex, d.label.clone()),
        None => (cols, false, String::new()),
    };
    let width = dim * if complex { 2 } else { 1 };
    if width != cols || cols == 0 {
        return Err(Error::Parse(format!(
            "{}: {cols} value columns but descriptor implies {width}",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut raw = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols + 1 {
            return Err(Error::Parse(format!("row {} has {} fields", line + 2, rec.len())));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
        };
        times.push(parse(&rec[0])?);
        for field in rec.iter().skip(1) {
            raw.push(parse(field)?);
        }
    }
    if times.is_empty() {
        return Err(Error::Parse(format!("{}: no samples", path.display())));
    }
    let dt = if times.len() == 1 {
        desc.as_ref()
            .and_then(|d| d.dt)
            .ok_or_else(|| Error::Parse("single-sample signal needs `dt` in its descriptor".into()))?
    } else {
        check_uniform(&times)?
    };
    Ok(SampledSignal::from_raw(times[0], dt, dim, complex, raw)?.with_label(label))
}

/// Returns the grid step after checking strict monotonicity and spacing jitter.
pub fn check_uniform(times: &[f64]) -> Result<f64> {
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Parse("times are not strictly increasing".into()));
    }
    for (i, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if step <= 0.0 {
            return Err(Error::Parse(format!("times not increasing at row {}", i + 3)));
        }
        if ((step - dt) / dt).abs() > SPACING_JITTER {
            return Err(Error::Parse(format!(
                "non-uniform spacing at row {}: step {step} vs {dt}",
                i + 3
            )));
        }
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn real_signal_round_trips_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = SampledSignal::from_fn_vec(1.5, 0.05, 400, 2, |t, p| {
            p[0] = (t * 1.3).sin();
            p[1] = (t / 7.0).exp();
        })
        .unwrap()
        .with_label("pair");
        write_signal_csv(&s, &path).unwrap();
        let back = read_signal_csv(&path).unwrap();
        assert_eq!(back.raw(), s.raw());
        assert_eq!(back.dim(), 2);
        assert_eq!(back.label(), "pair");
        assert!((back.dt() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn complex_signal_uses_re_im_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.csv");
        let s = SampledSignal::from_fn_complex(0.0, 0.5, 5, |t| Complex64::new(t, -t)).unwrap();
        write_signal_csv(&s, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,v0_re,v0_im\n"));
        let back = read_signal_csv(&path).unwrap();
        assert!(back.is_complex());
        assert_eq!(back.complex_at(4), Complex64::new(2.0, -2.0));
    }

    #[test]
    fn jittered_times_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,v0\n0,1\n0.1,1\n0.2000001,1\n0.3,1\n").unwrap();
        assert!(matches!(read_signal_csv(&path), Err(Error::Parse(_))));
        std::fs::write(&path, "t,v0\n0,1\n0.1,1\n0.1,1\n").unwrap();
        assert!(read_signal_csv(&path).is_err());
    }

    #[test]
    fn missing_sidecar_means_real() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.csv");
        std::fs::write(&path, "t,v0,v1\n0,1,2\n1,3,4\n").unwrap();
        let s = read_signal_csv(&path).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.point(1), &[3.0, 4.0]);
    }
}
