// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Plain-text pulse shape files.
//!
//! ```text
//! # segments=3
//! # tau_s=9.9999999999999995e-7
//! 0 1.0000000000000000e2 0.0000000000000000e0 0
//! 1 ...
//! ```
//!
//! Each data line holds `index amplitude(rad/s) phase(rad) frozen(0|1)`.
//! Values are written with 17 significant digits so amplitudes survive a
//! round trip exactly. Additional `#` lines and blank lines are ignored on
//! import.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use spinctl_core::PulseSequence;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{0}")]
    Structure(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Renders `pulse` in the shape format.
pub fn format_shape(pulse: &PulseSequence) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# segments={}", pulse.segments());
    let _ = writeln!(out, "# tau_s={:.16e}", pulse.tau());
    for j in 0..pulse.segments() {
        let _ = writeln!(
            out,
            "{j} {:.16e} {:.16e} {}",
            pulse.amplitude(j),
            pulse.phase(j),
            u8::from(pulse.is_frozen(j))
        );
    }
    out
}

pub fn parse_shape(text: &str) -> Result<PulseSequence, ShapeError> {
    let mut segments: Option<usize> = None;
    let mut tau: Option<f64> = None;
    let mut amp = Vec::new();
    let mut phase = Vec::new();
    let mut frozen = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let bad = |message: String| ShapeError::Malformed { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("segments=") {
                let n: usize = v.trim().parse().map_err(|_| bad(format!("invalid segment count `{v}`")))?;
                if n == 0 {
                    return Err(bad("segment count must be positive".into()));
                }
                segments = Some(n);
            } else if let Some(v) = comment.strip_prefix("tau_s=") {
                let t: f64 = v.trim().parse().map_err(|_| bad(format!("invalid segment duration `{v}`")))?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(bad(format!("segment duration must be positive, got {t}")));
                }
                tau = Some(t);
            }
            continue;
        }
        let Some(n) = segments else {
            return Err(bad("data line before `# segments=` header".into()));
        };
        if tau.is_none() {
            return Err(bad("data line before `# tau_s=` header".into()));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let index: usize = fields[0].parse().map_err(|_| bad(format!("invalid index `{}`", fields[0])))?;
        if index != amp.len() {
            return Err(bad(format!("expected index {}, found {index}", amp.len())));
        }
        if index >= n {
            return Err(bad(format!("index {index} exceeds declared segment count {n}")));
        }
        let a: f64 = fields[1].parse().map_err(|_| bad(format!("invalid amplitude `{}`", fields[1])))?;
        if !(a >= 0.0 && a.is_finite()) {
            return Err(bad(format!("amplitude must be finite and nonnegative, got {a}")));
        }
        let p: f64 = fields[2].parse().map_err(|_| bad(format!("invalid phase `{}`", fields[2])))?;
        if !p.is_finite() {
            return Err(bad(format!("phase must be finite, got {p}")));
        }
        let f = match fields[3] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("frozen flag must be 0 or 1, found `{other}`"))),
        };
        amp.push(a);
        phase.push(p);
        frozen.push(f);
    }

    let n = segments.ok_or_else(|| ShapeError::Structure("missing `# segments=` header".into()))?;
    let tau = tau.ok_or_else(|| ShapeError::Structure("missing `# tau_s=` header".into()))?;
    if amp.len() != n {
        return Err(ShapeError::Structure(format!("header declares {n} segments, found {}", amp.len())));
    }
    PulseSequence::from_polar(tau, &amp, &phase, frozen).map_err(|e| ShapeError::Structure(e.to_string()))
}

pub fn export_pulse(pulse: &PulseSequence, path: &Path) -> Result<(), ShapeError> {
    fs::write(path, format_shape(pulse)).map_err(|source| ShapeError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn import_pulse(path: &Path) -> Result<PulseSequence, ShapeError> {
    let text = fs::read_to_string(path).map_err(|source| ShapeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_shape(&text)
}
