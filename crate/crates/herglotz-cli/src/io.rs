//! File and value plumbing for the CLI: JSON loading with context, atomic
//! artifact writes, and the scalar/point parsers used by flags.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Usage-level failure: maps to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("cannot parse {}: {e}", path.display())))
}

/// Write JSON atomically: temp file in the same directory, then rename.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), UsageError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| usage(format!("serialization failed: {e}")))?;
    write_atomic(path, text.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), UsageError> {
    let tmp: PathBuf = {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".tmp-{}", std::process::id()));
        path.with_file_name(name)
    };
    fs::write(&tmp, bytes).map_err(|e| usage(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| usage(format!("cannot move artifact into {}: {e}", path.display())))?;
    Ok(())
}

/// Parse a complex scalar: "3", "-0.5i", "1.5+0.25i", "1e-3-2e-4i", "i".
pub fn parse_complex(text: &str) -> Result<Complex64, UsageError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(usage("empty complex literal"));
    }
    // split at the last +/- that is not part of an exponent and not leading
    let bytes = s.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            split = Some(i);
            break;
        }
    }
    let (re_part, im_part) = match split {
        Some(i) if s.ends_with('i') => (&s[..i], &s[i..]),
        _ if s.ends_with('i') => ("", s.as_str()),
        _ => (s.as_str(), ""),
    };
    let re = if re_part.is_empty() {
        0.0
    } else {
        re_part
            .parse::<f64>()
            .map_err(|_| usage(format!("bad real part in '{text}'")))?
    };
    let im = if im_part.is_empty() {
        0.0
    } else {
        let core = &im_part[..im_part.len() - 1];
        match core {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other
                .parse::<f64>()
                .map_err(|_| usage(format!("bad imaginary part in '{text}'")))?,
        }
    };
    Ok(Complex64::new(re, im))
}

/// Format a complex scalar the way `eval-measure` prints it: `3+0i`.
pub fn format_complex(z: Complex64) -> String {
    if z.im >= 0.0 || z.im.is_nan() {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}-{}i", z.re, -z.im)
    }
}
