//! Lossless text serialization of floats, shared by the dataset and
//! checkpoint formats.

use crate::error::{Error, Result};

/// Formats with 17 significant decimal digits, enough to reproduce any
/// finite f64 bit-exactly on parse.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("expected a real number, got `{s}`"),
        })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value `{s}`"),
        });
    }
    Ok(v)
}

pub(crate) fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a nonnegative integer, got `{s}`"),
    })
}
