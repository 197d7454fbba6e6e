//! Number formatting and CSV emission.

use std::path::Path;

use crate::CliError;

/// Nine significant digits in plain decimal notation. Non-finite values are
/// an error: no output file may contain them.
pub fn format_number(x: f64) -> Result<String, CliError> {
    if !x.is_finite() {
        return Err(CliError::NonFinite(x));
    }
    if x == 0.0 {
        return Ok("0".into());
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 30) as usize;
    let s = format!("{x:.decimals$}");
    // Trailing zeros carry no information.
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    Ok(if s == "-0" { "0".into() } else { s })
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(0.0).unwrap(), "0");
        assert_eq!(format_number(-0.0).unwrap(), "0");
        assert_eq!(format_number(1.0).unwrap(), "1");
        assert_eq!(format_number(0.811278124459).unwrap(), "0.811278124");
        assert_eq!(format_number(123.456789012).unwrap(), "123.456789");
        assert_eq!(format_number(2.5e-7).unwrap(), "0.00000025");
        assert_eq!(format_number(-1e-17).unwrap(), "-0.00000000000000001");
        assert!(format_number(f64::NAN).is_err());
        assert!(format_number(f64::INFINITY).is_err());
    }
}
