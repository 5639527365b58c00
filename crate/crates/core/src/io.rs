//! Plain-text persistence: CSV helpers and the grid-function format.
//!
//! A grid function is stored as a single column preceded by three header
//! lines:
//!
//! ```text
//! dimension,1
//! n,65
//! L,8
//! 0.0000000000000000e0
//! ...
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};

/// Round-trip exact float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a grid function in the single-column format.
pub fn grid_function_to_csv(u: &GridFunction) -> String {
    let d = u.domain();
    let mut out = format!(
        "dimension,{}\nn,{}\nL,{}\n",
        d.dimension,
        d.points_per_axis,
        fmt_f64(d.half_width)
    );
    for v in u.values() {
        let _ = writeln!(out, "{}", fmt_f64(*v));
    }
    out
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing header line `{key}`")))?;
    let (k, v) = line
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("malformed header line `{line}`")))?;
    if k.trim() != key {
        return Err(Error::Parse(format!("expected header `{key}`, found `{}`", k.trim())));
    }
    Ok(v.trim())
}

/// Parses the single-column format.
pub fn grid_function_from_csv(text: &str) -> Result<GridFunction> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let parse_err = |what: &str, v: &str| Error::Parse(format!("invalid {what} `{v}`"));
    let dim = header_value(lines.next(), "dimension")?;
    let dimension: usize = dim.parse().map_err(|_| parse_err("dimension", dim))?;
    let n = header_value(lines.next(), "n")?;
    let points: usize = n.parse().map_err(|_| parse_err("n", n))?;
    let l = header_value(lines.next(), "L")?;
    let half_width: f64 = l.parse().map_err(|_| parse_err("L", l))?;
    let domain = Domain::new(dimension, half_width, points)?;
    let values = lines
        .map(|l| l.parse::<f64>().map_err(|_| parse_err("value", l)))
        .collect::<Result<Vec<f64>>>()?;
    GridFunction::new(domain, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let d = Domain::line(8.0, 9).unwrap();
        let u = GridFunction::from_fn(d, |x| (x[0] * 0.37).sin() / 3.0).unwrap();
        let text = grid_function_to_csv(&u);
        assert!(text.starts_with("dimension,1\nn,9\nL,"));
        let back = grid_function_from_csv(&text).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(matches!(grid_function_from_csv("n,3\n"), Err(Error::Parse(_))));
        assert!(grid_function_from_csv("dimension,1\nn,3\nL,1\n1\nx\n3\n").is_err());
        assert!(matches!(
            grid_function_from_csv("dimension,1\nn,3\nL,1\n1\n2\n"),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(grid_function_from_csv("dimension,1\nn,3\nL,1\n1\nNaN\n3\n").is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
