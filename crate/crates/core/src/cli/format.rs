//! Output helpers: significant-digit rendering, aligned tables, key/value csv.

use std::io::{self, Write};

use serde::Serialize;

/// `%g`-style rendering with `digits` significant digits.
pub fn sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_owned();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    // Let the formatter do the rounding, then read back the exponent.
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_fraction(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{value:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sig6(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_owned(), |v| sig(v, 6))
}

/// Shortest round-trip rendering, identical to the json encoding. Empty for
/// a missing value.
pub fn exact(value: Option<f64>) -> String {
    match value {
        Some(v) if v.is_finite() => serde_json::to_string(&v).expect("finite float"),
        Some(v) => v.to_string(),
        None => String::new(),
    }
}

pub fn write_table<W: Write + ?Sized>(out: &mut W, rows: &[Vec<String>]) -> io::Result<()> {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c + 1 == row.len() {
                line.push_str(cell);
            } else {
                line.push_str(&format!("{cell:<w$}  ", w = widths[c]));
            }
        }
        writeln!(out, "{}", line.trim_end())?;
    }
    Ok(())
}

pub fn write_key_values<W: Write + ?Sized>(
    out: &mut W,
    pairs: &[(String, String)],
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in pairs {
        w.write_record([k, v])?;
    }
    w.flush()
}

pub fn write_json<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}
