//! Curve output as CSV. Floats are written with Rust's shortest round-trip
//! formatting, so reading a file back yields the exact values.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{KicError, Result};
use crate::stats::StatCurve;

pub const COLUMNS: &str = "abscissa,value,reference,band";

/// Renders a curve. `meta` is appended to the comment header after the label,
/// e.g. `L=12, k=1;2;3, J=0.7, b=0.9;0;0.9`.
pub fn render_curve(curve: &StatCurve, meta: &str) -> Result<String> {
    curve.validate()?;
    let mut out = String::new();
    if meta.is_empty() {
        writeln!(out, "# {}", curve.label).expect("string write");
    } else {
        writeln!(out, "# {}, {meta}", curve.label).expect("string write");
    }
    out.push_str(COLUMNS);
    out.push('\n');
    let optional =
        |column: &Option<Vec<f64>>, i: usize| column.as_ref().map(|c| format!("{:?}", c[i])).unwrap_or_default();
    for i in 0..curve.len() {
        writeln!(
            out,
            "{:?},{:?},{},{}",
            curve.abscissa[i],
            curve.values[i],
            optional(&curve.reference, i),
            optional(&curve.band, i)
        )
        .expect("string write");
    }
    Ok(out)
}

pub fn write_curve(path: &Path, curve: &StatCurve, meta: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| KicError::io(parent, e))?;
    }
    std::fs::write(path, render_curve(curve, meta)?).map_err(|e| KicError::io(path, e))
}

/// Parses a file produced by [`write_curve`]. Empty optional columns come
/// back as `None`.
pub fn read_curve(path: &Path) -> Result<StatCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| KicError::io(path, e))?;
    let bad = |msg: String| KicError::Format {
        path: path.display().to_string(),
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let label = header
        .strip_prefix("# ")
        .ok_or_else(|| bad("missing '# ' header".into()))?
        .split(", ")
        .next()
        .unwrap_or_default()
        .to_string();
    if lines.next() != Some(COLUMNS) {
        return Err(bad("missing column header".into()));
    }
    let (mut abscissa, mut values, mut reference, mut band) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("row {} has {} fields", i + 1, fields.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad number '{s}'", i + 1)))
        };
        abscissa.push(num(fields[0])?);
        values.push(num(fields[1])?);
        if !fields[2].is_empty() {
            reference.push(num(fields[2])?);
        }
        if !fields[3].is_empty() {
            band.push(num(fields[3])?);
        }
    }
    let mut curve = StatCurve::new(label, abscissa, values)?;
    if !reference.is_empty() {
        curve = curve.with_reference(reference)?;
    }
    if !band.is_empty() {
        curve = curve.with_band(band)?;
    }
    Ok(curve)
}
