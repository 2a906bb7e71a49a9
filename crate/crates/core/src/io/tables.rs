use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::split_header;
use crate::error::{Error, Result};
use crate::reconstruction::{TemperatureProfile, ThermogramGrid};

pub const PROFILE_SCHEMA: &str = "rdts-profile/1";
pub const GRID_SCHEMA: &str = "rdts-grid/1";

/// One row per reporting bin; invalid bins print `nan`.
pub fn write_profile_csv(p: &TemperatureProfile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema={PROFILE_SCHEMA}");
    let _ = writeln!(s, "# origin_m={}", p.origin);
    let _ = writeln!(s, "# bin_length_m={}", p.bin_length);
    s.push_str("bin,center_m,temperature_k,sigma_k,valid\n");
    for i in 0..p.len() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{}",
            p.center(i),
            p.temperatures[i],
            p.sigmas[i],
            u8::from(p.valid[i])
        );
    }
    s.replace("NaN", "nan")
}

/// Row 0 is the lowest `y`; each line is one grid row.
pub fn write_grid_csv(g: &ThermogramGrid) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema={GRID_SCHEMA}");
    let _ = writeln!(s, "# resolution_m={}", g.resolution);
    let _ = writeln!(s, "# origin_x_m={}", g.origin[0]);
    let _ = writeln!(s, "# origin_y_m={}", g.origin[1]);
    let _ = writeln!(s, "# rows={}", g.rows);
    let _ = writeln!(s, "# cols={}", g.cols);
    for row in g.values.chunks(g.cols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn read_grid_csv(text: &str) -> Result<ThermogramGrid> {
    let (header, body) = split_header(text);
    let map: BTreeMap<String, String> = header.into_iter().map(|(k, v, _)| (k, v)).collect();
    if map.get("schema").map(String::as_str) != Some(GRID_SCHEMA) {
        return Err(Error::Parse(format!("grid schema must be `{GRID_SCHEMA}`")));
    }
    let num = |k: &str| -> Result<f64> {
        map.get(k)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::Parse(format!("grid header lacks numeric `{k}`")))
    };
    let (rows, cols) = (num("rows")? as usize, num("cols")? as usize);
    let mut values = Vec::with_capacity(rows * cols);
    for (line, text) in &body {
        let before = values.len();
        for v in text.split(',') {
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {line}: `{v}` is not a number")))?,
            );
        }
        if values.len() - before != cols {
            return Err(Error::Parse(format!("line {line}: expected {cols} values")));
        }
    }
    if body.len() != rows {
        return Err(Error::Parse(format!("expected {rows} grid rows, found {}", body.len())));
    }
    Ok(ThermogramGrid {
        resolution: num("resolution_m")?,
        rows,
        cols,
        values,
        origin: [num("origin_x_m")?, num("origin_y_m")?],
    })
}

/// `(current A, ΔT K)` pairs. Blank lines, `#` comments and a non-numeric
/// title row are skipped; an empty file yields no points.
pub fn read_heat_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => out.push((v[0], v[1])),
            None if out.is_empty() && fields.len() == 2 => continue,
            _ => {
                return Err(Error::Parse(format!(
                    "line {}: expected `current_a,delta_t_k`, got `{line}`",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trips_exactly() {
        let g = ThermogramGrid {
            resolution: 0.001,
            rows: 2,
            cols: 3,
            values: vec![296.0, 296.1, 1.0 / 3.0, 300.0, 301.25, 1e-17],
            origin: [0.0005, 0.0005],
        };
        assert_eq!(read_grid_csv(&write_grid_csv(&g)).unwrap(), g);
    }

    #[test]
    fn profile_marks_invalid_bins() {
        let mut p = TemperatureProfile {
            origin: 0.0,
            bin_length: 0.01,
            temperatures: vec![296.0, 297.0],
            sigmas: vec![1.0, 1.0],
            valid: vec![true, true],
        };
        p.invalidate(1);
        let text = write_profile_csv(&p);
        assert!(text.ends_with("1,0.015,nan,nan,0\n"), "{text}");
        assert!(text.contains("\n0,0.005,296,1,1\n"));
    }

    #[test]
    fn heat_csv_parsing() {
        assert!(read_heat_csv("").unwrap().is_empty());
        let pts = read_heat_csv("current_a,delta_t_k\n# comment\n0.5,10\n1,40\n").unwrap();
        assert_eq!(pts, vec![(0.5, 10.0), (1.0, 40.0)]);
        assert!(read_heat_csv("0.5,10\nx,y\n").is_err());
        assert!(read_heat_csv("1,2,3\n").is_err());
    }
}
