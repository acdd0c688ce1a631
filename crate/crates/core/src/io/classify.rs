use serde::Deserialize;

use super::IoError;
use crate::geometry::DampingMeasurement;

/// One row of a damping table. Rates are taken as given; validation happens
/// in the classifier so a bad row does not stop the others.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingRow {
    pub line: usize,
    pub name: Option<String>,
    pub measurement: DampingMeasurement,
}

#[derive(Deserialize)]
struct Raw {
    #[serde(default)]
    name: Option<String>,
    gamma_x: f64,
    gamma_x_err: f64,
    gamma_y: f64,
    gamma_y_err: f64,
    #[serde(default)]
    pressure_mbar: Option<f64>,
}

/// CSV with header `gamma_x,gamma_x_err,gamma_y,gamma_y_err` plus optional
/// `name` and `pressure_mbar` columns, in any order. Lines starting with `#`
/// are comments.
pub fn parse_damping_csv(text: &str) -> Result<Vec<DampingRow>, IoError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        IoError::Parse { line, reason: e.to_string() }
    };
    let headers = reader.headers().map_err(parse_err)?.clone();
    let mut rows = Vec::new();
    let mut rec = csv::StringRecord::new();
    while reader.read_record(&mut rec).map_err(parse_err)? {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let raw: Raw = rec.deserialize(Some(&headers)).map_err(|e| IoError::Parse { line, reason: e.to_string() })?;
        rows.push(DampingRow {
            line,
            name: raw.name.filter(|n| !n.is_empty()),
            measurement: DampingMeasurement {
                gamma_x: raw.gamma_x,
                gamma_x_err: raw.gamma_x_err,
                gamma_y: raw.gamma_y,
                gamma_y_err: raw.gamma_y_err,
                pressure_mbar: raw.pressure_mbar,
            },
        });
    }
    if rows.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_rows_in_any_column_order() {
        let text = "# fig 4b\nname,gamma_y,gamma_y_err,gamma_x,gamma_x_err\nii,1267,5,1000,1\niv,1378,4,1000,1\n";
        let rows = parse_damping_csv(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].name.as_deref(), Some("ii"));
        assert_eq!(rows[1].measurement.gamma_y, 1378.0);
    }

    #[test]
    fn empty_and_malformed() {
        assert!(matches!(parse_damping_csv(""), Err(IoError::Empty)));
        assert!(matches!(parse_damping_csv("gamma_x,gamma_x_err,gamma_y,gamma_y_err\n"), Err(IoError::Empty)));
        let bad = "gamma_x,gamma_x_err,gamma_y,gamma_y_err\n1,0,1,0\n1,zz,1,0\n";
        assert!(matches!(parse_damping_csv(bad), Err(IoError::Parse { line: 3, .. })));
    }

    #[test]
    fn zero_rate_parses_and_is_left_to_the_classifier() {
        let rows = parse_damping_csv("gamma_x,gamma_x_err,gamma_y,gamma_y_err\n0,0,1,0\n").unwrap();
        assert_eq!(rows[0].measurement.gamma_x, 0.0);
    }
}
