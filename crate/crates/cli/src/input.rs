//! Matrix files: comma-separated rows, or JSON `{"rows": [[...], ...]}`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

#[derive(Deserialize)]
struct JsonMatrix {
    rows: Vec<Vec<f64>>,
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let rows = if text.trim_start().starts_with('{') {
        serde_json::from_str::<JsonMatrix>(text)
            .map_err(|e| format!("invalid JSON matrix: {e}"))?
            .rows
    } else {
        parse_csv(text)?
    };
    from_rows(rows)
}

fn parse_csv(text: &str) -> Result<Vec<Vec<f64>>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            line.split(',')
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("line {}: cannot parse {:?}", n + 1, cell.trim()))
                })
                .collect()
        })
        .collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err("empty matrix".to_string());
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(format!(
            "row {} has {} entries, expected {ncols}",
            i + 1,
            r.len()
        ));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err("matrix has non-finite entries".to_string());
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.into_iter().flatten(),
    ))
}
