//! Numeric CSV tables and point-cloud selection from them.

use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::CliError;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, CliError> {
        let bad =
            |line: usize, msg: String| CliError::Data(format!("{}:{line}: {msg}", path.display()));
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Ok(Table {
                header: Vec::new(),
                rows: Vec::new(),
            });
        };
        let header: Vec<String> = header.split(',').map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(i + 1, format!("not a number: {:?}", v.trim())))
                })
                .collect::<Result<_, _>>()?;
            if row.len() != header.len() {
                return Err(bad(
                    i + 1,
                    format!("expected {} columns, found {}", header.len(), row.len()),
                ));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Indices of the columns `{prefix}0, {prefix}1, ...` in order.
    pub fn indexed_columns(&self, prefix: &str) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some(c) = self.column(&format!("{prefix}{}", out.len())) {
            out.push(c);
        }
        out
    }

    pub fn select(&self, columns: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows.len(), columns.len()));
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &c) in columns.iter().enumerate() {
                out[[i, j]] = row[c];
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    X0,
    X1,
}

/// A CSV path with an optional `:x0` / `:x1` suffix choosing one side of a
/// pair file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CloudSpec {
    pub path: PathBuf,
    pub side: Option<Side>,
}

impl std::str::FromStr for CloudSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (path, side) = match s.rsplit_once(':') {
            Some((p, "x0")) => (p, Some(Side::X0)),
            Some((p, "x1")) => (p, Some(Side::X1)),
            _ => (s, None),
        };
        if path.is_empty() {
            return Err("empty path".into());
        }
        Ok(CloudSpec {
            path: PathBuf::from(path),
            side,
        })
    }
}

impl std::fmt::Display for CloudSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.path.display())?;
        match self.side {
            Some(Side::X0) => f.write_str(":x0"),
            Some(Side::X1) => f.write_str(":x1"),
            None => Ok(()),
        }
    }
}

/// Load a point cloud. Pair files (`x0_*`, `x1_*` columns) need a side;
/// other files contribute their `x_*` columns.
pub fn read_cloud(spec: &CloudSpec) -> Result<Array2<f64>, CliError> {
    let table = Table::read(&spec.path)?;
    let shown = spec.to_string();
    let pair_file = !table.indexed_columns("x0_").is_empty();
    let columns = match (pair_file, spec.side) {
        (true, Some(Side::X0)) => table.indexed_columns("x0_"),
        (true, Some(Side::X1)) => table.indexed_columns("x1_"),
        (true, None) => {
            return Err(CliError::Usage(format!(
                "{shown} is a pair file; append :x0 or :x1 to choose a side"
            )));
        }
        (false, Some(_)) => {
            return Err(CliError::Usage(format!(
                "{shown}: :x0/:x1 apply only to pair files"
            )));
        }
        (false, None) => table.indexed_columns("x_"),
    };
    if columns.is_empty() {
        return Err(CliError::Data(format!(
            "{shown}: no coordinate columns (expected x_0, x_1, ...)"
        )));
    }
    Ok(table.select(&columns))
}
