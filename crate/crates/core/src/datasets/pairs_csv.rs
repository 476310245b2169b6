use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::AlignedDataset;
use crate::error::{Error, Result};
use crate::text::push_row;

/// Write the `x0_0,...,x0_{d-1},x1_0,...,x1_{d-1}` CSV form.
pub fn write_pairs_to<W: Write>(out: &mut W, ds: &AlignedDataset) -> std::io::Result<()> {
    let d = ds.dim();
    let header: Vec<String> = (0..d)
        .map(|j| format!("x0_{j}"))
        .chain((0..d).map(|j| format!("x1_{j}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for i in 0..ds.len() {
        line.clear();
        let (a, b) = ds.pair(i);
        push_row(&mut line, a.iter().chain(b.iter()).copied());
        writeln!(out, "{}", &line[1..])?;
    }
    Ok(())
}

pub fn write_pairs(path: &Path, ds: &AlignedDataset) -> Result<()> {
    let mut buf = Vec::new();
    write_pairs_to(&mut buf, ds).expect("writing to memory");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_pairs(path: &Path) -> Result<AlignedDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs(path, &text)
}

fn parse_pairs(path: &Path, text: &str) -> Result<AlignedDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::EmptyDataset);
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if !cols.len().is_multiple_of(2) || cols.is_empty() {
        return Err(Error::parse(
            path,
            1,
            format!(
                "header has {} columns; pair files need an even count",
                cols.len()
            ),
        ));
    }
    let d = cols.len() / 2;
    for (j, c) in cols.iter().enumerate() {
        let expected = if j < d {
            format!("x0_{j}")
        } else {
            format!("x1_{}", j - d)
        };
        if *c != expected {
            return Err(Error::parse(
                path,
                1,
                format!("column {} is {c:?}, expected {expected:?}", j + 1),
            ));
        }
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {} cells, found {}", cols.len(), cells.len()),
            ));
        }
        for cell in cells {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("not a number: {cell:?}")))?;
            values.push(v);
        }
    }
    let n = values.len() / cols.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let all = Array2::from_shape_vec((n, 2 * d), values).expect("row lengths checked");
    AlignedDataset::new(
        all.slice(ndarray::s![.., ..d]).to_owned(),
        all.slice(ndarray::s![.., d..]).to_owned(),
    )
}
