//! Readers and writers for the on-disk formats. Floats go to CSV with 17
//! significant digits so every value round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use ssm_abc::eval::PosteriorGrid;

use crate::error::{CliError, CliResult};

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Csv {
    path: PathBuf,
    inner: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(path: PathBuf, header: &[&str]) -> CliResult<Self> {
        let mut c = Self { path, inner: csv::Writer::from_writer(Vec::new()) };
        c.row(header)?;
        Ok(c)
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let path = &self.path;
        self.inner.write_record(fields).map_err(|e| CliError::Read { path: path.clone(), message: e.to_string() })
    }

    pub fn finish(self) -> CliResult<()> {
        let Csv { path, inner } = self;
        let bytes = inner.into_inner().map_err(|e| CliError::Read { path: path.clone(), message: e.to_string() })?;
        fs::write(&path, bytes).map_err(CliError::io(path))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn write_grid(path: PathBuf, grid: &PosteriorGrid) -> CliResult<()> {
    let mut csv = Csv::new(path, &["grid", "ordinate"])?;
    for (x, p) in grid.abscissae.iter().zip(&grid.ordinates) {
        csv.row([float(*x), float(*p)])?;
    }
    csv.finish()
}

/// Rows of a CSV file with a header, as strings.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let bad = |message: String| CliError::Read { path: path.to_path_buf(), message };
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(|e| bad(e.to_string())))
        .collect::<CliResult<Vec<Vec<String>>>>()?;
    Ok((header, rows))
}

pub fn parse_float(path: &Path, s: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Read { path: path.to_path_buf(), message: format!("`{s}` is not a number") })
}

pub fn read_grid(path: &Path, param_index: usize) -> CliResult<PosteriorGrid> {
    let (header, rows) = read_csv(path)?;
    if header != ["grid", "ordinate"] {
        return Err(CliError::Read { path: path.to_path_buf(), message: format!("unexpected header {header:?}") });
    }
    let mut xs = Vec::with_capacity(rows.len());
    let mut ps = Vec::with_capacity(rows.len());
    for r in &rows {
        xs.push(parse_float(path, &r[0])?);
        ps.push(parse_float(path, &r[1])?);
    }
    Ok(PosteriorGrid::new(param_index, xs, ps)?)
}
