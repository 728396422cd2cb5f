//! CSV and JSON emission. Floats carry 17 significant digits so that files
//! round-trip exactly and identical runs are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates rows in memory and writes them in one go.
#[derive(Debug)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    /// Appends a row of already formatted cells.
    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut n = 0;
        for cell in cells {
            if n > 0 {
                self.text.push(',');
            }
            self.text.push_str(cell.as_ref());
            n += 1;
        }
        debug_assert_eq!(n, self.columns);
        self.text.push('\n');
    }

    pub fn floats(&mut self, values: &[f64]) {
        self.row(values.iter().map(|&v| float(v)));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.text)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialisation of plain data");
    text.push('\n');
    write_file(path, &text)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.0), "-2.0000000000000000e0");
        let x = 1.0 / 3.0;
        assert_eq!(float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new(&["k", "v"]);
        csv.row(["1".to_string(), float(0.5)]);
        assert_eq!(csv.as_str(), "k,v\n1,5.0000000000000000e-1\n");
    }
}
