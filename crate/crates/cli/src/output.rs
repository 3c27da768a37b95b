//! CSV tables and key=value manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

/// Nine significant digits in scientific notation; `inf`/`-inf` tokens.
pub fn fmt_num(x: f64) -> anyhow::Result<String> {
    if x.is_nan() {
        bail!("refusing to write NaN");
    }
    Ok(if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.8e}")
    })
}

/// Parses a cell written by [`fmt_num`].
pub fn parse_num(s: &str) -> anyhow::Result<f64> {
    Ok(match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse().with_context(|| format!("bad number {s:?}"))?,
    })
}

pub fn flag(b: bool) -> String {
    if b { "*" } else { "" }.into()
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> anyhow::Result<()> {
        if row.len() != self.header.len() {
            bail!("row has {} cells, header has {}", row.len(), self.header.len());
        }
        let cells = row
            .into_iter()
            .map(|c| match c {
                Cell::Num(x) => fmt_num(x),
                Cell::Int(i) => Ok(i.to_string()),
                Cell::Text(s) => {
                    if s.contains([',', '\n', '"']) {
                        bail!("text cell {s:?} needs quoting");
                    }
                    Ok(s)
                }
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        self.rows.push(cells);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Ordered key=value lines.
#[derive(Default)]
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        let v = fmt_num(value).unwrap_or_else(|_| "nan".into());
        self.set(key, v);
    }

    pub fn render(&self) -> String {
        self.lines.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k}={v}");
            s
        })
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Reads a CSV written by [`Table`] into a header and rows of raw cells.
pub fn read_csv(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    Ok((header, rows))
}

pub fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_to_nine_digits() {
        assert_eq!(fmt_num(0.2391480).unwrap(), "2.39148000e-1");
        assert_eq!(fmt_num(f64::INFINITY).unwrap(), "inf");
        assert_eq!(fmt_num(0.0).unwrap(), "0");
        assert!(fmt_num(f64::NAN).is_err());
        let x = 1.0 / 3.0;
        assert!((parse_num(&fmt_num(x).unwrap()).unwrap() - x).abs() < 1e-9);
    }

    #[test]
    fn table_checks_widths() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![1.5.into(), "*".into()]).unwrap();
        assert!(t.push(vec![1.0.into()]).is_err());
        assert_eq!(t.render(), "a,b\n1.50000000e0,*\n");
    }
}
