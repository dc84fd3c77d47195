use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// 17 significant digits; empty for a missing value.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Collects the files written by one run.
pub struct Output {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(opt(None), "");
    }
}
