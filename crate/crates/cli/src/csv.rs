// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Scientific notation with 17 significant digits; parses back bit-exactly.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl CsvWriter<BufWriter<File>> {
    pub fn create(path: &Path, seed: u64, header: &str) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        Self::new(BufWriter::new(File::create(path)?), seed, header)
    }
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, seed: u64, header: &str) -> io::Result<Self> {
        writeln!(out, "# ouqsd {} seed={seed}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "{header}")?;
        Ok(Self {
            out,
            columns: header.split(',').count(),
        })
    }

    pub fn row(&mut self, values: &[f64]) -> io::Result<()> {
        debug_assert_eq!(values.len(), self.columns);
        let line: Vec<String> = values.iter().map(|&v| format_real(v)).collect();
        writeln!(self.out, "{}", line.join(","))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        for &x in &[0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02214076e23, -0.0] {
            assert_eq!(
                format_real(x).parse::<f64>().unwrap().to_bits(),
                x.to_bits()
            );
        }
        assert_eq!(format_real(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn comment_then_header() {
        let mut w = CsvWriter::new(Vec::new(), 42, "y,density,cdf").unwrap();
        w.row(&[1.0, 0.5, 0.25]).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# ouqsd ") && lines[0].ends_with(" seed=42"));
        assert_eq!(lines[1], "y,density,cdf");
        assert_eq!(lines[2].split(',').count(), 3);
    }
}
