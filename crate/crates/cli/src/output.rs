//! Fixed CSV formatting so identical runs give byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::CliError;

/// Nine significant digits, `%g` style: fixed notation for exponents in
/// `[-5, 9)`, scientific otherwise, trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn fmt_sign(s: i8) -> String {
    s.to_string()
}

/// A header plus rows, written in one go.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, w: &mut dyn Write) -> Result<(), CliError> {
        let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        csv.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            csv.write_record(row).map_err(csv_err)?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Writes to `path`, or to `stdout` when no path is given.
    pub fn emit(&self, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
        match path {
            Some(p) => {
                let mut f = BufWriter::new(File::create(p).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?);
                self.write_to(&mut f)?;
                f.flush()?;
                Ok(())
            }
            None => self.write_to(stdout),
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(io::Error::new(io::ErrorKind::Other, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.7320508075688772), "1.73205081");
        assert_eq!(fmt_num(-0.984375), "-0.984375");
        assert_eq!(fmt_num(1147.39112345), "1147.39112");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.01), "0.01");
        assert_eq!(fmt_num(1.5e-7), "1.5e-7");
        assert_eq!(fmt_num(2.5e12), "2.5e12");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(-1e-300 * 1e-300), "0");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
