//! Plain CSV rendering for result records.
//!
//! All fields are numbers, booleans or simple identifiers, so no quoting is
//! needed. Floats use Rust's shortest round-trip formatting, which keeps
//! output byte-identical for identical inputs.

use std::io::{self, Write};

pub trait CsvRecord {
    fn csv_header(&self) -> Vec<String>;
    fn csv_fields(&self) -> Vec<String>;
}

pub fn write_csv<W: Write, R: CsvRecord>(out: &mut W, rows: &[R]) -> io::Result<()> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    writeln!(out, "{}", first.csv_header().join(","))?;
    for row in rows {
        writeln!(out, "{}", row.csv_fields().join(","))?;
    }
    Ok(())
}

pub(crate) fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
