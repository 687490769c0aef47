//! Plain CSV output shared by every report type.

use std::io::{self, Write};

/// Rounds to 12 significant digits, then prints the shortest representation
/// that round-trips the rounded value.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Writes `# key: value` metadata lines, the header row, then one row per record.
pub fn write_csv<W: Write, R: CsvRecord>(
    out: &mut W,
    metadata: &[(&str, String)],
    rows: &[R],
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(R::header())?;
    for row in rows {
        writer.write_record(row.fields())?;
    }
    writer.flush()
}
