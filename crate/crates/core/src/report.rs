//! CSV reading and writing shared by every table the crate emits.
//!
//! Lines starting with `#` are metadata comments; the reader skips them.

use std::io;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

pub fn write_rows<T: Serialize, W: io::Write>(rows: &[T], sink: W) -> Result<()> {
    write_rows_with_meta(rows, &[], sink)
}

/// Writes `# key=value` comment lines, then a header and the rows.
pub fn write_rows_with_meta<T: Serialize, W: io::Write>(
    rows: &[T],
    meta: &[(&str, String)],
    mut sink: W,
) -> Result<()> {
    for (key, value) in meta {
        writeln!(sink, "# {key}={value}").map_err(csv::Error::from)?;
    }
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned, R: io::Read>(source: R) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(source);
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
