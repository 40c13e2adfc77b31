//! CSV export and import of 2-D `f64` buffers: one line per matrix row, values
//! in shortest round-trip decimal form.

use std::io::{Read, Write};

use super::{Buffer, Device};
use crate::error::{Error, Result};
use crate::index::IndexVec;

impl Buffer {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::InvalidArgument(format!(
                "csv export needs a 2-D buffer, got extent {}",
                self.extent()
            )));
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let mut fields = Vec::with_capacity(self.extent().last());
        for r in 0..self.rows() {
            fields.clear();
            fields.extend(self.row::<f64>(r)?.iter().map(|v| format!("{v:?}")));
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(device: Device, input: R) -> Result<Buffer> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut values = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for record in rd.records() {
            let record = record?;
            match cols {
                None => cols = Some(record.len()),
                Some(c) if c != record.len() => {
                    return Err(Error::Csv(format!(
                        "row {rows} has {} values, expected {c}",
                        record.len()
                    )))
                }
                Some(_) => {}
            }
            for field in &record {
                let v = field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Csv(format!("row {rows}: {field:?}: {e}")))?;
                values.push(v);
            }
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::Csv("empty matrix".into()))?;
        Buffer::from_slice(device, IndexVec::d2(rows, cols), &values)
    }
}
