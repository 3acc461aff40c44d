//! Caption-contest vote tables.
//!
//! Each row holds the vote counts of one caption on a three-level scale. A
//! caption becomes a Bernoulli arm whose mean is the share of "somewhat funny"
//! or "funny" votes.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::instance::{Instance, NoiseModel};

pub const COLUMNS: [&str; 4] = [
    "caption_id",
    "count_unfunny",
    "count_somewhat_funny",
    "count_funny",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionRow {
    pub caption_id: String,
    pub unfunny: u64,
    pub somewhat_funny: u64,
    pub funny: u64,
}

impl CaptionRow {
    pub fn total(&self) -> u64 {
        self.unfunny + self.somewhat_funny + self.funny
    }

    pub fn mean(&self) -> f64 {
        (self.somewhat_funny + self.funny) as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CaptionTable {
    pub rows: Vec<CaptionRow>,
}

impl CaptionTable {
    pub fn parse<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let headers = reader.headers()?.clone();
        let mut index = [0usize; 4];
        for (slot, name) in index.iter_mut().zip(COLUMNS) {
            *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::CaptionRow {
                row: 0,
                message: format!("missing column `{name}` in header"),
            })?;
        }

        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::CaptionRow {
                row,
                message: format!("malformed row: {e}"),
            })?;
            let id = record.get(index[0]).unwrap_or_default().to_string();
            let count = |col: usize| -> Result<u64> {
                let field = record.get(index[col]).ok_or_else(|| Error::CaptionRow {
                    row,
                    message: format!("missing `{}`", COLUMNS[col]),
                })?;
                let value: i64 = field.parse().map_err(|_| Error::CaptionRow {
                    row,
                    message: format!("`{}` is not an integer: {field:?}", COLUMNS[col]),
                })?;
                if value < 0 {
                    return Err(Error::CaptionRow {
                        row,
                        message: format!("negative `{}` ({value}) for caption {id}", COLUMNS[col]),
                    });
                }
                Ok(value as u64)
            };
            let parsed = CaptionRow {
                unfunny: count(1)?,
                somewhat_funny: count(2)?,
                funny: count(3)?,
                caption_id: id.clone(),
            };
            if parsed.total() == 0 {
                return Err(Error::CaptionRow {
                    row,
                    message: format!("caption {id} has zero votes"),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::CaptionRow {
                    row,
                    message: format!("duplicated caption_id {id}"),
                });
            }
            rows.push(parsed);
        }
        if rows.is_empty() {
            return Err(Error::CaptionRow {
                row: 0,
                message: "no caption rows".into(),
            });
        }
        Ok(CaptionTable { rows })
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(COLUMNS)?;
        for r in &self.rows {
            writer.write_record([
                r.caption_id.clone(),
                r.unfunny.to_string(),
                r.somewhat_funny.to_string(),
                r.funny.to_string(),
            ])?;
        }
        writer.flush().map_err(|e| Error::io("<csv sink>", e))?;
        Ok(())
    }

    pub fn to_instance(&self, label: impl Into<String>) -> Result<Instance> {
        Instance::new(label, NoiseModel::Bernoulli, self.rows.iter().map(CaptionRow::mean).collect())
    }
}

/// Reads a vote table and returns the Bernoulli instance, one arm per row in
/// file order.
pub fn parse_caption_csv<R: Read>(source: R) -> Result<Instance> {
    CaptionTable::parse(source)?.to_instance("captions")
}
