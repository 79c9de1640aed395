//! Pull-based instance streams.
//!
//! A [`StreamSource`] yields each instance at most once and exposes no
//! rewind; the engine drains it on the controller side and hands record
//! batches to mappers.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::schema::{AttrValue, AttributeKind, Instance, Schema};

/// A malformed CSV record, independent of its position in the stream.
#[derive(Debug, Error)]
pub enum RecordError {
    #[error("expected {expected} fields, found {found}")]
    FieldCountMismatch { expected: usize, found: usize },
    #[error("attribute `{attribute}`: unknown nominal value `{value}`")]
    UnknownNominalValue { attribute: String, value: String },
    #[error("unknown class label `{0}`")]
    UnknownClassLabel(String),
    #[error("attribute `{attribute}`: `{value}` is not a finite number")]
    BadNumeric { attribute: String, value: String },
}

/// Ingestion failure: I/O or a record error tagged with its 1-based record
/// number.
#[derive(Debug, Error)]
pub enum StreamError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("record {record}: {source}")]
    Record {
        record: u64,
        #[source]
        source: RecordError,
    },
}

/// Forward-only, single-consumer instance source. Each instance is yielded
/// at most once; after the stream ends, `next_instance` keeps returning
/// `Ok(None)`.
pub trait StreamSource {
    fn next_instance(&mut self) -> Result<Option<Instance>, StreamError>;
}

/// Parses one CSV record (comma-separated, no quoting, class label last)
/// against a schema.
pub fn parse_instance(line: &str, schema: &Schema) -> Result<Instance, RecordError> {
    let fields: Vec<&str> = line.split(',').collect();
    let expected = schema.attribute_count() + 1;
    if fields.len() != expected {
        return Err(RecordError::FieldCountMismatch {
            expected,
            found: fields.len(),
        });
    }
    let mut values = Vec::with_capacity(schema.attribute_count());
    for (field, attr) in fields.iter().zip(schema.attributes()) {
        let field = field.trim();
        match &attr.kind {
            AttributeKind::Numeric => {
                let x: f64 = field.parse().map_err(|_| RecordError::BadNumeric {
                    attribute: attr.name.clone(),
                    value: field.to_string(),
                })?;
                if !x.is_finite() {
                    return Err(RecordError::BadNumeric {
                        attribute: attr.name.clone(),
                        value: field.to_string(),
                    });
                }
                values.push(AttrValue::Numeric(x));
            }
            AttributeKind::Nominal { domain } => {
                let v = domain.iter().position(|d| d == field).ok_or_else(|| {
                    RecordError::UnknownNominalValue {
                        attribute: attr.name.clone(),
                        value: field.to_string(),
                    }
                })?;
                values.push(AttrValue::Nominal(v));
            }
        }
    }
    let label_field = fields[expected - 1].trim();
    let label = schema
        .class_index(label_field)
        .ok_or_else(|| RecordError::UnknownClassLabel(label_field.to_string()))?;
    Ok(Instance { values, label })
}

/// CSV file stream with a sidecar schema. Yields parsed instances in file
/// order exactly once; parse errors surface with their record number.
pub struct CsvStream {
    reader: BufReader<File>,
    schema: Arc<Schema>,
    record: u64,
    line_buf: String,
    done: bool,
}

/// Opens `path` for single-pass reading under `schema`.
pub fn open_csv_stream(path: &Path, schema: Arc<Schema>) -> Result<CsvStream, StreamError> {
    let file = File::open(path)?;
    Ok(CsvStream {
        reader: BufReader::new(file),
        schema,
        record: 0,
        line_buf: String::new(),
        done: false,
    })
}

impl StreamSource for CsvStream {
    fn next_instance(&mut self) -> Result<Option<Instance>, StreamError> {
        if self.done {
            return Ok(None);
        }
        loop {
            self.line_buf.clear();
            let n = self.reader.read_line(&mut self.line_buf)?;
            if n == 0 {
                self.done = true;
                return Ok(None);
            }
            let line = self.line_buf.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                continue;
            }
            self.record += 1;
            let inst = parse_instance(line, &self.schema).map_err(|source| {
                StreamError::Record {
                    record: self.record,
                    source,
                }
            })?;
            return Ok(Some(inst));
        }
    }
}

/// In-memory stream over a prebuilt instance vector; mostly for tests.
pub struct VecStream {
    items: std::vec::IntoIter<Instance>,
}

impl VecStream {
    pub fn new(items: Vec<Instance>) -> Self {
        VecStream {
            items: items.into_iter(),
        }
    }
}

impl StreamSource for VecStream {
    fn next_instance(&mut self) -> Result<Option<Instance>, StreamError> {
        Ok(self.items.next())
    }
}

/// Wraps any source and counts how many instances it has yielded; used to
/// audit the single-pass contract.
pub struct CountingSource<S> {
    inner: S,
    yielded: u64,
}

impl<S: StreamSource> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        CountingSource { inner, yielded: 0 }
    }

    pub fn yielded(&self) -> u64 {
        self.yielded
    }
}

impl<S: StreamSource> StreamSource for CountingSource<S> {
    fn next_instance(&mut self) -> Result<Option<Instance>, StreamError> {
        let next = self.inner.next_instance()?;
        if next.is_some() {
            self.yielded += 1;
        }
        Ok(next)
    }
}
