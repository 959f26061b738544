use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{ClassLabel, Dataset, PcaProjection, Provenance, Sample};
use crate::error::{Error, Result};

/// Column layout of a feature CSV: `f0,…,f{d-1}` optionally followed by `label`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvHeader {
    pub feature_dim: usize,
    pub has_label: bool,
}

impl CsvHeader {
    fn parse(record: &csv::StringRecord) -> std::result::Result<Self, String> {
        let names: Vec<&str> = record.iter().map(str::trim).collect();
        let has_label = names.last() == Some(&"label");
        let feature_dim = names.len() - usize::from(has_label);
        if feature_dim == 0 {
            return Err("header has no feature columns".into());
        }
        for (i, name) in names[..feature_dim].iter().enumerate() {
            if *name != format!("f{i}") {
                return Err(format!("column {i} is named {name:?}, expected \"f{i}\""));
            }
        }
        Ok(CsvHeader {
            feature_dim,
            has_label,
        })
    }

    fn columns(&self) -> usize {
        self.feature_dim + usize::from(self.has_label)
    }
}

/// One parsed data row.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub line: u64,
    pub features: Vec<f64>,
    pub label: Option<ClassLabel>,
}

/// Row-by-row reader over a feature CSV, usable on unbounded streams.
pub struct RecordReader<R: Read> {
    inner: csv::Reader<R>,
    header: CsvHeader,
    classes: usize,
    source: PathBuf,
    row: csv::StringRecord,
}

impl<R: Read> RecordReader<R> {
    pub fn new(
        reader: R,
        source: impl Into<PathBuf>,
        expected_dim: Option<usize>,
        classes: usize,
    ) -> Result<Self> {
        let source = source.into();
        let mut inner = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let parse_err = |line: u64, message: String| Error::Parse {
            path: source.clone(),
            line,
            message,
        };
        let header_record = inner
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if header_record.is_empty() {
            return Err(parse_err(1, "missing header".into()));
        }
        let header = CsvHeader::parse(&header_record).map_err(|m| parse_err(1, m))?;
        if let Some(dim) = expected_dim {
            if dim != header.feature_dim {
                return Err(parse_err(
                    1,
                    format!("{} feature columns, expected {dim}", header.feature_dim),
                ));
            }
        }
        Ok(RecordReader {
            inner,
            header,
            classes,
            source,
            row: csv::StringRecord::new(),
        })
    }

    pub fn header(&self) -> CsvHeader {
        self.header
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    fn error(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.clone(),
            line,
            message: message.into(),
        }
    }

    /// Reads the next row, or `None` at end of input.
    pub fn next_record(&mut self) -> Result<Option<Record>> {
        let more = self.inner.read_record(&mut self.row).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            self.error(line, e.to_string())
        })?;
        if !more {
            return Ok(None);
        }
        let line = self.row.position().map_or(0, |p| p.line());
        if self.row.len() != self.header.columns() {
            return Err(self.error(
                line,
                format!("{} columns, expected {}", self.row.len(), self.header.columns()),
            ));
        }
        let mut features = Vec::with_capacity(self.header.feature_dim);
        for (i, field) in self.row.iter().take(self.header.feature_dim).enumerate() {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|_| self.error(line, format!("f{i}: {field:?} is not a number")))?;
            if !value.is_finite() {
                return Err(self.error(line, format!("f{i}: {field:?} is not finite")));
            }
            features.push(value);
        }
        let label = if self.header.has_label {
            let field = self.row.get(self.header.feature_dim).unwrap_or_default().trim();
            let value: i64 = field
                .parse()
                .map_err(|_| self.error(line, format!("label {field:?} is not an integer")))?;
            Some(
                ClassLabel::from_value(value, self.classes)
                    .map_err(|e| self.error(line, e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Some(Record {
            line,
            features,
            label,
        }))
    }
}

impl<R: Read> Iterator for RecordReader<R> {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// Reads a labeled dataset from any reader. `source` is used in error messages.
pub fn read_csv<R: Read>(
    reader: R,
    source: impl Into<PathBuf>,
    expected_dim: Option<usize>,
    classes: usize,
) -> Result<Dataset> {
    let mut rows = RecordReader::new(reader, source, expected_dim, classes)?;
    if !rows.header().has_label {
        return Err(rows.error(1, "header has no label column"));
    }
    let mut samples = Vec::new();
    while let Some(rec) = rows.next_record()? {
        samples.push(Sample {
            features: rec.features,
            label: rec.label.expect("labeled header"),
        });
    }
    Dataset::new(
        samples,
        rows.header().feature_dim,
        classes,
        Provenance::File(rows.source().to_path_buf()),
    )
}

pub fn load_csv(path: impl AsRef<Path>, expected_dim: Option<usize>, classes: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_csv(BufReader::new(file), path, expected_dim, classes)
}

fn feature_header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("f{i}")).collect()
}

pub fn write_csv_to<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = feature_header(dataset.feature_dim());
    header.push("label".into());
    out.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(header.len());
    for s in dataset.samples() {
        row.clear();
        row.extend(s.features.iter().map(|x| x.to_string()));
        row.push(s.label.value().to_string());
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(dataset, BufWriter::new(File::create(path)?))
}

/// Writes `pc0,…,pc{k-1},label` rows.
pub fn write_pca_csv(projection: &PcaProjection, path: impl AsRef<Path>) -> Result<()> {
    let mut out = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let k = projection.components.len();
    let mut header: Vec<String> = (0..k).map(|i| format!("pc{i}")).collect();
    header.push("label".into());
    out.write_record(&header).map_err(csv_err)?;
    for (point, label) in projection.points.iter().zip(&projection.labels) {
        let mut row: Vec<String> = point.iter().map(|x| x.to_string()).collect();
        row.push(label.value().to_string());
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data(format!("{other:?}")),
    }
}
