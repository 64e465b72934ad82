//! On-disk formats. All integers and floats are little-endian.
//!
//! ISOB-R, a stream of variable-length token matrices:
//!
//! ```text
//! "ISOBR1"  u8 dtype  u8 reserved  u32 n
//! repeat:   u64 sentence_id  u32 T  T·n values (row-major)
//! ```
//!
//! ISOB-M, a dense pre-pooled matrix:
//!
//! ```text
//! "ISOBM1"  u8 dtype  u8 reserved  u32 n  u64 N  N·n values (row-major)
//! ```
//!
//! `dtype` is 0 for f32 and 1 for f64. Values are promoted to f64 on read.
//! Small clouds may also be stored as CSV with a `dim0,…,dim{n−1}` header.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{IsoError, Result};

pub const RECORD_MAGIC: &[u8; 6] = b"ISOBR1";
pub const MATRIX_MAGIC: &[u8; 6] = b"ISOBM1";

const RECORD_HEADER_LEN: u64 = 12;
const MATRIX_HEADER_LEN: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(IsoError::UnsupportedFormat(format!("unknown dtype code {other}"))),
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn encode(self, values: &[f64], out: &mut Vec<u8>) {
        match self {
            Dtype::F32 => values
                .iter()
                .for_each(|v| out.extend_from_slice(&(*v as f32).to_le_bytes())),
            Dtype::F64 => values
                .iter()
                .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        }
    }

    fn decode(self, bytes: &[u8]) -> Vec<f64> {
        match self {
            Dtype::F32 => bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            Dtype::F64 => bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        }
    }
}

impl std::str::FromStr for Dtype {
    type Err = IsoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Dtype::F32),
            "f64" => Ok(Dtype::F64),
            other => Err(IsoError::UnsupportedFormat(format!("unknown dtype {other:?}"))),
        }
    }
}

/// Reads up to `len` bytes; returns how many were actually available.
fn read_up_to<R: Read>(reader: &mut R, len: u64, buf: &mut Vec<u8>) -> io::Result<u64> {
    buf.clear();
    reader.take(len).read_to_end(buf).map(|n| n as u64)
}

fn check_magic(found: &[u8], expected: &[u8; 6]) -> Result<()> {
    if found.len() < 6 {
        return Err(IsoError::UnsupportedFormat(format!(
            "file too short for a {} header",
            String::from_utf8_lossy(expected)
        )));
    }
    if &found[..6] != expected {
        let kind = &expected[..4];
        if found[..4] == *kind {
            return Err(IsoError::UnsupportedFormat(format!(
                "unsupported version {:?}, expected {:?}",
                String::from_utf8_lossy(&found[..6]),
                String::from_utf8_lossy(expected)
            )));
        }
        return Err(IsoError::UnsupportedFormat(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found[..6]),
            String::from_utf8_lossy(expected)
        )));
    }
    Ok(())
}

/// One token matrix as stored in an ISOB-R stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub sentence_id: u64,
    pub token_count: usize,
    /// `token_count × dim` values, row-major.
    pub values: Vec<f64>,
}

/// Sequential ISOB-R reader yielding records in file order.
pub struct RecordReader<R> {
    inner: R,
    dtype: Dtype,
    dim: usize,
    offset: u64,
    index: u64,
    buf: Vec<u8>,
    done: bool,
}

impl RecordReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> RecordReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut header = Vec::new();
        read_up_to(&mut inner, RECORD_HEADER_LEN, &mut header)?;
        check_magic(&header, RECORD_MAGIC)?;
        if header.len() < RECORD_HEADER_LEN as usize {
            return Err(IsoError::CorruptStream {
                record: 0,
                offset: header.len() as u64,
                reason: "truncated header".into(),
            });
        }
        let dtype = Dtype::from_code(header[6])?;
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(IsoError::UnsupportedFormat("header declares dimension 0".into()));
        }
        Ok(Self {
            inner,
            dtype,
            dim,
            offset: RECORD_HEADER_LEN,
            index: 0,
            buf: Vec::new(),
            done: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    fn read_record(&mut self) -> Result<Option<RawRecord>> {
        let start = self.offset;
        let got = read_up_to(&mut self.inner, 12, &mut self.buf)?;
        if got == 0 {
            return Ok(None);
        }
        if got < 12 {
            return Err(IsoError::CorruptStream {
                record: self.index,
                offset: start,
                reason: format!("record header truncated after {got} of 12 bytes"),
            });
        }
        let sentence_id = u64::from_le_bytes(self.buf[0..8].try_into().unwrap());
        let token_count = u32::from_le_bytes(self.buf[8..12].try_into().unwrap()) as usize;
        let want = (token_count * self.dim * self.dtype.width()) as u64;
        let got = read_up_to(&mut self.inner, want, &mut self.buf)?;
        if got < want {
            return Err(IsoError::CorruptStream {
                record: self.index,
                offset: start,
                reason: format!(
                    "sentence {sentence_id}: declared {token_count} tokens ({want} bytes), only {got} bytes present"
                ),
            });
        }
        let values = self.dtype.decode(&self.buf);
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(IsoError::InvalidData {
                sentence_id,
                reason: format!(
                    "non-finite value at token {}, dimension {}",
                    pos / self.dim,
                    pos % self.dim
                ),
            });
        }
        self.offset = start + 12 + want;
        self.index += 1;
        Ok(Some(RawRecord {
            sentence_id,
            token_count,
            values,
        }))
    }
}

impl<R: Read> Iterator for RecordReader<R> {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.read_record().transpose();
        if !matches!(out, Some(Ok(_))) {
            self.done = true;
        }
        out
    }
}

/// ISOB-R writer. Call [`RecordWriter::finish`] to flush.
pub struct RecordWriter<W: Write> {
    inner: W,
    dtype: Dtype,
    dim: usize,
    buf: Vec<u8>,
}

impl RecordWriter<BufWriter<File>> {
    pub fn create(path: &Path, dtype: Dtype, dim: usize) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), dtype, dim)
    }
}

impl<W: Write> RecordWriter<W> {
    pub fn new(mut inner: W, dtype: Dtype, dim: usize) -> Result<Self> {
        let dim32 = u32::try_from(dim)
            .ok()
            .filter(|d| *d > 0)
            .ok_or_else(|| IsoError::InvalidDimension(format!("cannot encode dimension {dim}")))?;
        let mut header = Vec::with_capacity(RECORD_HEADER_LEN as usize);
        header.extend_from_slice(RECORD_MAGIC);
        header.push(dtype.code());
        header.push(0);
        header.extend_from_slice(&dim32.to_le_bytes());
        inner.write_all(&header)?;
        Ok(Self {
            inner,
            dtype,
            dim,
            buf: Vec::new(),
        })
    }

    /// Writes one record; `tokens` is row-major with `dim` columns.
    pub fn write_record(&mut self, sentence_id: u64, tokens: &[f64]) -> Result<()> {
        if tokens.len() % self.dim != 0 {
            return Err(IsoError::InvalidDimension(format!(
                "sentence {sentence_id}: {} values is not a multiple of dimension {}",
                tokens.len(),
                self.dim
            )));
        }
        let limit = match self.dtype {
            Dtype::F32 => f32::MAX as f64,
            Dtype::F64 => f64::MAX,
        };
        if tokens.iter().any(|v| v.is_nan() || v.abs() > limit) {
            return Err(IsoError::InvalidData {
                sentence_id,
                reason: "value is non-finite or out of range for the stream dtype".into(),
            });
        }
        let count = u32::try_from(tokens.len() / self.dim).map_err(|_| IsoError::InvalidData {
            sentence_id,
            reason: "too many tokens".into(),
        })?;
        self.buf.clear();
        self.buf.extend_from_slice(&sentence_id.to_le_bytes());
        self.buf.extend_from_slice(&count.to_le_bytes());
        self.dtype.encode(tokens, &mut self.buf);
        self.inner.write_all(&self.buf)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn read_matrix<R: Read>(mut reader: R) -> Result<PointCloud> {
    let mut header = Vec::new();
    read_up_to(&mut reader, MATRIX_HEADER_LEN, &mut header)?;
    check_magic(&header, MATRIX_MAGIC)?;
    if header.len() < MATRIX_HEADER_LEN as usize {
        return Err(IsoError::CorruptStream {
            record: 0,
            offset: header.len() as u64,
            reason: "truncated header".into(),
        });
    }
    let dtype = Dtype::from_code(header[6])?;
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
    if dim == 0 {
        return Err(IsoError::UnsupportedFormat("header declares dimension 0".into()));
    }
    let row_bytes = (dim * dtype.width()) as u64;
    let mut buf = Vec::new();
    let got = read_up_to(&mut reader, row_bytes * count, &mut buf)?;
    if got < row_bytes * count {
        return Err(IsoError::CorruptStream {
            record: got / row_bytes,
            offset: MATRIX_HEADER_LEN + got,
            reason: format!("declared {count} rows, only {} complete", got / row_bytes),
        });
    }
    let values = dtype.decode(&buf);
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(IsoError::InvalidData {
            sentence_id: (pos / dim) as u64,
            reason: format!("non-finite value in row {}, dimension {}", pos / dim, pos % dim),
        });
    }
    PointCloud::from_row_major(count as usize, dim, &values)
}

pub fn write_matrix<W: Write>(mut writer: W, cloud: &PointCloud, dtype: Dtype) -> Result<()> {
    let dim = u32::try_from(cloud.dim())
        .map_err(|_| IsoError::InvalidDimension(format!("cannot encode dimension {}", cloud.dim())))?;
    let mut out = Vec::with_capacity(MATRIX_HEADER_LEN as usize + cloud.len() * cloud.dim() * dtype.width());
    out.extend_from_slice(MATRIX_MAGIC);
    out.push(dtype.code());
    out.push(0);
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    dtype.encode(&cloud.to_row_major(), &mut out);
    writer.write_all(&out)?;
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IsoError::UnsupportedFormat(format!("CSV header: {e}")))?
        .clone();
    for (j, h) in headers.iter().enumerate() {
        if h.trim() != format!("dim{j}") {
            return Err(IsoError::UnsupportedFormat(format!(
                "CSV header column {j} is {h:?}, expected \"dim{j}\""
            )));
        }
    }
    let dim = headers.len();
    let mut values = Vec::new();
    let mut count = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IsoError::UnsupportedFormat(format!("CSV row {i}: {e}")))?;
        if rec.len() != dim {
            return Err(IsoError::InvalidDimension(format!(
                "CSV row {i} has {} fields, header has {dim}",
                rec.len()
            )));
        }
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| IsoError::InvalidData {
                sentence_id: i as u64,
                reason: format!("cannot parse {field:?} as a number"),
            })?;
            values.push(v);
        }
        count += 1;
    }
    PointCloud::from_row_major(count, dim, &values)
}

pub fn write_csv<W: Write>(writer: W, cloud: &PointCloud) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = (0..cloud.dim()).map(|j| format!("dim{j}")).collect();
    let csv_err = |e: csv::Error| IsoError::Io(io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for row in cloud.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a cloud from ISOB-M, or from CSV when the file does not start with
/// the ISOB-M magic.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let mut file = BufReader::new(File::open(path)?);
    let mut head = [0u8; 6];
    let got = file.read(&mut head)?;
    let file = BufReader::new(File::open(path)?);
    if got == 6 && head[..4] == MATRIX_MAGIC[..4] {
        read_matrix(file)
    } else if got == 6 && head[..4] == RECORD_MAGIC[..4] {
        Err(IsoError::UnsupportedFormat(format!(
            "{} is an ISOB-R record stream; pool it first",
            path.display()
        )))
    } else {
        read_csv(file)
    }
}

pub fn save_cloud(path: &Path, cloud: &PointCloud, dtype: Dtype) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        write_csv(file, cloud)
    } else {
        write_matrix(file, cloud, dtype)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(dtype: Dtype, dim: usize, records: &[(u64, Vec<f64>)]) -> Vec<u8> {
        let mut w = RecordWriter::new(Vec::new(), dtype, dim).unwrap();
        for (id, vals) in records {
            w.write_record(*id, vals).unwrap();
        }
        w.finish().unwrap()
    }

    #[test]
    fn header_layout_is_exact() {
        let bytes = stream(Dtype::F32, 3, &[(7, vec![1.0, 2.0, 3.0])]);
        assert_eq!(&bytes[..6], b"ISOBR1");
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 0);
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &7u64.to_le_bytes());
        assert_eq!(&bytes[20..24], &1u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 12 + 3 * 4);
    }

    #[test]
    fn header_only_stream_is_empty() {
        let bytes = stream(Dtype::F64, 4, &[]);
        let r = RecordReader::new(&bytes[..]).unwrap();
        assert_eq!(r.dim(), 4);
        assert_eq!(r.count(), 0);
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = stream(Dtype::F32, 2, &[]);
        bytes[5] = b'2';
        assert!(matches!(
            RecordReader::new(&bytes[..]),
            Err(IsoError::UnsupportedFormat(m)) if m.contains("version")
        ));
        bytes[0] = b'X';
        assert!(matches!(
            RecordReader::new(&bytes[..]),
            Err(IsoError::UnsupportedFormat(m)) if m.contains("magic")
        ));
        let mut bytes = stream(Dtype::F32, 2, &[]);
        bytes[6] = 9;
        assert!(matches!(
            RecordReader::new(&bytes[..]),
            Err(IsoError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn truncated_record_names_record() {
        let bytes = stream(
            Dtype::F32,
            2,
            &[(10, vec![1.0, 2.0]), (11, vec![1.0, 2.0, 3.0, 4.0])],
        );
        let cut = &bytes[..bytes.len() - 3];
        let out: Vec<_> = RecordReader::new(cut).unwrap().collect();
        assert_eq!(out.len(), 2);
        assert!(out[0].is_ok());
        match &out[1] {
            Err(IsoError::CorruptStream {
                record,
                offset,
                reason,
            }) => {
                assert_eq!(*record, 1);
                assert_eq!(*offset, 12 + 12 + 8);
                assert!(reason.contains("sentence 11"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_payload_is_invalid_data() {
        let mut bytes = stream(Dtype::F32, 2, &[(5, vec![1.0, 2.0])]);
        let at = bytes.len() - 4;
        bytes[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = RecordReader::new(&bytes[..]).unwrap().next().unwrap().unwrap_err();
        assert!(matches!(err, IsoError::InvalidData { sentence_id: 5, .. }));
    }

    #[test]
    fn writer_rejects_ragged_tokens() {
        let mut w = RecordWriter::new(Vec::new(), Dtype::F32, 3).unwrap();
        assert!(w.write_record(0, &[1.0, 2.0]).is_err());
        assert!(w.write_record(0, &[1.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn matrix_round_trip_and_truncation() {
        let cloud = PointCloud::from_rows(&[[0.1, 0.2], [0.3, -5.5], [1e-30, 7.0]]).unwrap();
        let mut bytes = Vec::new();
        write_matrix(&mut bytes, &cloud, Dtype::F64).unwrap();
        assert_eq!(bytes.len(), 20 + 6 * 8);
        assert_eq!(read_matrix(&bytes[..]).unwrap(), cloud);

        let err = read_matrix(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, IsoError::CorruptStream { record: 2, .. }));
        bytes[0] = b'J';
        assert!(matches!(read_matrix(&bytes[..]), Err(IsoError::UnsupportedFormat(_))));
    }

    #[test]
    fn csv_round_trip() {
        let cloud = PointCloud::from_rows(&[[0.1, 0.2, 3.0], [0.3, -5.5, 1e-9]]).unwrap();
        let mut bytes = Vec::new();
        write_csv(&mut bytes, &cloud).unwrap();
        assert!(bytes.starts_with(b"dim0,dim1,dim2\n"));
        assert_eq!(read_csv(&bytes[..]).unwrap(), cloud);
        assert!(read_csv(&b"x,y\n1,2\n"[..]).is_err());
    }
}
