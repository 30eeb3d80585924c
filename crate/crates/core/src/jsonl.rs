//! Newline-delimited JSON helpers shared by every stage.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("read failed at line {line}: {source}")]
    Io { line: u64, source: io::Error },
    #[error("line {line}: {source}")]
    Parse { line: u64, source: serde_json::Error },
}

/// Opens `path` for buffered reading, reporting the path on failure.
pub fn open(path: &Path) -> Result<BufReader<File>, JsonlError> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 16, f))
        .map_err(|source| JsonlError::Open { path: path.to_path_buf(), source })
}

/// Creates `path` for buffered writing.
pub fn create(path: &Path) -> Result<BufWriter<File>, JsonlError> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 16, f))
        .map_err(|source| JsonlError::Open { path: path.to_path_buf(), source })
}

/// Reads raw lines with a reused buffer, skipping blank ones.
///
/// Yields `(line_number, line)` where numbering is 1-based over the whole
/// file, blank lines included. The buffer only ever grows to the longest
/// line seen.
pub struct LineReader<R> {
    inner: R,
    buf: Vec<u8>,
    line_no: u64,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, buf: Vec::new(), line_no: 0 }
    }

    /// Returns the next non-blank line as raw bytes (without the newline).
    pub fn next_line(&mut self) -> Option<Result<(u64, &[u8]), JsonlError>> {
        loop {
            self.buf.clear();
            match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    self.line_no += 1;
                    let mut end = self.buf.len();
                    while end > 0 && matches!(self.buf[end - 1], b'\n' | b'\r') {
                        end -= 1;
                    }
                    if self.buf[..end].iter().all(u8::is_ascii_whitespace) {
                        continue;
                    }
                    return Some(Ok((self.line_no, &self.buf[..end])));
                }
                Err(source) => {
                    return Some(Err(JsonlError::Io { line: self.line_no + 1, source }))
                }
            }
        }
    }
}

/// Typed iterator over a JSONL stream. Malformed lines are errors.
pub struct JsonlReader<R, T> {
    lines: LineReader<R>,
    _marker: PhantomData<fn() -> T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonlReader<R, T> {
    pub fn new(inner: R) -> Self {
        Self { lines: LineReader::new(inner), _marker: PhantomData }
    }
}

impl<T: DeserializeOwned> JsonlReader<BufReader<File>, T> {
    pub fn open(path: &Path) -> Result<Self, JsonlError> {
        Ok(Self::new(open(path)?))
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonlReader<R, T> {
    type Item = Result<T, JsonlError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, bytes) = match self.lines.next_line()? {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        Some(serde_json::from_slice(bytes).map_err(|source| JsonlError::Parse { line, source }))
    }
}

/// Writes one compact JSON value per line.
pub struct JsonlWriter<W: Write> {
    inner: W,
    written: u64,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, written: 0 }
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> io::Result<()> {
        serde_json::to_writer(&mut self.inner, value)?;
        self.inner.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Collects every record of a JSONL file.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    JsonlReader::open(path)?.collect()
}

/// Writes `items` to `path` as JSONL, returning the record count.
pub fn write_all<'a, T, I>(path: &Path, items: I) -> Result<u64, JsonlError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let wrap = |source| JsonlError::Open { path: path.to_path_buf(), source };
    let mut writer = JsonlWriter::new(create(path)?);
    for item in items {
        writer.write(item).map_err(wrap)?;
    }
    let n = writer.written();
    writer.finish().map_err(wrap)?;
    Ok(n)
}
