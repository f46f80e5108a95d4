//! File helpers shared by the writers.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::Compression;

use crate::error::{Error, Result};

struct CountingWriter<W> {
    inner: W,
    count: u64,
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.count += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place. Returns the number of bytes on disk.
pub fn write_atomic<F>(path: &Path, gzip: bool, body: F) -> Result<u64>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    let mut counter = CountingWriter {
        inner: BufWriter::new(tmp.as_file()),
        count: 0,
    };
    let written = (|| -> io::Result<()> {
        if gzip {
            // mtime 0 in the header keeps output byte-identical
            let mut encoder = flate2::GzBuilder::new()
                .mtime(0)
                .write(&mut counter, Compression::default());
            body(&mut encoder)?;
            encoder.finish()?;
        } else {
            body(&mut counter)?;
        }
        counter.flush()
    })();
    written.map_err(|e| Error::io(path, e))?;
    let count = counter.count;
    drop(counter);
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(count)
}

pub fn is_gzip_path(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext == "gz")
}

/// Opens a file for line reading, decompressing `.gz` paths.
pub(crate) fn open_lines(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if is_gzip_path(path) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}
