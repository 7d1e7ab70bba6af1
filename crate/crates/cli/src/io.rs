//! Input and output plumbing shared by the subcommands.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use fairforge::textcore::{SegmentReader, TextError};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
#[error("input file not found: {}", .0.display())]
pub struct MissingFile(pub PathBuf);

pub fn require(path: &Path) -> Result<(), MissingFile> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingFile(path.to_path_buf()))
    }
}

/// A file, or stdin when `path` is `None`.
pub fn reader(path: Option<&Path>) -> anyhow::Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => {
            require(p)?;
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Box::new(BufReader::new(file))
        }
        None => Box::new(BufReader::new(io::stdin())),
    })
}

/// Non-blank lines as segments numbered by line, streamed.
pub fn segments(path: Option<&Path>, lang: &str) -> anyhow::Result<SegmentReader<Box<dyn BufRead>>> {
    let name = path.map_or_else(|| PathBuf::from("<stdin>"), Path::to_path_buf);
    Ok(SegmentReader::new(reader(path)?, lang, name))
}

/// A file, or stdout when `path` is `None`.
pub fn writer(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Every line, blank ones included, so files stay aligned by line number.
pub fn aligned_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    require(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| TextError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
}

pub fn write_json<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
