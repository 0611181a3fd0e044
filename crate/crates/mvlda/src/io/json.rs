//! JSON writing with a fixed numeric representation.
//!
//! Every float is emitted with 17 significant digits (`{:.16e}`), which
//! round-trips any f64 exactly and keeps files byte-stable across runs.

use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

struct SigDig17Formatter;

impl serde_json::ser::Formatter for SigDig17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDig17Formatter);
    value.serialize(&mut ser).map_err(|e| Error::InvalidArgument {
        context: format!("serialization failed: {e}"),
    })?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json_string(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}
