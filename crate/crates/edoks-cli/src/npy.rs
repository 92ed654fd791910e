//! Minimal reader for scalar/single-element `.npy` float arrays, enough to
//! ingest judge files from perceptual datasets.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use edoks::{Error, Result};

/// Read the first float of a `.npy` file holding a scalar or 1-element
/// array of dtype f4/f8.
pub fn read_scalar(path: &Path) -> Result<f64> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic[..6] != b"\x93NUMPY" {
        return Err(Error::Manifest(format!(
            "{} is not an npy file",
            path.display()
        )));
    }
    let major = magic[6];
    let header_len = if major == 1 {
        let mut b = [0u8; 2];
        file.read_exact(&mut b)?;
        u16::from_le_bytes(b) as usize
    } else {
        let mut b = [0u8; 4];
        file.read_exact(&mut b)?;
        u32::from_le_bytes(b) as usize
    };
    let mut header = vec![0u8; header_len];
    file.read_exact(&mut header)?;
    let header = String::from_utf8_lossy(&header);

    let descr = extract_quoted(&header, "descr")
        .ok_or_else(|| Error::Manifest(format!("{}: npy header without descr", path.display())))?;
    let (big_endian, width) = match descr.as_str() {
        "<f4" | "|f4" => (false, 4usize),
        ">f4" => (true, 4),
        "<f8" | "|f8" => (false, 8),
        ">f8" => (true, 8),
        other => {
            return Err(Error::Manifest(format!(
                "{}: unsupported npy dtype {other}",
                path.display()
            )))
        }
    };

    let mut buf = vec![0u8; width];
    file.read_exact(&mut buf)?;
    let value = match (width, big_endian) {
        (4, false) => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
        (4, true) => f32::from_be_bytes(buf[..4].try_into().unwrap()) as f64,
        (8, false) => f64::from_le_bytes(buf[..8].try_into().unwrap()),
        _ => f64::from_be_bytes(buf[..8].try_into().unwrap()),
    };
    Ok(value)
}

fn extract_quoted(header: &str, key: &str) -> Option<String> {
    let pos = header.find(&format!("'{key}'"))?;
    let rest = &header[pos + key.len() + 2..];
    let start = rest.find('\'')? + 1;
    let end = rest[start..].find('\'')? + start;
    Some(rest[start..end].to_string())
}
