//! `.f32g` tensor files, little-endian throughout:
//!
//! ```text
//! magic  4 bytes  "F32G"
//! shape  5 × u32  axis sizes in tensor order
//! data   f32 × product(shape), row-major
//! ```

use std::path::Path;

use crate::{Error, Result, Tensor5};

pub const MAGIC: &[u8; 4] = b"F32G";
pub const HEADER_LEN: usize = 24;

/// Values are rounded to f32.
pub fn to_bytes(t: &Tensor5) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * t.len());
    out.extend_from_slice(MAGIC);
    for s in t.shape() {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Tensor5> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let mut shape = [0usize; 5];
    for (a, s) in shape.iter_mut().enumerate() {
        *s = u32::from_le_bytes(bytes[4 + 4 * a..8 + 4 * a].try_into().unwrap()) as usize;
    }
    let n = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| bad("shape overflows".into()))?;
    if bytes.len() - HEADER_LEN != n.saturating_mul(4) {
        return Err(bad(format!(
            "shape {shape:?} needs {} data bytes, found {}",
            n.saturating_mul(4),
            bytes.len() - HEADER_LEN
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Tensor5::new(shape, data).map_err(|e| bad(e.to_string()))
}

pub fn write(t: &Tensor5, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(t)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read(path: &Path) -> Result<Tensor5> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_bytes(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let t = Tensor5::from_fn([1, 2, 1, 1, 3], |i| i[1] as f64 + 0.5 * i[4] as f64);
        let b = to_bytes(&t);
        assert_eq!(&b[..4], b"F32G");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[20..24].try_into().unwrap()), 3);
        assert_eq!(b.len(), 24 + 6 * 4);
        assert_eq!(f32::from_le_bytes(b[24 + 20..].try_into().unwrap()), 2.0);
    }

    #[test]
    fn round_trip_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.f32g");
        let t = Tensor5::from_fn([2, 1, 3, 2, 2], |i| i.iter().sum::<usize>() as f64 * 0.25 - 1.0);
        write(&t, &path).unwrap();
        assert_eq!(read(&path).unwrap(), t);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(to_bytes(&read(&path).unwrap()), bytes);
    }

    #[test]
    fn rejects_damaged_files() {
        let p = Path::new("t.f32g");
        let good = to_bytes(&Tensor5::zeros([1, 1, 1, 1, 2]));
        assert!(from_bytes(&good[..20], p).is_err());
        assert!(from_bytes(&good[..good.len() - 1], p).is_err());
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(from_bytes(&magic, p).is_err());
        let mut zero_axis = good.clone();
        zero_axis[4..8].copy_from_slice(&0u32.to_le_bytes());
        assert!(from_bytes(&zero_axis[..HEADER_LEN], p).is_err());
        let mut nan = good;
        nan[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(from_bytes(&nan, p).is_err());
    }
}
