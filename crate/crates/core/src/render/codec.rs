//! On-disk frame encodings. Depth is raw `.f32` plus a 16-bit PNG preview;
//! color and masks are PNG.

use std::io::Cursor;

use png::{BitDepth, ColorType, Decoder, Encoder, Transformations};

pub const DEPTH_MAGIC: &[u8; 4] = b"DPTH";
pub const DEPTH_HEADER_LEN: usize = 12;

/// A decoded image: width, height, samples row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

fn encode_png(width: usize, height: usize, color: ColorType, depth: BitDepth, palette: Option<Vec<u8>>, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(depth);
        if let Some(p) = palette {
            enc.set_palette(p);
        }
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(data).expect("in-memory png data");
    }
    out
}

fn decode_png(bytes: &[u8], color: ColorType, depth: BitDepth) -> Result<Plane<u8>, String> {
    let mut dec = Decoder::new(Cursor::new(bytes));
    dec.set_transformations(Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(|e| format!("png header: {e}"))?;
    let size = reader.output_buffer_size().ok_or("png too large")?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| format!("png data: {e}"))?;
    if info.color_type != color || info.bit_depth != depth {
        return Err(format!(
            "expected {color:?} {depth:?}, found {:?} {:?}",
            info.color_type, info.bit_depth
        ));
    }
    buf.truncate(info.line_size * info.height as usize);
    Ok(Plane {
        width: info.width as usize,
        height: info.height as usize,
        data: buf,
    })
}

pub fn encode_rgb_png(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    assert_eq!(rgb.len(), 3 * width * height);
    encode_png(width, height, ColorType::Rgb, BitDepth::Eight, None, rgb)
}

pub fn decode_rgb_png(bytes: &[u8]) -> Result<Plane<u8>, String> {
    decode_png(bytes, ColorType::Rgb, BitDepth::Eight)
}

/// Palette used for masks: id 0 black, ids 1.. distinct hues.
pub fn mask_palette() -> Vec<u8> {
    const BASE: [[u8; 3]; 8] = [
        [0, 0, 0],
        [230, 25, 75],
        [60, 180, 75],
        [255, 225, 25],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
    ];
    (0..256usize)
        .flat_map(|i| if i < BASE.len() { BASE[i] } else { [i as u8; 3] })
        .collect()
}

pub fn encode_mask_png(width: usize, height: usize, mask: &[u8]) -> Vec<u8> {
    assert_eq!(mask.len(), width * height);
    encode_png(width, height, ColorType::Indexed, BitDepth::Eight, Some(mask_palette()), mask)
}

pub fn decode_mask_png(bytes: &[u8]) -> Result<Plane<u8>, String> {
    decode_png(bytes, ColorType::Indexed, BitDepth::Eight)
}

/// Accepts 8-bit palette-indexed or 8-bit grayscale id images.
pub fn decode_id_png(bytes: &[u8]) -> Result<Plane<u8>, String> {
    decode_png(bytes, ColorType::Indexed, BitDepth::Eight)
        .or_else(|_| decode_png(bytes, ColorType::Grayscale, BitDepth::Eight))
}

/// Linear preview: u16 = round(clamp(z / far, 0, 1) · 65535), big-endian
/// samples as PNG requires.
pub fn encode_depth_preview_png(width: usize, height: usize, depth: &[f32], far: f64) -> Vec<u8> {
    assert_eq!(depth.len(), width * height);
    let data: Vec<u8> = depth
        .iter()
        .flat_map(|&z| {
            let q = ((z as f64 / far).clamp(0.0, 1.0) * 65535.0).round() as u16;
            q.to_be_bytes()
        })
        .collect();
    encode_png(width, height, ColorType::Grayscale, BitDepth::Sixteen, None, &data)
}

pub fn decode_depth_preview_png(bytes: &[u8]) -> Result<Plane<u16>, String> {
    let p = decode_png(bytes, ColorType::Grayscale, BitDepth::Sixteen)?;
    Ok(Plane {
        width: p.width,
        height: p.height,
        data: p.data.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect(),
    })
}

/// `DPTH`, u32 LE height, u32 LE width, then f32 LE samples row-major.
pub fn encode_depth_f32(width: usize, height: usize, depth: &[f32]) -> Vec<u8> {
    assert_eq!(depth.len(), width * height);
    let mut out = Vec::with_capacity(DEPTH_HEADER_LEN + 4 * depth.len());
    out.extend_from_slice(DEPTH_MAGIC);
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&(width as u32).to_le_bytes());
    for z in depth {
        out.extend_from_slice(&z.to_le_bytes());
    }
    out
}

pub fn decode_depth_f32(bytes: &[u8]) -> Result<Plane<f32>, String> {
    if bytes.len() < DEPTH_HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != DEPTH_MAGIC {
        return Err("bad magic".into());
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (height, width) = (u32_at(4), u32_at(8));
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(DEPTH_HEADER_LEN))
        .ok_or("dimensions overflow")?;
    if bytes.len() != expected {
        return Err(format!("expected {expected} bytes for {height}x{width}, found {}", bytes.len()));
    }
    let data = bytes[DEPTH_HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(Plane { width, height, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_round_trips_bit_exact() {
        let depth = vec![0.1f32, f32::MIN_POSITIVE, 100.0, 3.25, -0.0, 7.0];
        let bytes = encode_depth_f32(3, 2, &depth);
        assert_eq!(&bytes[..4], b"DPTH");
        let p = decode_depth_f32(&bytes).unwrap();
        assert_eq!((p.width, p.height), (3, 2));
        let bits = |v: &[f32]| v.iter().map(|z| z.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p.data), bits(&depth));
    }

    #[test]
    fn depth_rejects_truncation_and_magic() {
        let mut bytes = encode_depth_f32(2, 2, &[1.0; 4]);
        assert!(decode_depth_f32(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(decode_depth_f32(&bytes).unwrap_err().contains("magic"));
    }

    #[test]
    fn rgb_and_mask_round_trip() {
        let rgb: Vec<u8> = (0..4 * 3 * 3).map(|i| (i * 7) as u8).collect();
        let p = decode_rgb_png(&encode_rgb_png(4, 3, &rgb)).unwrap();
        assert_eq!((p.width, p.height, p.data), (4, 3, rgb));
        let mask = vec![0, 1, 2, 7, 0, 0];
        let p = decode_mask_png(&encode_mask_png(3, 2, &mask)).unwrap();
        assert_eq!(p.data, mask);
        assert!(decode_mask_png(&encode_rgb_png(1, 1, &[1, 2, 3])).is_err());
    }

    #[test]
    fn preview_scaling() {
        let p = decode_depth_preview_png(&encode_depth_preview_png(3, 1, &[0.0, 50.0, 200.0], 100.0)).unwrap();
        assert_eq!(p.data, vec![0, 32768, 65535]);
    }
}
