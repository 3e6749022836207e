//! `PVP1` pressure-image container.
//!
//! Layout (all little-endian):
//!
//! | bytes | field                                  |
//! |-------|----------------------------------------|
//! | 4     | magic `PVP1`                           |
//! | 4     | width, u32                             |
//! | 4     | height, u32                            |
//! | 1     | space flag, 0 = sensor, 1 = camera     |
//! | 4     | pixel pitch in meters, f32 (0 = none)  |
//! | 4·w·h | values in kPa, f32, row-major          |

use std::path::Path;

use crate::error::{Error, Result};
use crate::pressure::{PressureImage, Space};

pub const MAGIC: &[u8; 4] = b"PVP1";
const HEADER_LEN: usize = 17;

pub fn encode(p: &PressureImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * p.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(p.width() as u32).to_le_bytes());
    out.extend_from_slice(&(p.height() as u32).to_le_bytes());
    out.push(match p.space() {
        Space::Sensor => 0,
        Space::Camera => 1,
    });
    out.extend_from_slice(&(p.pixel_pitch().unwrap_or(0.0) as f32).to_le_bytes());
    for v in p.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<PressureImage> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corrupt(format!(
            "PVP1 header truncated ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Corrupt("missing PVP1 magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let width = u32_at(4) as usize;
    let height = u32_at(8) as usize;
    let space = match bytes[12] {
        0 => Space::Sensor,
        1 => Space::Camera,
        f => return Err(Error::Corrupt(format!("unknown space flag {f}"))),
    };
    let pitch = f32::from_le_bytes(bytes[13..17].try_into().unwrap());
    let pixel_pitch = if pitch == 0.0 {
        None
    } else if pitch.is_finite() && pitch > 0.0 {
        Some(pitch as f64)
    } else {
        return Err(Error::Corrupt(format!("invalid pixel pitch {pitch}")));
    };
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Corrupt("dimensions overflow".into()))?;
    let expected = n
        .checked_mul(4)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Corrupt("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Corrupt(format!(
            "PVP1 payload is {} bytes, expected {} for {}x{}",
            bytes.len(),
            expected,
            width,
            height
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PressureImage::new(width, height, space, pixel_pitch, values)
        .map_err(|e| Error::Corrupt(e.to_string()))
}

pub fn write(path: impl AsRef<Path>, p: &PressureImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(p)).map_err(|e| Error::io(path, e))
}

/// Reads a `PVP1` file; decoding errors name the file.
pub fn read(path: impl AsRef<Path>) -> Result<PressureImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| e.at_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let p = PressureImage::new(2, 1, Space::Camera, None, vec![1.5, 0.0]).unwrap();
        let b = encode(&p);
        assert_eq!(&b[..4], b"PVP1");
        assert_eq!(&b[4..8], &[2, 0, 0, 0]);
        assert_eq!(&b[8..12], &[1, 0, 0, 0]);
        assert_eq!(b[12], 1);
        assert_eq!(&b[13..17], &[0, 0, 0, 0]);
        assert_eq!(&b[17..21], &1.5f32.to_le_bytes());
        assert_eq!(b.len(), 25);
    }

    #[test]
    fn corrupt_inputs() {
        let p = PressureImage::sensor_default();
        let good = encode(&p);
        assert!(decode(&good[..10]).is_err());
        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = good.clone();
        bad[12] = 7;
        assert!(decode(&bad).is_err());
        let mut bad = good;
        let neg = (-1.0f32).to_le_bytes();
        bad[17..21].copy_from_slice(&neg);
        assert!(decode(&bad).is_err());
    }

    #[test]
    fn read_error_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("000007.pvp1");
        std::fs::write(&path, b"PVP1garbage").unwrap();
        let err = read(&path).unwrap_err();
        assert!(err.to_string().contains("000007.pvp1"), "{err}");
    }

    proptest! {
        #[test]
        fn write_read_write_is_byte_identical(
            w in 1usize..12,
            h in 1usize..12,
            sensor in any::<bool>(),
            seed in proptest::collection::vec(0.0f32..500.0, 144),
        ) {
            let space = if sensor { Space::Sensor } else { Space::Camera };
            let pitch = sensor.then_some(1.25e-3);
            let p = PressureImage::new(w, h, space, pitch, seed[..w * h].to_vec()).unwrap();
            let bytes = encode(&p);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(encode(&back), bytes);
            prop_assert_eq!(back.values(), p.values());
        }
    }
}
