//! Calibration text files.
//!
//! Either one correspondence per line (`sx sy cx cy`) or a homography as nine
//! whitespace-separated decimals in row-major order. Blank lines and lines
//! starting with `#` are ignored.

use std::path::Path;

use super::homography::{fit_homography, Correspondence, Homography};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Calibration {
    Correspondences(Vec<Correspondence>),
    Matrix(Homography),
}

impl Calibration {
    pub fn homography(&self) -> Result<Homography> {
        match self {
            Calibration::Matrix(h) => Ok(*h),
            Calibration::Correspondences(c) => fit_homography(c),
        }
    }
}

pub fn parse_calibration(text: &str) -> Result<Calibration> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Corrupt(format!("line {}: bad number {t:?}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Corrupt("empty calibration".into()));
    }
    if rows.iter().all(|r| r.len() == 4) {
        return Ok(Calibration::Correspondences(
            rows.iter()
                .map(|r| Correspondence::new([r[0], r[1]], [r[2], r[3]]))
                .collect(),
        ));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    if flat.len() != 9 {
        return Err(Error::Corrupt(format!(
            "expected 4-column correspondences or 9 matrix entries, found {} numbers",
            flat.len()
        )));
    }
    let h = Homography::from_row_major(flat.try_into().unwrap())
        .map_err(|e| Error::Corrupt(e.to_string()))?;
    Ok(Calibration::Matrix(h))
}

/// Reads a calibration file and resolves it to a homography.
pub fn read_calibration(path: impl AsRef<Path>) -> Result<Homography> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calibration(&text)
        .and_then(|c| c.homography())
        .map_err(|e| match e {
            Error::FitFailure(m) => Error::Format {
                path: path.to_path_buf(),
                message: m,
            },
            other => other.at_path(path),
        })
}

/// Shortest round-tripping decimal form, one line.
pub fn format_homography(h: &Homography) -> String {
    let parts: Vec<String> = h.to_row_major().iter().map(|v| format!("{v:?}")).collect();
    parts.join(" ")
}

pub fn write_homography(path: impl AsRef<Path>, h: &Homography) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_homography(h) + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let h = Homography::from_row_major([1.1, 0.013, 12.5, -0.0301, 0.95, 7.0, 1.0e-4, -2.3e-4, 1.0])
            .unwrap();
        let back = parse_calibration(&format_homography(&h)).unwrap();
        assert_eq!(back, Calibration::Matrix(h));
    }

    #[test]
    fn correspondences_are_fitted() {
        let text = "# sensor -> camera\n0 0 10 5\n184 0 194 5\n184 104 194 109\n0 104 10 109\n";
        let c = parse_calibration(text).unwrap();
        let h = c.homography().unwrap();
        let p = h.apply(50.0, 50.0).unwrap();
        assert!((p[0] - 60.0).abs() < 1e-9 && (p[1] - 55.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_files() {
        assert!(parse_calibration("").is_err());
        assert!(parse_calibration("1 2 3").is_err());
        assert!(parse_calibration("1 0 0 0 1 0 0 0 x").is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cam3.txt");
        std::fs::write(&p, "0 0 0 0\n1 0 1 0\n2 0 2 0\n3 0 3 0\n").unwrap();
        let err = read_calibration(&p).unwrap_err();
        assert!(err.to_string().contains("cam3.txt"));
    }
}
