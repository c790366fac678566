//! Minimal PGM (P2/P5) reader for extracting one image row as a signal.
//!
//! Only 8-bit images (maxval <= 255) are supported.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::signal::DiscretizedSignal;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("not a PGM file: magic number is `{0}`, expected P2 or P5")]
    BadMagic(String),
    #[error("malformed PGM header: {0}")]
    Malformed(String),
    #[error("unsupported maxval {0}: only maxval <= 255 is supported")]
    UnsupportedMaxval(u32),
    #[error("row {row} out of range for image height {height}")]
    RowOutOfRange { row: usize, height: usize },
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    data_offset: usize,
}

/// Tokenizer over the ASCII header; `#` comments run to end of line.
fn parse_header(data: &[u8]) -> Result<Header, PgmError> {
    let magic: &[u8] = data.get(0..2).ok_or_else(|| {
        PgmError::Malformed("file shorter than a magic number".into())
    })?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(PgmError::BadMagic(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut pos = 2;
    let mut fields = [0u32; 3]; // width, height, maxval
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match data.get(pos) {
                Some(b'#') => {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(PgmError::Malformed("header ends prematurely".into())),
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::Malformed(format!(
                "expected a number at byte {pos}"
            )));
        }
        let text = std::str::from_utf8(&data[start..pos]).expect("digits are valid utf-8");
        *field = text
            .parse()
            .map_err(|_| PgmError::Malformed(format!("number `{text}` out of range")))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(PgmError::Malformed(format!(
            "degenerate image size {width}x{height}"
        )));
    }
    if maxval > 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    if maxval == 0 {
        return Err(PgmError::Malformed("maxval must be positive".into()));
    }
    // exactly one whitespace byte separates the header from binary data
    if binary {
        match data.get(pos) {
            Some(c) if c.is_ascii_whitespace() => pos += 1,
            _ => return Err(PgmError::Malformed("missing separator after maxval".into())),
        }
    }
    Ok(Header {
        binary,
        width: width as usize,
        height: height as usize,
        data_offset: pos,
    })
}

/// Loads row `row` of a P2/P5 PGM image as a signal on `[0, width]` with one
/// unit-width cell per pixel.
pub fn load_pgm_row(path: &Path, row: usize) -> Result<DiscretizedSignal, PgmError> {
    let data = fs::read(path).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let header = parse_header(&data)?;
    if row >= header.height {
        return Err(PgmError::RowOutOfRange {
            row,
            height: header.height,
        });
    }
    let values: Vec<f64> = if header.binary {
        let start = header.data_offset + row * header.width;
        let end = start + header.width;
        let pixels = data.get(start..end).ok_or(PgmError::Truncated {
            expected: header.width * header.height,
            found: data.len().saturating_sub(header.data_offset),
        })?;
        pixels.iter().map(|&p| p as f64).collect()
    } else {
        let text = std::str::from_utf8(&data[header.data_offset..])
            .map_err(|_| PgmError::Malformed("non-ASCII bytes in P2 pixel data".into()))?;
        let mut samples = text.split_ascii_whitespace().skip(row * header.width);
        let mut out = Vec::with_capacity(header.width);
        for i in 0..header.width {
            let token = samples.next().ok_or(PgmError::Truncated {
                expected: header.width * header.height,
                found: row * header.width + i,
            })?;
            let v: u32 = token
                .parse()
                .map_err(|_| PgmError::Malformed(format!("bad pixel value `{token}`")))?;
            out.push(v as f64);
        }
        out
    };
    let width = header.width as f64;
    Ok(DiscretizedSignal::from_values(values, 0.0, width)
        .expect("width > 0 and at least one pixel"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, bytes: &[u8]) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        fs::write(&path, bytes).unwrap();
        (dir, path)
    }

    #[test]
    fn ascii_pgm_row() {
        let (_d, p) = write_temp("a.pgm", b"P2\n# comment\n3 2\n255\n1 2 3\n10 20 30\n");
        let s = load_pgm_row(&p, 1).unwrap();
        assert_eq!(s.values(), &[10.0, 20.0, 30.0]);
        assert_eq!(s.a(), 0.0);
        assert_eq!(s.b(), 3.0);
    }

    #[test]
    fn binary_pgm_row() {
        let mut bytes = b"P5\n4 3\n255\n".to_vec();
        bytes.extend((0u8..12).map(|v| v * 10));
        let (_d, p) = write_temp("b.pgm", &bytes);
        let s = load_pgm_row(&p, 2).unwrap();
        assert_eq!(s.values(), &[80.0, 90.0, 100.0, 110.0]);
    }

    #[test]
    fn one_pixel_image() {
        let (_d, p) = write_temp("c.pgm", b"P2\n1 1\n255\n7\n");
        let s = load_pgm_row(&p, 0).unwrap();
        let expect = DiscretizedSignal::from_values(vec![7.0], 0.0, 1.0).unwrap();
        assert_eq!(s, expect);
    }

    #[test]
    fn row_out_of_range() {
        let (_d, p) = write_temp("d.pgm", b"P2\n1 2\n255\n7\n8\n");
        assert!(matches!(
            load_pgm_row(&p, 2),
            Err(PgmError::RowOutOfRange { row: 2, height: 2 })
        ));
    }

    #[test]
    fn distinct_failure_modes() {
        let (_d, p) = write_temp("e.pgm", b"P6\n1 1\n255\n x");
        assert!(matches!(load_pgm_row(&p, 0), Err(PgmError::BadMagic(_))));

        let (_d2, p2) = write_temp("f.pgm", b"P2\n1 1\n65535\n7\n");
        assert!(matches!(
            load_pgm_row(&p2, 0),
            Err(PgmError::UnsupportedMaxval(65535))
        ));

        let (_d3, p3) = write_temp("g.pgm", b"P5\n2 2\n255\nab");
        assert!(matches!(load_pgm_row(&p3, 1), Err(PgmError::Truncated { .. })));

        assert!(matches!(
            load_pgm_row(Path::new("/nonexistent/x.pgm"), 0),
            Err(PgmError::Io { .. })
        ));
    }
}
