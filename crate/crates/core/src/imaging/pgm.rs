//! Grayscale PGM (P2 ASCII / P5 binary) reading and P5 writing.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use super::{mask_image, Image, ImagingError, MeasurementSet, Result};

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first pixel byte (P5) or the first pixel token (P2).
    data_start: usize,
}

fn read_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, field: &str) -> Result<u32> {
    let token = read_token(bytes, pos)
        .ok_or_else(|| ImagingError::MalformedHeader(format!("missing {field}")))?;
    token
        .parse()
        .map_err(|_| ImagingError::MalformedHeader(format!("{field} is not a number: {token:?}")))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(ImagingError::MalformedHeader("file too short".into()));
    }
    let magic = String::from_utf8_lossy(&bytes[..2]).into_owned();
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        _ => return Err(ImagingError::UnsupportedFormat(magic)),
    };
    let mut pos = 2;
    if bytes
        .get(pos)
        .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
    {
        return Err(ImagingError::UnsupportedFormat(
            String::from_utf8_lossy(&bytes[..3]).into_owned(),
        ));
    }
    let width = header_number(bytes, &mut pos, "width")? as usize;
    let height = header_number(bytes, &mut pos, "height")? as usize;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(ImagingError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval > 255 {
        return Err(ImagingError::UnsupportedDepth(maxval));
    }
    if maxval == 0 {
        return Err(ImagingError::MalformedHeader("maxval is 0".into()));
    }
    // P5: exactly one whitespace byte separates maxval from the raster.
    if binary {
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => {
                return Err(ImagingError::MalformedHeader(
                    "missing whitespace after maxval".into(),
                ))
            }
        }
    }
    Ok(Header {
        binary,
        width,
        height,
        maxval,
        data_start: pos,
    })
}

fn decode(bytes: &[u8]) -> Result<Image> {
    let header = parse_header(bytes)?;
    let count = header.width * header.height;
    let data: Vec<u8> = if header.binary {
        let raster = &bytes[header.data_start..];
        if raster.len() < count {
            return Err(ImagingError::MalformedData(format!(
                "expected {count} pixel bytes, found {}",
                raster.len()
            )));
        }
        raster[..count].to_vec()
    } else {
        let mut pos = header.data_start;
        let mut values = Vec::with_capacity(count);
        while values.len() < count {
            let token = read_token(bytes, &mut pos).ok_or_else(|| {
                ImagingError::MalformedData(format!(
                    "expected {count} pixel values, found {}",
                    values.len()
                ))
            })?;
            let v: u32 = token
                .parse()
                .map_err(|_| ImagingError::MalformedData(format!("bad pixel value {token:?}")))?;
            values.push(v);
        }
        values
            .into_iter()
            .map(|v| u8::try_from(v).unwrap_or(u8::MAX))
            .collect::<Vec<_>>()
    };
    if let Some(v) = data.iter().find(|&&v| u32::from(v) > header.maxval) {
        return Err(ImagingError::MalformedData(format!(
            "pixel value {v} exceeds maxval {}",
            header.maxval
        )));
    }
    Image::new(header.width, header.height, data)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| match source.kind() {
        ErrorKind::NotFound => ImagingError::MissingFile(path.to_path_buf()),
        _ => ImagingError::Io {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Reads an 8-bit grayscale PGM (P2 or P5).
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    decode(&read_file(path.as_ref())?)
}

/// Reads a mask PGM; pixels must be 0 or 255. Returns `true` at 255.
pub fn load_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<bool>)> {
    let img = load_image(path)?;
    let mut mask = Vec::with_capacity(img.len());
    for (idx, &v) in img.data().iter().enumerate() {
        match v {
            0 => mask.push(false),
            255 => mask.push(true),
            other => return Err(ImagingError::InvalidMask(idx, other)),
        }
    }
    Ok((img.width(), img.height(), mask))
}

pub(crate) fn encode(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

/// Writes `img` as binary P5 with maxval 255.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(img)).map_err(|source| ImagingError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the measured mask of `ms` as P5: 255 measured, 0 unmeasured.
pub fn save_mask(ms: &MeasurementSet, path: impl AsRef<Path>) -> Result<()> {
    save_image(&mask_image(ms), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Location;

    #[test]
    fn parses_ascii() {
        let img = decode(b"P2\n2 2\n255\n0 64 128 255\n").unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.data(), &[0, 64, 128, 255]);
    }

    #[test]
    fn parses_binary() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 64, 128, 255]);
        let img = decode(&bytes).unwrap();
        assert_eq!(img.data(), &[0, 64, 128, 255]);
    }

    #[test]
    fn binary_raster_may_start_with_whitespace_values() {
        // 0x0a and 0x20 are valid pixel values, not header padding.
        let mut bytes = b"P5 2 1 255\n".to_vec();
        bytes.extend_from_slice(&[10, 32]);
        assert_eq!(decode(&bytes).unwrap().data(), &[10, 32]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = decode(b"P2\n# made by hand\n2 1 # trailing\n255\n7 9\n").unwrap();
        assert_eq!(img.data(), &[7, 9]);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(
            decode(b"P3\n1 1\n255\n0 0 0\n"),
            Err(ImagingError::UnsupportedFormat(m)) if m == "P3"
        ));
        assert!(matches!(
            decode(b"P6\n1 1\n255\n\0\0\0"),
            Err(ImagingError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode(b"P2\n1 1\n65535\n0\n"),
            Err(ImagingError::UnsupportedDepth(65535))
        ));
        assert!(matches!(
            decode(b"P2\nx 1\n255\n0\n"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode(b"P2\n2 2\n"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode(b"P5\n2 2\n255\n\0\0"),
            Err(ImagingError::MalformedData(_))
        ));
        assert!(matches!(
            decode(b"P2\n1 1\n100\n200\n"),
            Err(ImagingError::MalformedData(_))
        ));
        assert!(matches!(
            load_image("/nonexistent/truth.pgm"),
            Err(ImagingError::MissingFile(_))
        ));
    }

    #[test]
    fn mask_file_contents() {
        let dir = tempfile::tempdir().unwrap();
        let truth = Image::filled(4, 4, 9);
        let mut ms = MeasurementSet::for_image(&truth);
        let empty = dir.path().join("empty.pgm");
        save_mask(&ms, &empty).unwrap();
        assert!(load_image(&empty).unwrap().data().iter().all(|&v| v == 0));

        for idx in [0, 5, 15] {
            ms.measure_from(&truth, Location::from_index(idx, 4))
                .unwrap();
        }
        let three = dir.path().join("three.pgm");
        save_mask(&ms, &three).unwrap();
        let bytes = fs::read(&three).unwrap();
        let raster = &bytes[bytes.len() - 16..];
        assert_eq!(raster.iter().filter(|&&b| b == 255).count(), 3);
        let (w, h, mask) = load_mask(&three).unwrap();
        assert_eq!((w, h), (4, 4));
        assert_eq!(mask, ms.mask());
    }

    #[test]
    fn load_mask_rejects_gray_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        save_image(&Image::new(2, 1, vec![0, 128]).unwrap(), &path).unwrap();
        assert!(matches!(
            load_mask(&path),
            Err(ImagingError::InvalidMask(1, 128))
        ));
    }
}
