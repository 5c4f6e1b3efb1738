//! Binary PGM (`P5`) and PPM (`P6`) with 8-bit samples.

use super::IngestError;
use crate::domain::{CategoryTable, SemanticMask};
use crate::grid::RgbImage;

/// An 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    pub data: Vec<u8>,
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn malformed(msg: &str) -> IngestError {
    IngestError::MalformedImage(msg.to_string())
}

/// Reads the next decimal token, skipping whitespace and `#` comments.
fn next_number(bytes: &[u8], pos: &mut usize) -> Result<u32, IngestError> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(malformed("truncated header")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(malformed("expected a number in header"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed("header number out of range"))
}

fn parse_header(bytes: &[u8]) -> Result<Header, IngestError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(IngestError::UnsupportedFormat("not a netpbm file".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let width = next_number(bytes, &mut pos)? as usize;
    let height = next_number(bytes, &mut pos)? as usize;
    let maxval = next_number(bytes, &mut pos)?;
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed("missing whitespace after maxval")),
    }
    if width == 0 || height == 0 {
        return Err(malformed("zero dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(IngestError::UnsupportedFormat(format!("maxval {maxval} (8-bit samples only)")));
    }
    Ok(Header { magic, width, height, maxval, data_offset: pos })
}

fn raster<'a>(bytes: &'a [u8], h: &Header, channels: usize) -> Result<&'a [u8], IngestError> {
    let need = (h.width as u64) * (h.height as u64) * channels as u64;
    let have = (bytes.len() - h.data_offset) as u64;
    if have < need {
        return Err(IngestError::TruncatedPayload { expected: need, actual: have });
    }
    let raster = &bytes[h.data_offset..h.data_offset + need as usize];
    if raster.iter().any(|&v| v as u32 > h.maxval) {
        return Err(malformed("sample exceeds maxval"));
    }
    Ok(raster)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, IngestError> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P5" {
        return Err(IngestError::UnsupportedFormat(format!(
            "{} (binary PGM P5 required)",
            String::from_utf8_lossy(&h.magic)
        )));
    }
    let data = raster(bytes, &h, 1)?.to_vec();
    Ok(GrayImage { width: h.width, height: h.height, maxval: h.maxval as u8, data })
}

/// Reads a binary PPM with maxval 255 into an [`RgbImage`].
pub fn parse_ppm(bytes: &[u8]) -> Result<RgbImage, IngestError> {
    let h = parse_header(bytes)?;
    if &h.magic != b"P6" {
        return Err(IngestError::UnsupportedFormat(format!(
            "{} (binary PPM P6 required)",
            String::from_utf8_lossy(&h.magic)
        )));
    }
    if h.maxval != 255 {
        return Err(IngestError::UnsupportedFormat(format!("PPM maxval {} (255 required)", h.maxval)));
    }
    let data = raster(bytes, &h, 3)?.iter().map(|&b| b as f64).collect();
    RgbImage::new(h.width, h.height, data).map_err(|e| malformed(&e.to_string()))
}

/// Parses a semantic mask: pixel value = category id, 0 = unlabeled.
pub fn parse_mask(bytes: &[u8], table: &CategoryTable) -> Result<SemanticMask, IngestError> {
    let img = parse_pgm(bytes)?;
    let labels: Vec<u32> = img.data.iter().map(|&v| v as u32).collect();
    if let Some(&bad) = labels.iter().find(|&&l| l != 0 && !table.contains(l)) {
        return Err(IngestError::UnknownCategory(bad));
    }
    Ok(SemanticMask { width: img.width, height: img.height, labels })
}

pub fn write_pgm(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    assert_eq!(data.len(), width * height, "raster size mismatch");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

/// Writes a mask as PGM.
///
/// # Panics
/// If a label does not fit in 8 bits.
pub fn write_mask(mask: &SemanticMask) -> Vec<u8> {
    let data: Vec<u8> = mask.labels.iter().map(|&l| u8::try_from(l).expect("category id exceeds 255")).collect();
    write_pgm(mask.width, mask.height, &data)
}

/// Writes an image as PPM, rounding and clamping channels to `0..=255`.
pub fn write_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Category, CategoryKind};

    fn table(ids: &[u32]) -> CategoryTable {
        CategoryTable::new(ids.iter().map(|&id| Category { id, name: format!("c{id}"), kind: CategoryKind::Object }))
            .unwrap()
    }

    #[test]
    fn all_zero_mask_is_unlabeled() {
        let m = parse_mask(&write_pgm(2, 2, &[0; 4]), &table(&[])).unwrap();
        assert_eq!((m.width, m.height), (2, 2));
        assert!(m.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn unknown_category_is_reported() {
        let bytes = write_pgm(2, 1, &[0, 7]);
        assert_eq!(parse_mask(&bytes, &table(&[1])), Err(IngestError::UnknownCategory(7)));
        assert!(parse_mask(&bytes, &table(&[7])).is_ok());
    }

    #[test]
    fn ascii_variant_is_unsupported() {
        let err = parse_mask(b"P2\n2 2\n255\n0 0 0 0\n", &table(&[])).unwrap_err();
        assert!(matches!(err, IngestError::UnsupportedFormat(_)));
    }

    #[test]
    fn header_comments_and_truncation() {
        let mut b = b"P5\n# a comment\n3 1\n# another\n255\n".to_vec();
        b.extend_from_slice(&[1, 2, 3]);
        assert_eq!(parse_pgm(&b).unwrap().data, vec![1, 2, 3]);
        b.pop();
        assert!(matches!(parse_pgm(&b), Err(IngestError::TruncatedPayload { expected: 3, actual: 2 })));
        assert!(matches!(parse_pgm(b"P5\n2 2\n65535\n"), Err(IngestError::UnsupportedFormat(_))));
    }

    #[test]
    fn ppm_roundtrip() {
        let img = RgbImage::new(2, 1, vec![0.0, 128.0, 255.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(parse_ppm(&write_ppm(&img)).unwrap(), img);
        assert!(matches!(parse_ppm(b"P3\n1 1\n255\n0 0 0"), Err(IngestError::UnsupportedFormat(_))));
    }
}
