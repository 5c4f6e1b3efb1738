use super::IngestError;
use crate::grid::FloatGridStack;

pub const FGRID_MAGIC: &[u8; 4] = b"FG01";
pub const FGRID_HEADER_LEN: usize = 16;

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]])
}

/// Decodes an FGRID stack. The payload must match the header exactly and
/// every value must be finite.
pub fn read_fgrid(bytes: &[u8]) -> Result<FloatGridStack, IngestError> {
    if bytes.len() < 4 || &bytes[..4] != FGRID_MAGIC {
        return Err(IngestError::BadMagic);
    }
    if bytes.len() < FGRID_HEADER_LEN {
        return Err(IngestError::TruncatedHeader);
    }
    let count = u32_at(bytes, 4) as u64;
    let height = u32_at(bytes, 8) as u64;
    let width = u32_at(bytes, 12) as u64;
    let payload = (bytes.len() - FGRID_HEADER_LEN) as u64;
    let expected = count
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .and_then(|v| v.checked_mul(4))
        .ok_or(IngestError::TruncatedPayload { expected: u64::MAX, actual: payload })?;
    if expected != payload {
        return Err(IngestError::TruncatedPayload { expected, actual: payload });
    }
    if count == 0 || height == 0 || width == 0 {
        return Err(IngestError::EmptyStack);
    }
    let data: Vec<f64> = bytes[FGRID_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(IngestError::NonFiniteValue(i));
    }
    FloatGridStack::new(count as usize, width as usize, height as usize, data).map_err(|_| IngestError::EmptyStack)
}

/// Encodes a stack; values are rounded to binary32.
pub fn write_fgrid(stack: &FloatGridStack) -> Vec<u8> {
    let mut out = Vec::with_capacity(FGRID_HEADER_LEN + stack.data().len() * 4);
    out.extend_from_slice(FGRID_MAGIC);
    out.extend_from_slice(&(stack.count() as u32).to_le_bytes());
    out.extend_from_slice(&(stack.height() as u32).to_le_bytes());
    out.extend_from_slice(&(stack.width() as u32).to_le_bytes());
    for &v in stack.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}
