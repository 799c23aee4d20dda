//! 16-bit binary PGM (P5, maxval 65535, big-endian samples).

use std::path::Path;

use crate::image::ImagePlane;

/// Peak-normalized image to P5 bytes. A 1-D image is one row; 2-D rows are
/// written in storage order (increasing y first).
pub fn encode_pgm(image: &ImagePlane) -> Vec<u8> {
    let rows = image.rows();
    let cols = image.values().len() / rows;
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    out.reserve(2 * image.values().len());
    for v in image.values() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn write_pgm(path: &Path, image: &ImagePlane) -> crate::Result<()> {
    super::write_atomic(path, &encode_pgm(image))
}
