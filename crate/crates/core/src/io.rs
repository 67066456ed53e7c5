//! Grayscale image I/O (binary PGM, grayscale PNG) and the fingerprint
//! file format.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::fingerprint::{Estimator, Fingerprint};
use crate::{Error, ImagePlane, Result};

const FINGERPRINT_MAGIC: &[u8; 4] = b"FPR1";

fn malformed(format: &'static str, reason: impl Into<String>) -> Error {
    Error::MalformedData {
        format,
        reason: reason.into(),
    }
}

/// Loads an 8- or 16-bit binary PGM (`P5`) or a grayscale PNG.
///
/// The format is detected from the file's magic bytes, not its
/// extension. Color inputs are rejected; callers convert beforehand.
/// Pixel values are returned as-is (0..=255 for 8-bit data, up to 65535
/// for 16-bit).
pub fn load_image(path: &Path) -> Result<ImagePlane> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") {
        return parse_pgm(&bytes);
    }
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return load_png(&bytes);
    }
    Err(malformed("image", "unrecognized magic bytes (not P5 PGM or PNG)"))
}

fn load_png(bytes: &[u8]) -> Result<ImagePlane> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    match img {
        image::DynamicImage::ImageLuma8(gray) => {
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            let data = gray.into_raw().into_iter().map(f64::from).collect();
            ImagePlane::new(h, w, data)
        }
        image::DynamicImage::ImageLuma16(gray) => {
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            let data = gray.into_raw().into_iter().map(f64::from).collect();
            ImagePlane::new(h, w, data)
        }
        _ => Err(malformed("PNG", "color images are rejected; convert to grayscale first")),
    }
}

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: u32,
    raster_offset: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    // Three whitespace-separated tokens follow the magic; '#' starts a
    // comment running to end of line.
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(malformed("PGM", "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if pos == start {
            return Err(malformed("PGM", "expected a decimal header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| malformed("PGM", "header field out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed("PGM", "missing raster separator")),
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(malformed("PGM", format!("unsupported maxval {maxval}")));
    }
    Ok(PgmHeader {
        width: width as usize,
        height: height as usize,
        maxval,
        raster_offset: pos,
    })
}

fn parse_pgm(bytes: &[u8]) -> Result<ImagePlane> {
    let header = parse_pgm_header(bytes)?;
    let n = header.width * header.height;
    let raster = &bytes[header.raster_offset..];
    let data: Vec<f64> = if header.maxval < 256 {
        if raster.len() < n {
            return Err(malformed("PGM", "raster shorter than header promises"));
        }
        raster[..n].iter().map(|&b| f64::from(b)).collect()
    } else {
        if raster.len() < 2 * n {
            return Err(malformed("PGM", "raster shorter than header promises"));
        }
        raster[..2 * n]
            .chunks_exact(2)
            .map(|px| f64::from(u16::from_be_bytes([px[0], px[1]])))
            .collect()
    };
    ImagePlane::new(header.height, header.width, data)
}

/// Writes an 8-bit binary PGM, rounding and clamping values to
/// `[0, 255]`.
pub fn save_pgm(plane: &ImagePlane, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(plane.len() + 32);
    write!(out, "P5\n{} {}\n255\n", plane.width(), plane.height())?;
    out.extend(
        plane
            .as_slice()
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, out)?;
    Ok(())
}

/// Writes a 16-bit binary PGM (big-endian samples, maxval 65535).
pub fn save_pgm16(plane: &ImagePlane, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(2 * plane.len() + 32);
    write!(out, "P5\n{} {}\n65535\n", plane.width(), plane.height())?;
    for &v in plane.as_slice() {
        let q = v.round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Serializes a fingerprint: 16-byte header (magic `FPR1`, height,
/// width, packed estimator/cleaned/image-count code) followed by the
/// plane as little-endian `f64`, row-major.
pub fn save_fingerprint(fp: &Fingerprint, path: &Path) -> Result<()> {
    let (h, w) = fp.plane.shape();
    let mut out = Vec::with_capacity(16 + 8 * fp.plane.len());
    out.extend_from_slice(FINGERPRINT_MAGIC);
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    let code: u32 =
        fp.estimator.code() as u32 | (fp.cleaned as u32) << 8 | (fp.n_images as u32) << 16;
    out.extend_from_slice(&code.to_le_bytes());
    for &v in fp.plane.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_fingerprint(path: &Path) -> Result<Fingerprint> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 || &bytes[0..4] != FINGERPRINT_MAGIC {
        return Err(malformed("fingerprint", "missing FPR1 header"));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let code = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let estimator = Estimator::from_code((code & 0xff) as u8)
        .ok_or_else(|| malformed("fingerprint", format!("unknown estimator code {}", code & 0xff)))?;
    let cleaned = (code >> 8) & 0xff != 0;
    let n_images = (code >> 16) as u16;
    let expected = 16 + 8 * h * w;
    if bytes.len() != expected {
        return Err(malformed(
            "fingerprint",
            format!("expected {expected} bytes for {h}x{w}, found {}", bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Fingerprint {
        plane: ImagePlane::new(h, w, data)?,
        estimator,
        n_images,
        cleaned,
        degenerate_pixels: 0,
    })
}
