//! Frame and mask files: binary PGM/PPM (hand-rolled) and PNG.
//!
//! Frame directories hold `<prefix>_<index>.<ext>` files; the index is the
//! trailing number of the file stem.

use std::fs;
use std::path::{Path, PathBuf};

use mariscope_core::{Channels, ForegroundMask, Frame};

use crate::error::{Error, Result};

pub const FRAME_PREFIX: &str = "frame";
pub const MASK_PREFIX: &str = "mask";
pub const VALID_PREFIX: &str = "valid";

pub fn numbered(dir: &Path, prefix: &str, index: u64, ext: &str) -> PathBuf {
    dir.join(format!("{prefix}_{index:06}.{ext}"))
}

fn ext_of(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn is_image_ext(ext: &str) -> bool {
    matches!(ext, "pgm" | "ppm" | "pnm" | "png")
}

fn trailing_index(stem: &str) -> Option<u64> {
    let digits: String = stem.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return None;
    }
    digits.chars().rev().collect::<String>().parse().ok()
}

/// Numbered image files in `dir` whose stem starts with `prefix`, sorted by
/// index. Duplicate indices are an error.
pub fn list_numbered(dir: &Path, prefix: &str) -> Result<Vec<(u64, PathBuf)>> {
    check_unique(scan(dir, prefix)?, dir)
}

fn scan(dir: &Path, prefix: &str) -> Result<Vec<(u64, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || !is_image_ext(&ext_of(&path)) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        if !stem.starts_with(prefix) {
            continue;
        }
        if let Some(i) = trailing_index(stem) {
            out.push((i, path));
        }
    }
    out.sort();
    Ok(out)
}

fn check_unique(out: Vec<(u64, PathBuf)>, dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput(format!("duplicate frame index {} in {}", w[0].0, dir.display())));
    }
    Ok(out)
}

/// Frame images in `dir`: every numbered image except validity and mask
/// files, which may share a directory with registered frames.
pub fn list_frames(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut all = scan(dir, "")?;
    all.retain(|(_, p)| {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        !stem.starts_with(VALID_PREFIX) && !stem.starts_with(MASK_PREFIX)
    });
    check_unique(all, dir)
}

struct PnmHeader {
    magic: u8,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> std::result::Result<PnmHeader, String> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'5' | b'6') {
        return Err("not a binary PGM/PPM (P5/P6) file".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos]).ok().and_then(|s| s.parse().ok()).ok_or("malformed header")?;
    }
    // exactly one whitespace byte before the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err("malformed header".into());
    }
    Ok(PnmHeader { magic: bytes[1], width: fields[0], height: fields[1], maxval: fields[2], data_start: pos + 1 })
}

pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<Frame, String> {
    let h = parse_pnm_header(bytes)?;
    if h.maxval != 255 {
        return Err(format!("unsupported maxval {} (only 8-bit files)", h.maxval));
    }
    let channels = if h.magic == b'5' { Channels::Gray } else { Channels::Rgb };
    let n = h.width * h.height * channels.count();
    let raster = bytes.get(h.data_start..h.data_start + n).ok_or("truncated raster")?;
    Frame::new(h.width, h.height, channels, raster.to_vec()).map_err(|e| e.to_string())
}

pub fn encode_pnm(frame: &Frame) -> Vec<u8> {
    let magic = if frame.channels() == Channels::Gray { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.data());
    out
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match ext_of(path).as_str() {
        "png" => {
            let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|e| Error::format(path, e))?;
            let frame = match img {
                image::DynamicImage::ImageLuma8(g) => Frame::new(g.width() as usize, g.height() as usize, Channels::Gray, g.into_raw()),
                other => {
                    let rgb = other.to_rgb8();
                    Frame::new(rgb.width() as usize, rgb.height() as usize, Channels::Rgb, rgb.into_raw())
                }
            };
            frame.map_err(|e| Error::format(path, e))
        }
        _ => decode_pnm(&bytes).map_err(|e| Error::format(path, e)),
    }
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    let bytes = match ext_of(path).as_str() {
        "png" => {
            let (w, h) = (frame.width() as u32, frame.height() as u32);
            let color = if frame.channels() == Channels::Gray { image::ExtendedColorType::L8 } else { image::ExtendedColorType::Rgb8 };
            let mut buf = Vec::new();
            image::ImageEncoder::write_image(image::codecs::png::PngEncoder::new(&mut buf), frame.data(), w, h, color).map_err(|e| Error::format(path, e))?;
            buf
        }
        _ => encode_pnm(frame),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn mask_to_frame(mask: &ForegroundMask) -> Frame {
    let data = mask.data.iter().map(|&v| if v { 255 } else { 0 }).collect();
    Frame::new(mask.width, mask.height, Channels::Gray, data).expect("mask dimensions are valid")
}

pub fn frame_to_mask(frame: &Frame) -> ForegroundMask {
    let gray = frame.to_gray();
    ForegroundMask { width: gray.width(), height: gray.height(), data: gray.data().iter().map(|&v| v >= 128).collect() }
}

pub fn write_mask(path: &Path, mask: &ForegroundMask) -> Result<()> {
    write_frame(path, &mask_to_frame(mask))
}

pub fn read_mask(path: &Path) -> Result<ForegroundMask> {
    read_frame(path).map(|f| frame_to_mask(&f))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Creates the directory an output file goes into.
pub fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => create_dir(d),
        _ => Ok(()),
    }
}
