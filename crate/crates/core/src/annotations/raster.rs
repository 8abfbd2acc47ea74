//! PNG/JPEG decoding for index maps and RGB images.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit RGB image, row-major, 3 bytes per pixel.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RgbImage({}x{})", self.width, self.height)
    }
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParams("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::InvalidParams(format!(
                "expected {} RGB bytes for {width}x{height}, got {}",
                width * height * 3,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, pixels).expect("positive dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(|e| Error::malformed(path, e))?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        Self::new(w, h, img.into_raw()).map_err(|e| Error::malformed(path, e))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_png(BufWriter::new(file), self.width, self.height, png::ColorType::Rgb, &self.pixels)
            .map_err(|e| Error::SerializationFailure(format!("{}: {e}", path.display())))
    }

    pub fn to_png_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_png(&mut out, self.width, self.height, png::ColorType::Rgb, &self.pixels)
            .expect("in-memory PNG encoding");
        out
    }
}

/// Single-channel 8-bit grid decoded from a grayscale or paletted PNG.
/// Palette indices are returned as-is, not expanded to colors.
pub(crate) struct IndexGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u8>,
}

pub(crate) fn read_index_png(path: &Path) -> Result<IndexGrid> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_index_png(BufReader::new(file), path)
}

pub(crate) fn decode_index_png_bytes(bytes: &[u8], path: &Path) -> Result<IndexGrid> {
    decode_index_png(Cursor::new(bytes), path)
}

fn decode_index_png<R: std::io::BufRead + std::io::Seek>(r: R, path: &Path) -> Result<IndexGrid> {
    let mut decoder = png::Decoder::new(r);
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| Error::malformed(path, e))?;
    let info = reader.info();
    let (width, height) = (info.width as usize, info.height as usize);
    let color = info.color_type;
    let depth = info.bit_depth as u8;
    if !matches!(color, png::ColorType::Grayscale | png::ColorType::Indexed) {
        return Err(Error::malformed(
            path,
            format!("expected single-channel or paletted PNG, found {color:?}"),
        ));
    }
    if depth > 8 {
        return Err(Error::UnsupportedBitDepth { path: path.to_path_buf(), depth });
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::malformed(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| Error::malformed(path, e))?;
    let stride = frame.line_size;
    let mut values = Vec::with_capacity(width * height);
    for row in buf.chunks(stride).take(height) {
        if depth == 8 {
            values.extend_from_slice(&row[..width]);
        } else {
            let per_byte = 8 / depth as usize;
            let mask = (1u8 << depth) - 1;
            for x in 0..width {
                let byte = row[x / per_byte];
                let shift = 8 - depth as usize * (x % per_byte + 1);
                values.push((byte >> shift) & mask);
            }
        }
    }
    Ok(IndexGrid { width, height, values })
}

pub(crate) fn write_png<W: std::io::Write>(
    w: W,
    width: usize,
    height: usize,
    color: png::ColorType,
    data: &[u8],
) -> std::result::Result<(), png::EncodingError> {
    let mut enc = png::Encoder::new(w, width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    writer.write_image_data(data)?;
    writer.finish()
}

/// Writes an 8-bit grayscale PNG.
pub fn save_gray_png(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_png(BufWriter::new(file), width, height, png::ColorType::Grayscale, data)
        .map_err(|e| Error::SerializationFailure(format!("{}: {e}", path.display())))
}

pub fn gray_png_bytes(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    write_png(&mut out, width, height, png::ColorType::Grayscale, data).expect("in-memory PNG encoding");
    out
}
