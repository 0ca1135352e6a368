use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Ppm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "ppm",
            ImageFormat::Png => "png",
        }
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppm" => Ok(ImageFormat::Ppm),
            "png" => Ok(ImageFormat::Png),
            _ => Err(Error::Config(format!("unsupported image format {s:?}"))),
        }
    }
}

/// `[0, 1]` to `0..=255`, clamping first and rounding halves up.
pub fn quantize(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0 + 0.5).floor() as u8
}

/// Row-major interleaved RGB bytes.
pub fn to_rgb8(image: &Image) -> Vec<u8> {
    image.pixels.iter().flat_map(|p| p.map(quantize)).collect()
}

pub fn encode_ppm(image: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(to_rgb8(image));
    out
}

/// Decodes a binary PPM with maxval 255 into (width, height, rgb bytes).
pub fn decode_ppm(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>)> {
    let (fields, data) = netpbm_header(bytes, b"P6")?;
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Format(format!("PPM maxval {maxval} is not 255")));
    }
    let n = w as usize * h as usize * 3;
    if data.len() != n {
        return Err(Error::Format(format!("PPM has {} data bytes, expected {n}", data.len())));
    }
    Ok((w, h, data.to_vec()))
}

/// Parses a `P5`/`P6` header: magic, width, height, maxval separated by
/// whitespace (with `#` comments), then exactly one whitespace byte.
pub(crate) fn netpbm_header<'a>(bytes: &'a [u8], magic: &[u8; 2]) -> Result<([u32; 3], &'a [u8])> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::Format(format!("expected {} header", String::from_utf8_lossy(magic))));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("malformed header at byte {start}")))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("missing whitespace after header".into()));
    }
    Ok((fields, &bytes[pos + 1..]))
}

pub fn encode_png(image: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, image.width, image.height);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| Error::Format(e.to_string()))?;
    writer
        .write_image_data(&to_rgb8(image))
        .map_err(|e| Error::Format(e.to_string()))?;
    writer.finish().map_err(|e| Error::Format(e.to_string()))?;
    Ok(out)
}

pub fn encode_image(image: &Image, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Ppm => Ok(encode_ppm(image)),
        ImageFormat::Png => encode_png(image),
    }
}

pub fn write_image(image: &Image, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(image, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
