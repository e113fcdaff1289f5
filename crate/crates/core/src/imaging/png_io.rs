use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{Image, ImagingError};

/// Float sample to byte, `round(s * 255)` with ties rounding up.
#[inline]
pub fn quantize_sample(s: f64) -> u8 {
    (s.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn io_err(path: &Path, source: std::io::Error) -> ImagingError {
    if source.kind() == std::io::ErrorKind::NotFound {
        ImagingError::NotFound(path.to_path_buf())
    } else {
        ImagingError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads an 8-bit grayscale or RGB PNG. Alpha channels are dropped.
pub fn load_png(path: impl AsRef<Path>) -> Result<Image, ImagingError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| match e {
        png::DecodingError::IoError(source) => io_err(path, source),
        other => ImagingError::Decode(other.to_string()),
    })?;

    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if depth != png::BitDepth::Eight {
        return Err(ImagingError::UnsupportedBitDepth(depth as u8));
    }
    let (src_channels, keep) = match color {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(ImagingError::UnsupportedColorType("indexed".into()))
        }
    };

    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImagingError::Decode("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| ImagingError::Decode(e.to_string()))?;
    let (width, height) = (frame.width as usize, frame.height as usize);

    let mut data = Vec::with_capacity(width * height * keep);
    for row in buf.chunks(frame.line_size).take(height) {
        for px in row[..width * src_channels].chunks_exact(src_channels) {
            data.extend(px[..keep].iter().map(|&b| b as f64 / 255.0));
        }
    }
    Image::from_vec(width, height, keep, data)
}

/// Writes an 8-bit grayscale or RGB PNG using [`quantize_sample`].
pub fn save_png(img: &Image, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        img.width() as u32,
        img.height() as u32,
    );
    encoder.set_color(if img.channels() == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    encoder.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = img.data().iter().map(|&s| quantize_sample(s)).collect();
    let encode = |e: png::EncodingError| match e {
        png::EncodingError::IoError(source) => io_err(path, source),
        other => ImagingError::Encode(other.to_string()),
    };
    let mut writer = encoder.write_header().map_err(encode)?;
    writer.write_image_data(&bytes).map_err(encode)?;
    writer.finish().map_err(encode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize_sample(1.0), 255);
        assert_eq!(quantize_sample(0.0), 0);
        assert_eq!(quantize_sample(0.5), 128);
        assert_eq!(quantize_sample(127.0 / 255.0), 127);
    }

    #[test]
    fn endpoints_load_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let white = dir.path().join("w.png");
        let black = dir.path().join("b.png");
        save_png(&Image::filled(1, 1, 3, 1.0).unwrap(), &white).unwrap();
        save_png(&Image::filled(1, 1, 3, 0.0).unwrap(), &black).unwrap();
        assert_eq!(load_png(&white).unwrap().data(), &[1.0, 1.0, 1.0]);
        assert_eq!(load_png(&black).unwrap().data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_file_is_not_found() {
        assert!(matches!(
            load_png("/nonexistent/nope.png"),
            Err(ImagingError::NotFound(_))
        ));
    }

    fn write_raw(path: &Path, color: png::ColorType, depth: png::BitDepth, data: &[u8]) {
        let file = File::create(path).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), 1, 1);
        enc.set_color(color);
        enc.set_depth(depth);
        if color == png::ColorType::Indexed {
            enc.set_palette(vec![0u8, 0, 0]);
        }
        let mut w = enc.write_header().unwrap();
        w.write_image_data(data).unwrap();
        w.finish().unwrap();
    }

    #[test]
    fn unsupported_formats_have_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p16 = dir.path().join("16.png");
        write_raw(&p16, png::ColorType::Rgb, png::BitDepth::Sixteen, &[0; 6]);
        assert!(matches!(
            load_png(&p16),
            Err(ImagingError::UnsupportedBitDepth(16))
        ));
        let pal = dir.path().join("pal.png");
        write_raw(&pal, png::ColorType::Indexed, png::BitDepth::Eight, &[0]);
        assert!(matches!(
            load_png(&pal),
            Err(ImagingError::UnsupportedColorType(_))
        ));
    }

    #[test]
    fn alpha_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgba.png");
        write_raw(&p, png::ColorType::Rgba, png::BitDepth::Eight, &[255, 0, 51, 7]);
        let img = load_png(&p).unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(img.data(), &[1.0, 0.0, 0.2]);
        let ga = dir.path().join("ga.png");
        write_raw(&ga, png::ColorType::GrayscaleAlpha, png::BitDepth::Eight, &[102, 9]);
        assert_eq!(load_png(&ga).unwrap().data(), &[0.4]);
    }
}
