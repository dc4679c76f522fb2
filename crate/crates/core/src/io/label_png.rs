use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth, ColorType, Compression, Decoder, DecodingError, Encoder, Transformations};

use crate::error::{Error, Result};
use crate::types::InstanceMap;

/// Largest label a PNG label map can hold.
pub const MAX_PNG_LABEL: u32 = u16::MAX as u32;

/// Reads a single-channel 8- or 16-bit grayscale PNG as a label map.
pub fn read_label_png(path: impl AsRef<Path>) -> Result<InstanceMap> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::IDENTITY);
    let decode_err = |e: DecodingError| match e {
        DecodingError::IoError(source) if source.kind() != std::io::ErrorKind::UnexpectedEof => {
            Error::io(path, source)
        }
        other => Error::Decode {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    };
    let mut reader = decoder.read_info().map_err(decode_err)?;

    let info = reader.info();
    let (width, height) = (info.width as usize, info.height as usize);
    let (color, depth) = (info.color_type, info.bit_depth);
    if color != ColorType::Grayscale || !matches!(depth, BitDepth::Eight | BitDepth::Sixteen) {
        return Err(Error::UnsupportedColor {
            path: path.to_path_buf(),
            detail: format!("{color:?} at {depth:?}"),
        });
    }

    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.to_path_buf(),
        detail: "image too large".into(),
    })?;
    let mut buf = vec![0u8; size];
    reader.next_frame(&mut buf).map_err(decode_err)?;

    let labels: Vec<u32> = match depth {
        BitDepth::Eight => buf[..width * height].iter().map(|&v| v as u32).collect(),
        _ => buf[..width * height * 2]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as u32)
            .collect(),
    };
    InstanceMap::new(width, height, labels)
}

/// Writes a label map as a 16-bit grayscale PNG.
pub fn write_label_png(map: &InstanceMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let max = map.max_label();
    if max > MAX_PNG_LABEL {
        return Err(Error::LabelOverflow(max));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(source) => Error::io(path, source),
        other => Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(other.to_string()),
        },
    };
    let mut encoder = Encoder::new(BufWriter::new(file), map.width() as u32, map.height() as u32);
    encoder.set_color(ColorType::Grayscale);
    encoder.set_depth(BitDepth::Sixteen);
    encoder.set_compression(Compression::Fast);
    let mut writer = encoder.write_header().map_err(encode_err)?;
    let data: Vec<u8> = map
        .labels()
        .iter()
        .flat_map(|&l| (l as u16).to_be_bytes())
        .collect();
    writer.write_image_data(&data).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}
