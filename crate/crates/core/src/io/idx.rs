//! IDX binary image/label ingestion (the MNIST container format).
//!
//! Magic numbers are big-endian: `0x00000803` for 3-dimensional image files,
//! `0x00000801` for 1-dimensional label files, followed by big-endian u32
//! dimension sizes and raw unsigned bytes.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(reader: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf).map_err(|_| Error::DataFormat {
        path: path.display().to_string(),
        msg: "truncated header".into(),
    })?;
    Ok(u32::from_be_bytes(buf))
}

fn read_bytes(reader: &mut impl Read, len: usize, path: &Path) -> Result<Vec<u8>> {
    let mut data = vec![0u8; len];
    reader.read_exact(&mut data).map_err(|_| Error::DataFormat {
        path: path.display().to_string(),
        msg: format!("truncated payload, expected {len} bytes"),
    })?;
    Ok(data)
}

/// Loads an image/label IDX pair. Images flatten to one row of
/// `rows * cols` features scaled by the byte maximum into `[0, 1]`.
pub fn load_idx<T: Scalar>(images_path: &Path, labels_path: &Path) -> Result<Dataset<T>> {
    let mut images = BufReader::new(File::open(images_path)?);
    let magic = read_u32_be(&mut images, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::DataFormat {
            path: images_path.display().to_string(),
            msg: format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let count = read_u32_be(&mut images, images_path)? as usize;
    let rows = read_u32_be(&mut images, images_path)? as usize;
    let cols = read_u32_be(&mut images, images_path)? as usize;
    let pixels = read_bytes(&mut images, count * rows * cols, images_path)?;

    let mut labels = BufReader::new(File::open(labels_path)?);
    let magic = read_u32_be(&mut labels, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::DataFormat {
            path: labels_path.display().to_string(),
            msg: format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let label_count = read_u32_be(&mut labels, labels_path)? as usize;
    if label_count != count {
        return Err(Error::DataFormat {
            path: labels_path.display().to_string(),
            msg: format!("{label_count} labels for {count} images"),
        });
    }
    let label_bytes = read_bytes(&mut labels, label_count, labels_path)?;

    let scale = T::one() / T::from_f64_lossy(255.0);
    let data: Vec<T> = pixels
        .iter()
        .map(|&b| T::from_u8(b).expect("byte") * scale)
        .collect();
    let x = Matrix::from_vec(count, rows * cols, data)?;
    Dataset::labeled(x, label_bytes.into_iter().map(usize::from).collect())
}
