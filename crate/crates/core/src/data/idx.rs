//! IDX (MNIST layout) reader: big-endian `u32` magic and dimensions followed
//! by unsigned-byte payload.

use super::{DataError, Dataset};
use ndarray::{Array1, Array2};
use std::path::Path;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Copy, Debug, Default)]
pub struct IdxOptions {
    /// Target side length; images are block-averaged down to it (28 -> 14
    /// gives 196 features).
    pub downsample: Option<usize>,
    /// Keep only the first `n` samples of the file.
    pub take_first: Option<usize>,
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32, DataError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DataError::IdxLength { path: path.to_path_buf(), expected: at + 4, actual: bytes.len() })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<(), DataError> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(DataError::IdxMagic { path: path.to_path_buf(), found, expected });
    }
    Ok(())
}

/// Loads an image/label file pair. Pixels are scaled to `[0, 1]`; the digit
/// of each image goes into both `labels` and `subtype_truth`, ready for
/// [`Dataset::one_vs_rest`].
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>, options: IdxOptions) -> Result<Dataset, DataError> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let images = read(images_path)?;
    let label_bytes = read(labels_path)?;

    check_magic(&images, IMAGES_MAGIC, images_path)?;
    let count = be_u32(&images, 4, images_path)? as usize;
    let rows = be_u32(&images, 8, images_path)? as usize;
    let cols = be_u32(&images, 12, images_path)? as usize;
    let expected = 16 + count * rows * cols;
    if images.len() != expected {
        return Err(DataError::IdxLength { path: images_path.to_path_buf(), expected, actual: images.len() });
    }

    check_magic(&label_bytes, LABELS_MAGIC, labels_path)?;
    let label_count = be_u32(&label_bytes, 4, labels_path)? as usize;
    if label_bytes.len() != 8 + label_count {
        return Err(DataError::IdxLength {
            path: labels_path.to_path_buf(),
            expected: 8 + label_count,
            actual: label_bytes.len(),
        });
    }
    if label_count != count {
        return Err(DataError::IdxCount { images: count, labels: label_count });
    }

    let n = options.take_first.map_or(count, |t| t.min(count));
    let (out_rows, out_cols, block_r, block_c) = match options.downsample {
        None => (rows, cols, 1, 1),
        Some(side) if side > 0 && rows.is_multiple_of(side) && cols.is_multiple_of(side) => (side, side, rows / side, cols / side),
        Some(side) => return Err(DataError::Downsample { from: rows.max(cols), to: side }),
    };
    let d = out_rows * out_cols;
    let norm = 255.0 * (block_r * block_c) as f64;
    let mut features = Array2::<f64>::zeros((n, d));
    for (i, mut out) in features.rows_mut().into_iter().enumerate() {
        let pixels = &images[16 + i * rows * cols..16 + (i + 1) * rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                out[(r / block_r) * out_cols + c / block_c] += pixels[r * cols + c] as f64;
            }
        }
        out.mapv_inplace(|v| v / norm);
    }
    let digits: Vec<usize> = label_bytes[8..8 + n].iter().map(|&b| b as usize).collect();
    let labels = Array1::from_iter(digits.iter().map(|&d| d as f64));
    Dataset::new(features, labels, Some(digits.into_iter().map(Some).collect()), None)
}
