//! MNIST IDX file ingestion.
//!
//! Big-endian 32-bit magic (2051 for images, 2049 for labels), dimension
//! counts, then raw unsigned bytes. Pixels map to the bipolar range via
//! x = 2 * (p / 255) - 1.

use crate::error::{NetworkError, Result};
use std::path::Path;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

#[derive(Debug, Clone)]
pub struct MnistDataset {
    images: Vec<u8>,
    labels: Vec<u8>,
    rows: usize,
    cols: usize,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn be_u32(data: &[u8], offset: usize, what: &str) -> Result<u32> {
    let bytes: [u8; 4] = data
        .get(offset..offset + 4)
        .ok_or_else(|| NetworkError::format(format!("truncated file while reading {what}")))?
        .try_into()
        .unwrap();
    Ok(u32::from_be_bytes(bytes))
}

pub fn bipolar_pixel(p: u8) -> f64 {
    2.0 * (p as f64 / 255.0) - 1.0
}

/// Load an images/labels IDX file pair.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<MnistDataset> {
    let image_data = read_file(images_path)?;
    let label_data = read_file(labels_path)?;

    let magic = be_u32(&image_data, 0, "image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(NetworkError::format(format!(
            "bad image magic {magic}, expected {IMAGE_MAGIC}"
        )));
    }
    let count = be_u32(&image_data, 4, "image count")? as usize;
    let rows = be_u32(&image_data, 8, "image rows")? as usize;
    let cols = be_u32(&image_data, 12, "image cols")? as usize;
    let expected = 16 + count * rows * cols;
    if image_data.len() < expected {
        return Err(NetworkError::format(format!(
            "truncated image file: {} bytes, need {expected}",
            image_data.len()
        )));
    }

    let magic = be_u32(&label_data, 0, "label magic")?;
    if magic != LABEL_MAGIC {
        return Err(NetworkError::format(format!(
            "bad label magic {magic}, expected {LABEL_MAGIC}"
        )));
    }
    let label_count = be_u32(&label_data, 4, "label count")? as usize;
    if label_data.len() < 8 + label_count {
        return Err(NetworkError::format("truncated label file".to_string()));
    }
    if label_count != count {
        return Err(NetworkError::format(format!(
            "image/label count mismatch: {count} images vs {label_count} labels"
        )));
    }

    Ok(MnistDataset {
        images: image_data[16..16 + count * rows * cols].to_vec(),
        labels: label_data[8..8 + label_count].to_vec(),
        rows,
        cols,
    })
}

impl MnistDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn label(&self, index: usize) -> u8 {
        self.labels[index]
    }

    pub fn raw_image(&self, index: usize) -> &[u8] {
        let px = self.rows * self.cols;
        &self.images[index * px..(index + 1) * px]
    }

    /// Image pixels mapped into [-1, 1].
    pub fn bipolar_image(&self, index: usize) -> Vec<f64> {
        self.raw_image(index).iter().map(|&p| bipolar_pixel(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_idx(
        dir: &std::path::Path,
        name: &str,
        magic: u32,
        dims: &[u32],
        payload: &[u8],
    ) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(&magic.to_be_bytes()).unwrap();
        for d in dims {
            f.write_all(&d.to_be_bytes()).unwrap();
        }
        f.write_all(payload).unwrap();
        path
    }

    fn tiny_pair(dir: &std::path::Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let pixels: Vec<u8> = (0..3 * 4).map(|i| (i * 23) as u8).collect();
        let images = write_idx(dir, "imgs", IMAGE_MAGIC, &[3, 2, 2], &pixels);
        let labels = write_idx(dir, "lbls", LABEL_MAGIC, &[3], &[7, 0, 9]);
        (images, labels)
    }

    #[test]
    fn loads_synthetic_idx() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = tiny_pair(dir.path());
        let ds = load_mnist(&images, &labels).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.image_size(), (2, 2));
        assert_eq!(ds.label(0), 7);
        assert_eq!(ds.raw_image(1), &[92, 115, 138, 161]);
    }

    #[test]
    fn pixel_mapping_endpoints() {
        assert_eq!(bipolar_pixel(0), -1.0);
        assert_eq!(bipolar_pixel(255), 1.0);
        assert!(bipolar_pixel(128) > 0.0 && bipolar_pixel(128) < 0.01);
    }

    #[test]
    fn rejects_bad_magic_truncation_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (images, labels) = tiny_pair(dir.path());

        let bad_magic = write_idx(dir.path(), "badm", 1234, &[1, 2, 2], &[0; 4]);
        assert!(matches!(
            load_mnist(&bad_magic, &labels),
            Err(NetworkError::Format(_))
        ));

        let truncated = write_idx(dir.path(), "trunc", IMAGE_MAGIC, &[3, 2, 2], &[0; 5]);
        assert!(load_mnist(&truncated, &labels).is_err());

        let short_labels = write_idx(dir.path(), "short", LABEL_MAGIC, &[2], &[1, 2]);
        let err = load_mnist(&images, &short_labels).unwrap_err();
        assert!(err.to_string().contains("mismatch"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let (_, labels) = tiny_pair(dir.path());
        let missing = dir.path().join("nope");
        assert!(matches!(
            load_mnist(&missing, &labels),
            Err(NetworkError::Io { .. })
        ));
    }
}
