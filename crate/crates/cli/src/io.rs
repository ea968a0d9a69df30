//! Dataset file formats: feature CSV and the classic big-endian IDX pair.

use rs2_core::dataset::Dataset;
use rs2_core::matrix::Matrix;
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    CsvParse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: byte offset {offset}: {message}")]
    IdxParse {
        path: String,
        offset: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] rs2_core::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Write `f0,...,f{d-1},label` rows; floats use the shortest round-trip form.
pub fn write_csv(dataset: &Dataset, path: &Path) -> IoResult<()> {
    let mut out = String::new();
    let d = dataset.dim();
    for j in 0..d {
        out.push_str(&format!("f{j},"));
    }
    out.push_str("label\n");
    for i in 0..dataset.len() {
        for &v in dataset.features().row(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", dataset.labels()[i]));
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| file_err(path, e))
}

/// Load a header-first CSV whose last column is an integer class label.
pub fn load_csv(path: &Path) -> IoResult<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let parse_err = |line: usize, message: String| IoError::CsvParse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file, expected a header row".into()))?;
    let columns = header.split(',').count();
    if columns < 2 {
        return Err(parse_err(
            1,
            "header needs at least one feature column and a label column".into(),
        ));
    }
    let d = columns - 1;
    let mut data = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(parse_err(
                line_no,
                format!("expected {columns} fields, got {}", fields.len()),
            ));
        }
        for field in &fields[..d] {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad feature value '{field}'")))?;
            data.push(v);
        }
        let label: usize = fields[d]
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label '{}'", fields[d])))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(parse_err(2, "no data rows".into()));
    }
    let num_classes = labels.iter().max().unwrap() + 1;
    let rows = labels.len();
    Ok(Dataset::new(
        Matrix::new(rows, d, data)?,
        labels,
        num_classes,
    )?)
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], offset: usize, path: &Path, what: &str) -> IoResult<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(IoError::IdxParse {
            path: path.display().to_string(),
            offset,
            message: format!("truncated while reading {what}"),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Load the classic image/label IDX pair; pixels are scaled to [0, 1].
pub fn load_idx(images_path: &Path, labels_path: &Path) -> IoResult<Dataset> {
    let images = fs::read(images_path).map_err(|e| file_err(images_path, e))?;
    let labels_raw = fs::read(labels_path).map_err(|e| file_err(labels_path, e))?;
    let idx_err = |path: &Path, offset: usize, message: String| IoError::IdxParse {
        path: path.display().to_string(),
        offset,
        message,
    };

    let magic = read_be_u32(&images, 0, images_path, "magic number")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(idx_err(
            images_path,
            0,
            format!("bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = read_be_u32(&images, 4, images_path, "image count")? as usize;
    let rows = read_be_u32(&images, 8, images_path, "row count")? as usize;
    let cols = read_be_u32(&images, 12, images_path, "column count")? as usize;
    let pixels = count * rows * cols;
    if images.len() != 16 + pixels {
        return Err(idx_err(
            images_path,
            16,
            format!(
                "expected {} pixel bytes, file has {}",
                pixels,
                images.len() - 16
            ),
        ));
    }

    let magic = read_be_u32(&labels_raw, 0, labels_path, "magic number")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(idx_err(
            labels_path,
            0,
            format!("bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        ));
    }
    let label_count = read_be_u32(&labels_raw, 4, labels_path, "label count")? as usize;
    if label_count != count {
        return Err(idx_err(
            labels_path,
            4,
            format!("{label_count} labels for {count} images"),
        ));
    }
    if labels_raw.len() != 8 + label_count {
        return Err(idx_err(
            labels_path,
            8,
            format!(
                "expected {} label bytes, file has {}",
                label_count,
                labels_raw.len() - 8
            ),
        ));
    }

    let data: Vec<f64> = images[16..].iter().map(|&b| b as f64 / 255.0).collect();
    let labels: Vec<usize> = labels_raw[8..].iter().map(|&b| b as usize).collect();
    let num_classes = labels.iter().max().copied().unwrap_or(0) + 1;
    Ok(Dataset::new(
        Matrix::new(count, rows * cols, data)?,
        labels,
        num_classes,
    )?)
}
