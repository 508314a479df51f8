//! CSV and graymap readers and writers.
//!
//! CSV files are UTF-8 with a header row. Floats are written with Rust's
//! shortest round-trip formatting, so reading a file back reproduces the
//! values bit for bit and repeated runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use sarfocus_core::autofocus::CostTrace;
use sarfocus_core::{Complex, ComplexImage, PhaseErrorVector, PhaseHistory};

use crate::error::HarnessError;

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_error(path: &Path, err: csv::Error) -> HarnessError {
    match err.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::io(path, source),
        other => HarnessError::format(path, format!("{other:?}")),
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut writer = csv_writer(path)?;
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))
}

/// Reads every data row, checking the header matches `header` exactly.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(HarnessError::format(
            path,
            format!("expected header {header:?}, found {:?}", found.iter().collect::<Vec<_>>()),
        ));
    }
    reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| csv_error(path, e))
}

fn parse<T: std::str::FromStr>(path: &Path, record: &csv::StringRecord, column: usize) -> Result<T, HarnessError> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record
        .get(column)
        .ok_or_else(|| HarnessError::format(path, format!("line {line}: missing column {column}")))?;
    raw.trim()
        .parse()
        .map_err(|_| HarnessError::format(path, format!("line {line}: cannot parse {raw:?}")))
}

pub fn write_phase_history(path: &Path, g: &PhaseHistory) -> Result<(), HarnessError> {
    write_rows(
        path,
        &["re", "im"],
        g.as_slice().iter().map(|z| vec![z.re.to_string(), z.im.to_string()]),
    )
}

pub fn read_phase_history(path: &Path) -> Result<PhaseHistory, HarnessError> {
    let samples = read_rows(path, &["re", "im"])?
        .iter()
        .map(|r| Ok(Complex::new(parse(path, r, 0)?, parse(path, r, 1)?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(PhaseHistory::new(samples))
}

pub fn write_phases(path: &Path, phi: &PhaseErrorVector) -> Result<(), HarnessError> {
    write_rows(
        path,
        &["aperture", "phi_rad"],
        phi.angles()
            .iter()
            .enumerate()
            .map(|(m, a)| vec![m.to_string(), a.to_string()]),
    )
}

pub fn read_phases(path: &Path) -> Result<PhaseErrorVector, HarnessError> {
    let records = read_rows(path, &["aperture", "phi_rad"])?;
    let mut angles = vec![0.0; records.len()];
    let mut seen = vec![false; records.len()];
    for r in &records {
        let m: usize = parse(path, r, 0)?;
        if m >= angles.len() || seen[m] {
            return Err(HarnessError::format(path, format!("aperture index {m} out of range or repeated")));
        }
        angles[m] = parse(path, r, 1)?;
        seen[m] = true;
    }
    Ok(PhaseErrorVector::new(angles))
}

/// Complex image as `row,col,re,im`, column-major.
pub fn write_image(path: &Path, f: &ComplexImage) -> Result<(), HarnessError> {
    let rows = f.rows();
    write_rows(
        path,
        &["row", "col", "re", "im"],
        f.as_slice().iter().enumerate().map(|(i, z)| {
            vec![
                (i % rows).to_string(),
                (i / rows).to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ]
        }),
    )
}

/// Reads a `row,col,re,im` image; the shape is inferred from the largest
/// indices and every pixel must appear exactly once.
pub fn read_image(path: &Path) -> Result<ComplexImage, HarnessError> {
    let records = read_rows(path, &["row", "col", "re", "im"])?;
    let mut entries = Vec::with_capacity(records.len());
    for r in &records {
        let row: usize = parse(path, r, 0)?;
        let col: usize = parse(path, r, 1)?;
        entries.push((row, col, Complex::new(parse(path, r, 2)?, parse(path, r, 3)?)));
    }
    let rows = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let cols = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    if rows * cols != entries.len() || entries.is_empty() {
        return Err(HarnessError::format(
            path,
            format!("{} entries do not fill a {rows}×{cols} grid", entries.len()),
        ));
    }
    let mut data = vec![Complex::new(0.0, 0.0); rows * cols];
    let mut seen = vec![false; rows * cols];
    for (row, col, z) in entries {
        let i = col * rows + row;
        if seen[i] {
            return Err(HarnessError::format(path, format!("pixel ({row}, {col}) listed twice")));
        }
        seen[i] = true;
        data[i] = z;
    }
    Ok(ComplexImage::new(rows, cols, data)?)
}

pub fn write_trace(path: &Path, trace: &CostTrace) -> Result<(), HarnessError> {
    write_rows(
        path,
        &["n", "cost", "rel_change", "inner_iterations"],
        trace.entries.iter().map(|e| {
            vec![
                e.n.to_string(),
                e.cost.to_string(),
                e.rel_change.map(|v| v.to_string()).unwrap_or_default(),
                e.inner_iterations.to_string(),
            ]
        }),
    )
}

/// Generic table with a header and preformatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), HarnessError> {
    write_rows(path, header, rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(path, e))
}

/// 8-bit grey levels of `|f|`, row-major as image files expect.
///
/// Without `contrast` the magnitudes are scaled linearly so the peak maps to
/// 255. With `contrast` the 1st and 99th percentiles are stretched to 0 and
/// 255 and values outside are clipped.
pub fn magnitude_levels(f: &ComplexImage, contrast: bool) -> Vec<u8> {
    let mags = f.magnitudes();
    let (lo, hi) = if contrast {
        let mut sorted = mags.clone();
        sorted.sort_by(f64::total_cmp);
        let pick = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
        (pick(0.01), pick(0.99))
    } else {
        (0.0, mags.iter().copied().fold(0.0, f64::max))
    };
    let span = hi - lo;
    let (rows, cols) = f.shape();
    let mut levels = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let m = mags[c * rows + r];
            let v = if span > 0.0 { (m - lo) / span } else { 0.0 };
            levels.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    levels
}

/// Binary graymap of the magnitude image.
pub fn write_magnitude_pgm(path: &Path, f: &ComplexImage, contrast: bool) -> Result<(), HarnessError> {
    let levels = magnitude_levels(f, contrast);
    let out = create(path)?;
    PnmEncoder::new(out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&levels, f.cols() as u32, f.rows() as u32, ExtendedColorType::L8)
        .map_err(|e| HarnessError::format(path, e))
}

/// Loads an 8- or 16-bit grayscale image (graymap or PNG) as reflectivity
/// magnitudes in `[0, 1]` with zero phase. Image rows become range rows.
pub fn read_scene_image(path: &Path) -> Result<ComplexImage, HarnessError> {
    let img = image::ImageReader::open(path)
        .map_err(|e| HarnessError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| HarnessError::io(path, e))?
        .decode()
        .map_err(|e| HarnessError::format(path, e))?
        .into_luma16();
    let (width, height) = img.dimensions();
    let (rows, cols) = (height as usize, width as usize);
    let mut magnitudes = vec![0.0; rows * cols];
    for (x, y, p) in img.enumerate_pixels() {
        magnitudes[x as usize * rows + y as usize] = f64::from(p.0[0]) / f64::from(u16::MAX);
    }
    Ok(ComplexImage::from_magnitudes(rows, cols, &magnitudes)?)
}
