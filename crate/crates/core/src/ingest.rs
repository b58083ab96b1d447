//! Ingestion of measured fields given as numeric CSV grids.
//!
//! Rows run along `y` (ascending), columns along `x` (ascending). A single
//! optional header line starting with `#` is skipped. Nothing is resampled:
//! the grid spacing is `L / N` on each axis.

use std::path::Path;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::band::BandRegion;
use crate::error::{param, Error, Result};
use crate::fft::{bin, fft2};
use crate::field::HarmonicField;

/// Parsed rectangular grid, row-major with `y` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

pub fn parse_grid(text: &str) -> Result<Grid> {
    let mut values = Vec::new();
    let mut nx = 0usize;
    let mut ny = 0usize;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let trimmed = line.trim();
        if i == 0 && trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        if ny == 0 {
            nx = cells.len();
        } else if cells.len() != nx {
            return Err(Error::Parse {
                row,
                col: cells.len().min(nx) + 1,
                msg: format!("ragged row: expected {nx} columns, found {}", cells.len()),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row,
                col: j + 1,
                msg: format!("not a number: {:?}", cell.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, col: j + 1, msg: format!("non-finite value {v}") });
            }
            values.push(v);
        }
        ny += 1;
    }
    if ny == 0 {
        return Err(Error::Parse { row: 0, col: 0, msg: "empty grid".into() });
    }
    Ok(Grid { nx, ny, values })
}

pub fn ingest_grid_csv(path: impl AsRef<Path>, length: f64, target_band: BandRegion) -> Result<HarmonicField> {
    let text = std::fs::read_to_string(path)?;
    ingest_grid_str(&text, length, target_band)
}

pub fn ingest_grid_str(text: &str, length: f64, target_band: BandRegion) -> Result<HarmonicField> {
    grid_to_field(&parse_grid(text)?, length, target_band)
}

/// Band-limited projection of a sampled grid: DFT, keep the harmonics inside
/// `target_band`, drop the rest. An even-length axis splits its Nyquist bin
/// evenly between `+N/2` and `-N/2` so the result stays real and still
/// interpolates the grid.
pub fn grid_to_field(grid: &Grid, length: f64, target_band: BandRegion) -> Result<HarmonicField> {
    target_band.validate()?;
    let (nx, ny) = (grid.nx, grid.ny);
    if target_band.dimension() == 1 && ny != 1 {
        return Err(param(format!("a 1-D band needs a single-row grid, found {ny} rows")));
    }
    let mut data: Vec<Complex64> = grid.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, nx, ny, FftDirection::Forward);
    let scale = 1.0 / (nx * ny) as f64;
    let mut field = HarmonicField::zeros([length, length], [nx / 2, ny / 2], target_band)?;
    let ks: Vec<[i64; 2]> = field.iter().map(|(k, _)| k).collect();
    let mut pending = Vec::new();
    for k in ks {
        if !target_band.contains(field.frequency(k)) {
            continue;
        }
        let split = nyquist_split(k[0], nx) * nyquist_split(k[1], ny);
        let c = data[bin(k[1], ny) * nx + bin(k[0], nx)] * (scale / split);
        pending.push((k, c));
    }
    for (k, c) in pending {
        if crate::field::is_representative(k) {
            field.set_pair(k, c)?;
        }
    }
    Ok(field)
}

fn nyquist_split(k: i64, n: usize) -> f64 {
    if n % 2 == 0 && n > 1 && k.unsigned_abs() as usize == n / 2 {
        2.0
    } else {
        1.0
    }
}
