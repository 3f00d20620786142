//! Plain portable graymap ("P2") input and output.
//!
//! Map files carry one sample per cell; image row 0 is map row 0. Samples
//! darker than mid-gray are occupied.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DVector, Vector2};

use crate::error::{Error, Result};
use crate::mapcore::{GridMap, Occupancy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Graymap {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        match tokens.next() {
            Some("P2") => {}
            Some(other) => return Err(format!("expected magic P2, found {other:?}")),
            None => return Err("empty file".into()),
        }
        let mut next_number = |what: &str| -> std::result::Result<usize, String> {
            let tok = tokens.next().ok_or_else(|| format!("missing {what}"))?;
            tok.parse::<usize>()
                .map_err(|_| format!("invalid {what} {tok:?}"))
        };
        let width = next_number("width")?;
        let height = next_number("height")?;
        let maxval = next_number("maxval")?;
        if width == 0 || height == 0 {
            return Err("image has no pixels".into());
        }
        if maxval == 0 || maxval > u16::MAX as usize {
            return Err(format!("maxval {maxval} out of range"));
        }
        let mut samples = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            let v = next_number("sample")?;
            if v > maxval {
                return Err(format!("sample {v} exceeds maxval {maxval}"));
            }
            samples.push(v as u16);
        }
        if tokens.next().is_some() {
            return Err("trailing data after last sample".into());
        }
        Ok(Self {
            width,
            height,
            maxval: maxval as u16,
            samples,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, self.maxval);
        for row in self.samples.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u16::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Loads a P2 occupancy map. Samples are scaled to 0..255 before the
/// `< 128 => occupied` test.
pub fn load_map(path: &Path, resolution: f64, origin: Vector2<f64>) -> Result<GridMap> {
    let map_err = |message: String| Error::MapFormat {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| map_err(e.to_string()))?;
    let img = Graymap::parse(&text).map_err(map_err)?;
    let cells = img
        .samples
        .iter()
        .map(|&s| {
            let scaled = s as u32 * 255 / img.maxval as u32;
            if scaled < 128 {
                Occupancy::Occupied
            } else {
                Occupancy::Free
            }
        })
        .collect();
    GridMap::new(img.width, img.height, resolution, origin, cells)
}

/// Occupied = 0, free = 255.
pub fn occupancy_image(width: usize, height: usize, labels: &[Occupancy]) -> Graymap {
    Graymap {
        width,
        height,
        maxval: 255,
        samples: labels
            .iter()
            .map(|o| match o {
                Occupancy::Occupied => 0,
                Occupancy::Free => 255,
            })
            .collect(),
    }
}

/// Information diagonal min-max normalized to 0..255 (constant input maps
/// to 0).
pub fn heatmap_image(width: usize, height: usize, info: &DVector<f64>) -> Graymap {
    let lo = info.min();
    let hi = info.max();
    let span = hi - lo;
    Graymap {
        width,
        height,
        maxval: 255,
        samples: info
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    ((v - lo) / span * 255.0).round() as u16
                } else {
                    0
                }
            })
            .collect(),
    }
}

pub fn map_image(map: &GridMap) -> Graymap {
    occupancy_image(map.width(), map.height(), map.cells())
}
