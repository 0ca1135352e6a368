use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::image::netpbm_header;
use crate::error::{Error, Result};
use crate::placement::RoadMap;

/// Georeferencing for a BEV raster. Raster row 0 is the southmost row
/// (lowest y); column 0 the westmost (lowest x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BevSidecar {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
}

pub fn encode_pgm(width: u32, height: u32, cells: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(cells);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>)> {
    let ([w, h, maxval], data) = netpbm_header(bytes, b"P5")?;
    if maxval != 255 {
        return Err(Error::Format(format!("PGM maxval {maxval} is not 255")));
    }
    if data.len() != w as usize * h as usize {
        return Err(Error::Format(format!("PGM has {} data bytes, expected {}", data.len(), w * h)));
    }
    Ok((w, h, data.to_vec()))
}

pub fn read_bev_map(raster: &Path, sidecar: &Path) -> Result<RoadMap> {
    let bytes = std::fs::read(raster).map_err(|e| Error::io(raster, e))?;
    let (cols, rows, cells) = decode_pgm(&bytes).map_err(|e| Error::schema(raster, e.to_string()))?;
    let text = std::fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let meta: BevSidecar = serde_json::from_str(&text).map_err(|e| Error::schema(sidecar, e.to_string()))?;
    if !(meta.cell_size_m > 0.0 && meta.cell_size_m.is_finite()) {
        return Err(Error::schema(sidecar, "cell_size_m must be positive"));
    }
    if meta.width.is_some_and(|w| w != cols) || meta.height.is_some_and(|h| h != rows) {
        return Err(Error::schema(
            sidecar,
            format!(
                "sidecar size {:?}x{:?} does not match raster {cols}x{rows}",
                meta.width, meta.height
            ),
        ));
    }
    Ok(RoadMap {
        cols,
        rows,
        cells,
        origin: Vector2::new(meta.origin_x, meta.origin_y),
        cell_size: meta.cell_size_m,
        ground_z: meta.ground_z.unwrap_or(0.0),
    })
}

pub fn write_bev_map(road: &RoadMap, raster: &Path, sidecar: &Path) -> Result<()> {
    std::fs::write(raster, encode_pgm(road.cols, road.rows, &road.cells)).map_err(|e| Error::io(raster, e))?;
    let meta = BevSidecar {
        origin_x: road.origin.x,
        origin_y: road.origin.y,
        cell_size_m: road.cell_size,
        ground_z: Some(road.ground_z),
        width: Some(road.cols),
        height: Some(road.rows),
    };
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(sidecar, text).map_err(|e| Error::io(sidecar, e))
}
