use std::collections::HashSet;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::asset::is_category;
use crate::error::{Error, Result};
use crate::geometry::Box3D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Real,
    Inserted,
}

/// One 3D box annotation: translation is the box center in the world frame,
/// size is (width, length, height), yaw is about +z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub instance_id: String,
    pub category: String,
    pub translation: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
    pub source: Source,
}

impl AnnotationRecord {
    pub fn from_box(instance_id: impl Into<String>, b: &Box3D, source: Source) -> Self {
        Self {
            instance_id: instance_id.into(),
            category: b.label.clone(),
            translation: b.center.into(),
            size: b.size.into(),
            yaw: b.yaw,
            source,
        }
    }

    pub fn to_box(&self) -> Box3D {
        Box3D::new(
            Vector3::from(self.translation),
            Vector3::from(self.size),
            self.yaw,
            self.category.clone(),
        )
    }
}

fn check(records: &[AnnotationRecord], path: &Path) -> Result<()> {
    let mut ids = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        if !ids.insert(r.instance_id.as_str()) {
            return Err(Error::schema(path, format!("record {i}: duplicate instance_id {:?}", r.instance_id)));
        }
        if !is_category(&r.category) {
            return Err(Error::schema(path, format!("record {i}: unknown category {:?}", r.category)));
        }
        if !r.to_box().is_valid() {
            return Err(Error::schema(path, format!("record {i}: invalid box geometry")));
        }
    }
    Ok(())
}

pub fn encode_annotations(records: &[AnnotationRecord]) -> Result<Vec<u8>> {
    check(records, Path::new("<annotations>"))?;
    let mut out = serde_json::to_vec_pretty(records).map_err(|e| Error::Format(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes the records as a JSON list; duplicate instance ids are an error.
pub fn write_annotations(records: &[AnnotationRecord], path: &Path) -> Result<()> {
    check(records, path)?;
    let bytes = encode_annotations(records)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<AnnotationRecord> =
        serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
    check(&records, path)?;
    Ok(records)
}
