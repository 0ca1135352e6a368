//! Binary Gaussian scene format. Little-endian throughout:
//!
//! ```text
//! header     "GSPL" | version u32 = 1 | timestep_count u32 | node_count u32
//! node       kind u8 (0 static, 1 rigid, 2 morphable) | id u32
//!            | label_len u16 | label utf-8 | primitive_count u32
//! rigid tail has_box u8 | [center 3×f32, size 3×f32, yaw f32]
//!            | transform_count u32 | { timestep u32 | R 9×f32 row-major | t 3×f32 }*
//! primitive  opacity f32 | mean 3×f32 | quat 4×f32 (w, x, y, z) | scale 3×f32
//!            | sh_degree u8 | coeffs 3·(d+1)² × f32
//! ```
//!
//! Each node header (and rigid tail) is followed directly by its primitives.
//! Static nodes are written before rigid nodes.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix3, Quaternion, Vector3};

use crate::error::{Error, Result};
use crate::gaussian::{sh_coeff_count, GaussianPrimitive, RigidTransform, MAX_SH_DEGREE};
use crate::geometry::Box3D;
use crate::scene::{RigidNode, SceneGraph, StaticNode};

pub const MAGIC: &[u8; 4] = b"GSPL";
pub const VERSION: u32 = 1;

const KIND_STATIC: u8 = 0;
const KIND_RIGID: u8 = 1;
const KIND_MORPHABLE: u8 = 2;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&(v as f32).to_le_bytes());
}

fn put_label(out: &mut Vec<u8>, label: &str) -> Result<()> {
    let len = u16::try_from(label.len()).map_err(|_| Error::Format(format!("label of {} bytes is too long", label.len())))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(label.as_bytes());
    Ok(())
}

fn put_primitive(out: &mut Vec<u8>, p: &GaussianPrimitive) {
    put_f32(out, p.opacity);
    for v in p.mean.iter() {
        put_f32(out, *v);
    }
    for v in [p.rotation.w, p.rotation.i, p.rotation.j, p.rotation.k] {
        put_f32(out, v);
    }
    for v in p.scale.iter() {
        put_f32(out, *v);
    }
    out.push(p.sh_degree);
    for v in &p.sh_coeffs {
        put_f32(out, *v);
    }
}

fn put_node_header(out: &mut Vec<u8>, kind: u8, id: u32, label: &str, count: usize) -> Result<()> {
    out.push(kind);
    put_u32(out, id);
    put_label(out, label)?;
    put_u32(out, u32::try_from(count).map_err(|_| Error::Format("too many primitives".into()))?);
    Ok(())
}

/// Serializes a scene. Values are narrowed to f32.
pub fn encode(scene: &SceneGraph) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + scene.primitive_count() * 64);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, scene.timestep_count);
    put_u32(&mut out, (scene.static_nodes.len() + scene.rigid_nodes.len()) as u32);
    for n in &scene.static_nodes {
        put_node_header(&mut out, KIND_STATIC, n.id, &n.label, n.primitives.len())?;
        for p in &n.primitives {
            put_primitive(&mut out, p);
        }
    }
    for n in &scene.rigid_nodes {
        put_node_header(&mut out, KIND_RIGID, n.id, &n.label, n.primitives.len())?;
        match &n.canonical_box {
            Some(b) => {
                out.push(1);
                for v in b.center.iter().chain(b.size.iter()) {
                    put_f32(&mut out, *v);
                }
                put_f32(&mut out, b.yaw);
            }
            None => out.push(0),
        }
        put_u32(&mut out, n.transforms.len() as u32);
        for (t, tf) in &n.transforms {
            put_u32(&mut out, *t);
            for v in tf.rotation().transpose().iter() {
                put_f32(&mut out, *v);
            }
            for v in tf.translation().iter() {
                put_f32(&mut out, *v);
            }
        }
        for p in &n.primitives {
            put_primitive(&mut out, p);
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::schema(
                self.path,
                format!("truncated at byte {} reading {what}", self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f64> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as f64)
    }

    fn vec3(&mut self, what: &str) -> Result<Vector3<f64>> {
        Ok(Vector3::new(self.f32(what)?, self.f32(what)?, self.f32(what)?))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::schema(self.path, msg)
    }

    fn primitive(&mut self, record: usize, node: u32) -> Result<GaussianPrimitive> {
        let opacity = self.f32("opacity")?;
        let mean = self.vec3("mean")?;
        let rotation = Quaternion::new(
            self.f32("rotation")?,
            self.f32("rotation")?,
            self.f32("rotation")?,
            self.f32("rotation")?,
        );
        let scale = self.vec3("scale")?;
        let sh_degree = self.u8("sh_degree")?;
        if sh_degree > MAX_SH_DEGREE {
            return Err(self.err(format!("primitive record {record} (node {node}): sh_degree {sh_degree} exceeds 3")));
        }
        let sh_coeffs = (0..sh_coeff_count(sh_degree))
            .map(|_| self.f32("sh coefficients"))
            .collect::<Result<Vec<_>>>()?;
        let p = GaussianPrimitive {
            opacity,
            mean,
            rotation,
            scale,
            sh_degree,
            sh_coeffs,
        };
        p.validate(record)
            .map_err(|e| self.err(format!("primitive record {record} (node {node}): {e}")))?;
        Ok(p)
    }
}

/// Parses and validates a scene. `path` is only used in diagnostics.
pub fn decode(bytes: &[u8], path: &Path) -> Result<SceneGraph> {
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.err("bad magic, expected \"GSPL\""));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.err(format!("unsupported version {version}")));
    }
    let mut scene = SceneGraph::new(r.u32("timestep_count")?);
    let node_count = r.u32("node_count")?;
    let mut record = 0usize;
    for ni in 0..node_count {
        let kind = r.u8("node kind")?;
        let id = r.u32("node id")?;
        let len = r.u16("label length")? as usize;
        let label = std::str::from_utf8(r.take(len, "label")?)
            .map_err(|_| r.err(format!("node {ni}: label is not utf-8")))?
            .to_string();
        let count = r.u32("primitive_count")? as usize;
        match kind {
            KIND_STATIC => {
                let mut primitives = Vec::with_capacity(count.min(bytes.len() / 53));
                for _ in 0..count {
                    primitives.push(r.primitive(record, id)?);
                    record += 1;
                }
                scene.static_nodes.push(StaticNode { id, label, primitives });
            }
            KIND_RIGID => {
                let canonical_box = match r.u8("has_box")? {
                    0 => None,
                    1 => {
                        let center = r.vec3("box center")?;
                        let size = r.vec3("box size")?;
                        let yaw = r.f32("box yaw")?;
                        Some(Box3D::new(center, size, yaw, label.clone()))
                    }
                    v => return Err(r.err(format!("node {id}: has_box must be 0 or 1, got {v}"))),
                };
                let transform_count = r.u32("transform_count")?;
                let mut transforms = BTreeMap::new();
                for _ in 0..transform_count {
                    let t = r.u32("transform timestep")?;
                    let mut m = [0.0; 9];
                    for v in &mut m {
                        *v = r.f32("transform rotation")?;
                    }
                    let rot = Matrix3::from_row_slice(&m);
                    let trans = r.vec3("transform translation")?;
                    let tf = RigidTransform::new(rot, trans)
                        .map_err(|e| r.err(format!("node {id} timestep {t}: {e}")))?;
                    if transforms.insert(t, tf).is_some() {
                        return Err(r.err(format!("node {id}: duplicate pose for timestep {t}")));
                    }
                }
                let mut primitives = Vec::with_capacity(count.min(bytes.len() / 53));
                for _ in 0..count {
                    primitives.push(r.primitive(record, id)?);
                    record += 1;
                }
                scene.rigid_nodes.push(RigidNode {
                    id,
                    label,
                    primitives,
                    transforms,
                    canonical_box,
                });
            }
            KIND_MORPHABLE => {
                return Err(r.err(format!("node {id}: morphable nodes have no defined payload")));
            }
            k => return Err(r.err(format!("node {ni}: unknown node kind {k}"))),
        }
    }
    if r.pos != bytes.len() {
        return Err(r.err(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    scene.validate().map_err(|e| Error::schema(path, e.to_string()))?;
    Ok(scene)
}

pub fn read_scene(path: &Path) -> Result<SceneGraph> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn write_scene(scene: &SceneGraph, path: &Path) -> Result<()> {
    let bytes = encode(scene)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
