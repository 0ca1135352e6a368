//! Canonical-frame agent assets: loading, ICP alignment and box fitting.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{apply_rigid_transform, GaussianPrimitive, RigidTransform};
use crate::geometry::Box3D;
use crate::io::gspl;
use crate::scene::{RigidNode, SceneGraph};

/// Annotation categories an agent or a real box may carry.
pub const CATEGORIES: [&str; 10] = [
    "car",
    "truck",
    "bus",
    "trailer",
    "construction_vehicle",
    "pedestrian",
    "motorcycle",
    "bicycle",
    "traffic_cone",
    "barrier",
];

pub fn is_category(label: &str) -> bool {
    CATEGORIES.contains(&label)
}

/// Minimum fraction of primitive means a canonical box must contain.
pub const MIN_BOX_COVERAGE: f64 = 0.99;

/// Fraction trimmed from each tail of each axis when fitting a box. Six tails
/// of 1/600 drop at most 1% of the means.
pub const BOX_TAIL_TRIM: f64 = 1.0 / 600.0;

pub const ICP_MAX_ITERS: usize = 50;
pub const ICP_TOL: f64 = 1e-6;

/// An insertable object: primitives in its canonical frame (x forward, z up,
/// origin at the footprint center) and the box they annotate to.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub label: String,
    pub primitives: Vec<GaussianPrimitive>,
    pub canonical_box: Box3D,
}

impl Agent {
    /// Builds an agent, fitting the box when none is given, and checks the
    /// canonical-box invariants.
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        primitives: Vec<GaussianPrimitive>,
        canonical_box: Option<Box3D>,
    ) -> Result<Self> {
        let id = id.into();
        let label = label.into();
        if primitives.is_empty() {
            return Err(Error::EmptyAsset(id));
        }
        if !is_category(&label) {
            return Err(Error::Format(format!("asset {id}: unknown category {label:?}")));
        }
        for (i, p) in primitives.iter().enumerate() {
            p.validate(i)?;
        }
        let mut bbox = match canonical_box {
            Some(b) => b,
            None => fit_canonical_box(&primitives),
        };
        bbox.label = label.clone();
        if !bbox.is_valid() {
            return Err(Error::DegenerateBox(format!("asset {id}: size {:?}", bbox.size.as_slice())));
        }
        if bbox.yaw != 0.0 {
            return Err(Error::DegenerateBox(format!("asset {id}: canonical yaw {} is not 0", bbox.yaw)));
        }
        let coverage = box_coverage(&bbox, &primitives);
        if coverage < MIN_BOX_COVERAGE {
            return Err(Error::DegenerateBox(format!(
                "asset {id}: box contains {:.2}% of primitive means",
                100.0 * coverage
            )));
        }
        Ok(Self {
            id,
            label,
            primitives,
            canonical_box: bbox,
        })
    }

    pub fn means(&self) -> Vec<Vector3<f64>> {
        self.primitives.iter().map(|p| p.mean).collect()
    }

    /// The agent moved into a template's frame by ICP, with its box refitted.
    pub fn aligned_to(&self, template: &[Vector3<f64>]) -> Result<(Agent, IcpResult)> {
        let icp = icp_align(&self.means(), template, ICP_MAX_ITERS, ICP_TOL)?;
        let primitives = apply_rigid_transform(&self.primitives, &icp.transform)?;
        let agent = Agent::new(self.id.clone(), self.label.clone(), primitives, None)?;
        Ok((agent, icp))
    }

    /// Single-node scene holding this agent, as stored on disk.
    pub fn to_scene(&self) -> SceneGraph {
        let mut scene = SceneGraph::new(1);
        scene.rigid_nodes.push(RigidNode {
            id: 0,
            label: self.label.clone(),
            primitives: self.primitives.clone(),
            transforms: BTreeMap::new(),
            canonical_box: Some(self.canonical_box.clone()),
        });
        scene
    }
}

/// Fraction of primitive means inside the box (boundary inclusive).
pub fn box_coverage(bbox: &Box3D, primitives: &[GaussianPrimitive]) -> f64 {
    if primitives.is_empty() {
        return 1.0;
    }
    let inside = |p: &Vector3<f64>| {
        let d = p - bbox.center;
        let (s, c) = bbox.yaw.sin_cos();
        let along = c * d.x + s * d.y;
        let across = -s * d.x + c * d.y;
        along.abs() <= 0.5 * bbox.length() && across.abs() <= 0.5 * bbox.width() && d.z.abs() <= 0.5 * bbox.height()
    };
    primitives.iter().filter(|p| inside(&p.mean)).count() as f64 / primitives.len() as f64
}

/// Axis-aligned canonical box. Per axis the lower face is a low order
/// statistic of `mean - σ` and the upper face the matching high order
/// statistic of `mean + σ`, where σ is the primitive's marginal standard
/// deviation along that axis.
pub fn fit_canonical_box(primitives: &[GaussianPrimitive]) -> Box3D {
    let n = primitives.len();
    let k = (BOX_TAIL_TRIM * n.saturating_sub(1) as f64).floor() as usize;
    let covs: Vec<Matrix3<f64>> = primitives.iter().map(|p| p.covariance()).collect();
    let mut lo = Vector3::zeros();
    let mut hi = Vector3::zeros();
    for a in 0..3 {
        let mut lower: Vec<f64> = primitives
            .iter()
            .zip(&covs)
            .map(|(p, c)| p.mean[a] - c[(a, a)].sqrt())
            .collect();
        let mut upper: Vec<f64> = primitives
            .iter()
            .zip(&covs)
            .map(|(p, c)| p.mean[a] + c[(a, a)].sqrt())
            .collect();
        lower.sort_by(f64::total_cmp);
        upper.sort_by(f64::total_cmp);
        lo[a] = lower[k];
        hi[a] = upper[n - 1 - k];
    }
    // Box size is (width, length, height) with length along x.
    let size = Vector3::new(hi.y - lo.y, hi.x - lo.x, hi.z - lo.z);
    Box3D::new((lo + hi) * 0.5, size, 0.0, "")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Source-to-template transform.
    pub transform: RigidTransform,
    /// RMS nearest-neighbor distance under `transform`.
    pub rms: f64,
    /// RMS at the start of every iteration, then the final value; never
    /// increases.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn check_spread(points: &[Vector3<f64>], which: &str) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Alignment(format!("{which} has {} points, need 3", points.len())));
    }
    if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(Error::Alignment(format!("{which} has non-finite points")));
    }
    let c = centroid(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let mut ev: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    if !(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2] {
        return Err(Error::Alignment(format!("{which} is collinear or coincident")));
    }
    Ok(())
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

fn nearest(p: &Vector3<f64>, template: &[Vector3<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, q) in template.iter().enumerate() {
        let d = (q - p).norm_squared();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Least-squares rigid fit `dst ≈ R·src + t` by SVD, with the reflection
/// case folded into a proper rotation.
pub fn kabsch(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<RigidTransform> {
    let cs = centroid(src);
    let cd = centroid(dst);
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Alignment("SVD did not converge".into()));
    };
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    RigidTransform::new(r, cd - r * cs)
}

/// Point-to-point ICP from the identity. Each iteration matches every
/// transformed source point to its nearest template point and refits the
/// transform to those pairs; it stops when the RMS changes by less than
/// `tol`, after `max_iters` refits, or if a refit would raise the RMS.
pub fn icp_align(
    source: &[Vector3<f64>],
    template: &[Vector3<f64>],
    max_iters: usize,
    tol: f64,
) -> Result<IcpResult> {
    check_spread(source, "source")?;
    check_spread(template, "template")?;
    let rms_of = |t: &RigidTransform| -> (f64, Vec<Vector3<f64>>) {
        let mut sum = 0.0;
        let mut matched = Vec::with_capacity(source.len());
        for p in source {
            let (i, d) = nearest(&t.apply(p), template);
            sum += d;
            matched.push(template[i]);
        }
        ((sum / source.len() as f64).sqrt(), matched)
    };
    let mut transform = RigidTransform::identity();
    let (mut rms, mut matched) = rms_of(&transform);
    let mut history = vec![rms];
    let mut iterations = 0;
    while iterations < max_iters {
        let next = kabsch(source, &matched)?;
        let (next_rms, next_matched) = rms_of(&next);
        if next_rms > rms {
            break;
        }
        iterations += 1;
        let change = rms - next_rms;
        transform = next;
        rms = next_rms;
        matched = next_matched;
        history.push(rms);
        log::trace!("icp iteration {iterations}: rms {rms:.3e}");
        if change < tol {
            break;
        }
    }
    Ok(IcpResult {
        transform,
        rms,
        history,
        iterations,
    })
}

/// Reads an asset file: a scene with exactly one static or rigid node. The
/// node label is the category; a stored box is kept, otherwise one is fitted.
pub fn load_agent(path: &Path) -> Result<Agent> {
    let scene = gspl::read_scene(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let node_count = scene.static_nodes.len() + scene.rigid_nodes.len() + scene.morphable_nodes.len();
    if node_count != 1 {
        return Err(Error::schema(path, format!("asset must hold one node, found {node_count}")));
    }
    let agent = if let Some(n) = scene.static_nodes.into_iter().next() {
        Agent::new(id, n.label, n.primitives, None)
    } else {
        let n = scene.rigid_nodes.into_iter().next().expect("one node");
        Agent::new(id, n.label, n.primitives, n.canonical_box)
    };
    agent.map_err(|e| match e {
        Error::Io { .. } => e,
        Error::EmptyAsset(m) => Error::EmptyAsset(format!("{}: {m}", path.display())),
        other => Error::schema(path, other.to_string()),
    })
}

pub fn save_agent(agent: &Agent, path: &Path) -> Result<()> {
    gspl::write_scene(&agent.to_scene(), path)
}

/// Agents available for insertion, in a fixed order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssetLibrary {
    agents: Vec<Agent>,
}

impl AssetLibrary {
    pub fn new(agents: Vec<Agent>) -> Result<Self> {
        let mut ids = HashSet::new();
        for a in &agents {
            if !ids.insert(a.id.as_str()) {
                return Err(Error::Config(format!("duplicate asset id {:?}", a.id)));
            }
        }
        Ok(Self { agents })
    }

    /// Loads a manifest mapping category to asset files (paths relative to
    /// the manifest). Agent ids are `category/file-stem`; agents are ordered
    /// by category name then list order.
    pub fn load(manifest: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let entries: BTreeMap<String, Vec<PathBuf>> =
            serde_json::from_str(&text).map_err(|e| Error::schema(manifest, e.to_string()))?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut agents = Vec::new();
        for (category, files) in entries {
            if !is_category(&category) {
                return Err(Error::schema(manifest, format!("unknown category {category:?}")));
            }
            for file in files {
                let path = base.join(&file);
                let mut agent = load_agent(&path)?;
                if agent.label != category {
                    return Err(Error::schema(
                        &path,
                        format!("asset labelled {:?} listed under {category:?}", agent.label),
                    ));
                }
                agent.id = format!("{category}/{}", agent.id);
                agents.push(agent);
            }
        }
        Self::new(agents)
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Uniform choice over the library.
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> &Agent {
        &self.agents[rng.random_range(0..self.agents.len())]
    }

    /// Largest canonical (width, length) over the library.
    pub fn max_footprint(&self) -> (f64, f64) {
        self.agents.iter().fold((0.0, 0.0), |(w, l), a| {
            (w.max(a.canonical_box.width()), l.max(a.canonical_box.length()))
        })
    }
}
