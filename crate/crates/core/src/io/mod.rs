//! On-disk formats: binary Gaussian scenes, cameras, BEV road maps, bundles,
//! annotations and rendered images. See `FORMATS.md` at the repository root.

mod annotations;
mod bev;
mod bundle;
pub mod gspl;
mod image;

pub use annotations::{encode_annotations, read_annotations, write_annotations, AnnotationRecord, Source};
pub use bev::{decode_pgm, encode_pgm, read_bev_map, write_bev_map, BevSidecar};
pub use bundle::{load_scene, read_cameras, write_cameras, CameraRecord, LoadedScene, SceneBundle};
pub(crate) use bundle::write_json;
pub use gspl::{read_scene, write_scene};
pub use image::{decode_ppm, encode_image, encode_png, encode_ppm, quantize, to_rgb8, write_image, ImageFormat};
