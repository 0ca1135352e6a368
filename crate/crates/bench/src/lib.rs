//! Fixtures shared by the benchmarks.

use gsaug_core::asset::AssetLibrary;
use gsaug_core::geometry::Box3D;
use gsaug_core::synthetic::{synthetic_library, synthetic_scene, SynthConfig, SynthScene};

pub struct Workload {
    pub synth: SynthScene,
    pub library: AssetLibrary,
    pub boxes: Vec<Box3D>,
}

impl Workload {
    pub fn new(cfg: &SynthConfig) -> Self {
        let synth = synthetic_scene(cfg).expect("synthetic scene");
        let library = AssetLibrary::new(synthetic_library(cfg).expect("assets")).expect("library");
        let boxes = synth.annotations[&0].iter().map(|a| a.to_box()).collect();
        Self { synth, library, boxes }
    }

    /// Six cameras, ten assets.
    pub fn default_scene() -> Self {
        Self::new(&SynthConfig::default())
    }

    pub fn small() -> Self {
        Self::new(&SynthConfig::small())
    }
}
