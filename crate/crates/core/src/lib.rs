//! Deterministic generation of simulated indoor scans, spatial
//! question-answer datasets and scene-cognition artifacts from declarative
//! room layouts.
//!
//! The crate is organised as a pipeline:
//!
//! * [`geometry`]: vectors, rotations, rigid transforms, boxes and polygons.
//! * [`scene`]: scene files, room disassembly and filtering.
//! * [`trajectory`]: orbit and navigation camera scans with visibility.
//! * [`cognition`]: local and global object maps, grids and descriptions.
//! * [`qa`] and [`templates`]: question generation with exact answers.
//! * [`prompts`]: question classification, reasoning plans and prompts.
//! * [`evaluation`]: scoring predictions against gold answers.
//! * [`pipeline`]: all of the above over a set of scene files.

pub mod cognition;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod prompts;
pub mod qa;
pub mod scene;
pub mod seed;
pub mod templates;
pub mod trajectory;

pub use geometry::{Aabb, Polygon2, RigidTransform, Rotation3, Vec3};
pub use scene::{parse_scene, ObjectInstance, Room, Scene};

// book chapters run as doctests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/scenes.md")]
    mod scenes {}
    #[doc = include_str!("../../../book/src/scanning.md")]
    mod scanning {}
    #[doc = include_str!("../../../book/src/cognition.md")]
    mod cognition {}
    #[doc = include_str!("../../../book/src/questions.md")]
    mod questions {}
    #[doc = include_str!("../../../book/src/prompts.md")]
    mod prompts {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
