//! Refinement of abstract multi-robot manipulation plans into collision-free,
//! asynchronous continuous trajectories.

pub mod geom;
pub mod scene;
pub mod task;
pub mod deadline;
pub mod placement;
pub mod rng;
pub mod drrt;
pub mod prm;
pub mod transit;
pub mod pipeline;
