//! Solderless PCB housings: board ingestion, cavity generation, bolt
//! planning, mesh output, rule checks and reuse tracking.

pub mod bolts;
pub mod cavity;
pub mod drc;
pub mod geom;
pub mod housing;
pub mod ingest;
pub mod mesh;
pub mod model;
pub mod reuse;
