//! Predimension constructions on finite graphs: closures, amalgamation classes,
//! generic approximations, independence testing and measure certificates.

pub mod acl;
pub mod amalgam;
pub mod class;
pub mod error;
mod flow;
pub mod formula;
pub mod graph;
pub mod inconsistency;
pub mod independence;
pub mod measure;
pub mod predim;
pub mod search;
pub mod symmetry;
pub mod verify;
