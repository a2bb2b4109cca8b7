//! Nested lattice codes for Wyner-Ziv coding.
//!
//! Lattice quantizers, nested-pair constructions, the coset encoder/decoder,
//! theta series and modular forms, and rate-distortion analysis.

pub mod codec;
pub mod decode;
pub mod enumerate;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod modular;
pub mod nesting;
pub mod normal;
pub mod qseries;
pub mod rd;
pub mod shells;
pub mod theta;
pub mod voronoi;

pub use error::{Error, Result};
pub use codec::WzIndex;
pub use harness::{simulate, Figure, SimConfig};
pub use lattice::{named, DecoderKind, Family, Lattice, LatticePoint, Similarity};
pub use nesting::{CosetTable, NestedPair};
pub use rd::{Method, NoiseModel, RDPoint};
