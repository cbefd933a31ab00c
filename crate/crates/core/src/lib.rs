//! Marked rooted trees, neighborhood distributions, unimodular
//! Galton-Watson trees and colored configuration models, with the
//! conversions and counts that connect them.
//!
//! Marks are dense `u32` ids ([`Mark`]); labels are attached only at the
//! serialization boundary in [`io`]. Probability-valued code is generic
//! over [`Weight`], implemented for exact rationals and for `f64`.

mod canon;
pub mod colored;
pub mod convert;
pub mod dist;
pub mod error;
pub mod graph;
pub mod io;
pub mod marks;
pub mod metrics;
pub mod rng;
pub mod tree;
pub mod ugwt;
pub mod weight;

pub use colored::{ColoredDegreeSequence, DirectedColoredMultigraph, Multigraph};
pub use convert::{RealizationPlan, TypeTable};
pub use dist::{NeighborhoodDist, TypePair};
pub use error::{Error, Result};
pub use graph::{CanonicalRootedGraph, Edge, MarkedGraph};
pub use marks::{Alphabet, Mark, MarkRegistry};
pub use tree::{CanonicalTree, Child, HalfTree, LabeledTree};
pub use ugwt::{SampledTree, UgwtSampler};
pub use weight::{Mode, Rational, Weight};
