//! Computational toolkit for graph products of groups.

#![allow(clippy::needless_range_loop)]

pub mod graph;
pub mod group;
pub mod word;
pub mod domain;
pub mod cayley;
pub mod hhs;
pub mod morse;

pub use graph::{GraphError, SimplicialGraph, Subgraph, Vertex};
pub use group::{GroupElement, GroupError, VertexGroup, VertexGroupSpec};
pub use word::{GraphProduct, NormalForm, Syllable, WordError};
pub use domain::{DomainError, DomainRelation, Nesting, ParallelismClass};
pub use cayley::{build_ball, BallOptions, CayleyError, DeltaReport, MetricBall, MetricKind};
pub use hhs::{AxiomReport, HhsError, HhsFile, HhsInstance, MaximizedInstance};
pub use morse::{MorseError, QgParams, RSchedule, StabilityThresholds, Verdict};
