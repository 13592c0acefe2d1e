//! Leadership inference for international scientific teams.
//!
//! The crate turns a publication corpus into per-region leadership metrics:
//! it filters bilateral collaborations ([`corpus`]), derives training labels
//! from contribution statements ([`roles`]), extracts author-history features
//! ([`features`]), fits and applies a linear lead model ([`leadmodel`]),
//! aggregates Lead Share and Lead Premium ([`metrics`]) and extrapolates
//! parity years ([`forecast`]). [`pipeline`] chains the stages with
//! content-hash caching, and [`synth`] writes seeded synthetic inputs.

pub mod corpus;
pub mod digest;
pub mod features;
pub mod forecast;
pub mod leadmodel;
pub mod metrics;
pub mod pipeline;
pub mod roles;
pub mod synth;

pub use corpus::{BilateralPair, BriClass, BriClassification, GlobalRegion, PublicationRecord, RegionMap, TopicMap};
