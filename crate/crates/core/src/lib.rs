// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod numeric;
pub mod rates;
pub mod reflection;
pub mod stats;
pub mod stream;
pub mod vec2;

pub use error::{Error, Result};
pub use geometry::{BodySummary, BoundaryPoint, ConvexBody};
pub use reflection::{reflect, LawCertificate, ReflectionLaw};
pub use vec2::Vec2;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
