//! In-store augmented-reality shopping engine.
//!
//! The pipeline runs per camera frame:
//!
//! 1. [`fusion`] merges pre-decoded fiducial markers and object detections
//!    into one 3D pose per product, using the pinhole math in [`geometry`].
//! 2. [`catalog`] looks up each product and scales its features against
//!    every product of the same type.
//! 3. [`layout`] anchors a radar glyph over each product face and shrinks
//!    glyphs that crowd each other on screen.
//! 4. [`session`] ties it together with filters, favorites, a comparison
//!    view and coupon notifications. [`server`] exposes sessions over
//!    HTTP/JSON, and [`harness`] replays fixture directories in batch.
//!
//! See the `examples/` directory for one runnable program per stage.

pub mod catalog;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod layout;
pub mod server;
pub mod session;

pub use catalog::{Catalog, CatalogError, Coupon, FeatureScale, ProductRecord};
pub use fusion::{fuse_frame, fuse_product, FusedProduct, FusionConfig, Provenance};
pub use geometry::{CameraIntrinsics, Rotation, ScreenPoint, WorldPose};
pub use layout::{GlyphSpec, LayoutConfig, RadarPolygon};
pub use session::{FilterPredicate, OverlayResult, SceneFrame, SessionConfig, SessionError, SessionService};
