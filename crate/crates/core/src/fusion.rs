//! Per-product fusion of fiducial-marker and object-detector observations.
//!
//! Each product falls into one of four cases depending on which detectors saw
//! it:
//!
//! | marker | object | result |
//! |--------|--------|--------|
//! | yes    | yes    | position and size from the detection, rotation from the marker ([`Provenance::BothSources`]) |
//! | yes    | no     | pose from the marker through a fixed offset and scale ([`Provenance::MarkerOnly`]) |
//! | no     | yes    | detection at a default depth, facing the camera ([`Provenance::ObjectOnly`]) |
//! | no     | no     | no product |

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    marker_depth, rotate_point, screen_to_world, CameraIntrinsics, GeometryError, MetricSize, PixelSize, Rotation,
    ScreenPoint, WorldPose,
};
use crate::session::SceneFrame;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("marker for {marker_product} cannot be fused with a detection of {object_product}")]
    ProductMismatch {
        marker_product: String,
        object_product: String,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// A decoded fiducial marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerObservation {
    pub marker_id: String,
    pub product_id: String,
    pub screen_center: ScreenPoint,
    pub apparent_size_px: f64,
    /// Orientation of the marker plane in the camera frame.
    pub rotation: Rotation,
    pub physical_size_m: f64,
}

impl MarkerObservation {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.screen_center.is_finite() {
            out.push(format!("marker {}: screen_center not finite", self.marker_id));
        }
        if !(self.apparent_size_px.is_finite() && self.apparent_size_px > 0.0) {
            out.push(format!(
                "marker {}: apparent_size_px must be positive, got {}",
                self.marker_id, self.apparent_size_px
            ));
        }
        if !(self.physical_size_m.is_finite() && self.physical_size_m > 0.0) {
            out.push(format!(
                "marker {}: physical_size_m must be positive, got {}",
                self.marker_id, self.physical_size_m
            ));
        }
        if !self.rotation.is_unit() {
            out.push(format!(
                "marker {}: rotation norm {} is not 1",
                self.marker_id,
                self.rotation.norm()
            ));
        }
        out
    }
}

/// One object-detector hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectObservation {
    pub product_id: String,
    pub screen_center: ScreenPoint,
    pub bbox_size_px: PixelSize,
    pub confidence: f64,
}

impl ObjectObservation {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.screen_center.is_finite() {
            out.push(format!("object {}: screen_center not finite", self.product_id));
        }
        let PixelSize { width, height } = self.bbox_size_px;
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            out.push(format!(
                "object {}: bbox_size_px must be positive, got {width} x {height}",
                self.product_id
            ));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            out.push(format!(
                "object {}: confidence {} outside [0, 1]",
                self.product_id, self.confidence
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    BothSources,
    MarkerOnly,
    ObjectOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedProduct {
    pub product_id: String,
    pub pose: WorldPose,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Product center relative to the marker center, in the marker frame, in
    /// units of the marker's physical side length. `-y` is up.
    pub relative_offset: Vector3<f64>,
    /// Product face side length divided by marker side length.
    pub product_to_marker_scale: f64,
    pub association_max_dist_m: f64,
    pub min_confidence: f64,
    /// Depth assumed for products seen only by the object detector.
    pub default_product_depth_m: f64,
    /// Let a marker claim the nearest detection even when the decoded
    /// product ids disagree.
    pub allow_id_mismatch: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            relative_offset: Vector3::new(0.0, -1.0, 0.0),
            product_to_marker_scale: 4.0,
            association_max_dist_m: 0.5,
            min_confidence: 0.5,
            default_product_depth_m: 1.0,
            allow_id_mismatch: false,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        let positive = [
            ("product_to_marker_scale", self.product_to_marker_scale),
            ("association_max_dist_m", self.association_max_dist_m),
            ("default_product_depth_m", self.default_product_depth_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(FusionError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(FusionError::InvalidConfig(format!(
                "min_confidence {} outside [0, 1]",
                self.min_confidence
            )));
        }
        if !self.relative_offset.iter().all(|c| c.is_finite()) {
            return Err(FusionError::InvalidConfig("relative_offset must be finite".into()));
        }
        Ok(())
    }
}

/// Finds the detection belonging to `marker`.
///
/// Candidates must pass the confidence gate, agree on product id (unless
/// `allow_id_mismatch`), and lie within `association_max_dist_m` of the
/// marker once lifted to the marker's depth. The nearest wins; exact ties go
/// to the smaller product id, then the smaller screen x.
pub fn associate<'a>(
    marker: &MarkerObservation,
    objects: &'a [ObjectObservation],
    k: &CameraIntrinsics,
    cfg: &FusionConfig,
) -> Result<Option<&'a ObjectObservation>, FusionError> {
    Ok(associate_among(marker, objects.iter().enumerate(), k, cfg)?.map(|i| &objects[i]))
}

fn associate_among<'a>(
    marker: &MarkerObservation,
    candidates: impl Iterator<Item = (usize, &'a ObjectObservation)>,
    k: &CameraIntrinsics,
    cfg: &FusionConfig,
) -> Result<Option<usize>, FusionError> {
    let depth = marker_depth(marker.physical_size_m, marker.apparent_size_px, k)?;
    let marker_center = screen_to_world(marker.screen_center, depth, k)?;

    let mut best: Option<(f64, usize, &ObjectObservation)> = None;
    for (idx, obj) in candidates {
        if obj.confidence < cfg.min_confidence {
            continue;
        }
        if !cfg.allow_id_mismatch && obj.product_id != marker.product_id {
            continue;
        }
        let dist = (screen_to_world(obj.screen_center, depth, k)? - marker_center).norm();
        if dist.is_nan() || dist > cfg.association_max_dist_m {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bd, _, bo)) => {
                dist.total_cmp(bd)
                    .then_with(|| obj.product_id.cmp(&bo.product_id))
                    .then_with(|| obj.screen_center.x.total_cmp(&bo.screen_center.x))
                    == Ordering::Less
            }
        };
        if better {
            best = Some((dist, idx, obj));
        }
    }
    Ok(best.map(|(_, idx, _)| idx))
}

/// Resolves one product's pose from whichever observations exist.
pub fn fuse_product(
    marker: Option<&MarkerObservation>,
    object: Option<&ObjectObservation>,
    k: &CameraIntrinsics,
    cfg: &FusionConfig,
) -> Result<Option<FusedProduct>, FusionError> {
    let f = k.focal_length_px;
    let back_project = |px: PixelSize, depth: f64| MetricSize {
        width: px.width * depth / f,
        height: px.height * depth / f,
    };

    let fused = match (marker, object) {
        (None, None) => return Ok(None),
        (Some(m), Some(o)) => {
            if !cfg.allow_id_mismatch && m.product_id != o.product_id {
                return Err(FusionError::ProductMismatch {
                    marker_product: m.product_id.clone(),
                    object_product: o.product_id.clone(),
                });
            }
            let depth = marker_depth(m.physical_size_m, m.apparent_size_px, k)?;
            FusedProduct {
                product_id: m.product_id.clone(),
                pose: WorldPose {
                    position: screen_to_world(o.screen_center, depth, k)?,
                    rotation: m.rotation,
                    size: back_project(o.bbox_size_px, depth),
                },
                provenance: Provenance::BothSources,
            }
        }
        (Some(m), None) => {
            let depth = marker_depth(m.physical_size_m, m.apparent_size_px, k)?;
            let center = screen_to_world(m.screen_center, depth, k)?;
            let offset = rotate_point(&m.rotation, &(cfg.relative_offset * m.physical_size_m))?;
            FusedProduct {
                product_id: m.product_id.clone(),
                pose: WorldPose {
                    position: center + offset,
                    rotation: m.rotation,
                    size: MetricSize::square(m.physical_size_m * cfg.product_to_marker_scale),
                },
                provenance: Provenance::MarkerOnly,
            }
        }
        (None, Some(o)) => {
            let depth = cfg.default_product_depth_m;
            FusedProduct {
                product_id: o.product_id.clone(),
                pose: WorldPose {
                    position: screen_to_world(o.screen_center, depth, k)?,
                    rotation: Rotation::IDENTITY,
                    size: back_project(o.bbox_size_px, depth),
                },
                provenance: Provenance::ObjectOnly,
            }
        }
    };
    fused.pose.validate()?;
    Ok(Some(fused))
}

/// Fuses every product visible in `frame`; output is sorted by product id.
pub fn fuse_frame(frame: &SceneFrame, cfg: &FusionConfig) -> Result<Vec<FusedProduct>, FusionError> {
    let k = &frame.intrinsics;
    k.validate()?;

    // One marker per product: the largest apparent one.
    let mut markers: BTreeMap<&str, &MarkerObservation> = BTreeMap::new();
    for m in &frame.markers {
        markers
            .entry(m.product_id.as_str())
            .and_modify(|kept| {
                let larger = m
                    .apparent_size_px
                    .total_cmp(&kept.apparent_size_px)
                    .then_with(|| kept.marker_id.cmp(&m.marker_id));
                if larger == Ordering::Greater {
                    *kept = m;
                }
            })
            .or_insert(m);
    }

    let mut claimed: HashSet<usize> = HashSet::new();
    let mut out: BTreeMap<String, FusedProduct> = BTreeMap::new();
    for m in markers.values() {
        let unclaimed = frame.objects.iter().enumerate().filter(|(i, _)| !claimed.contains(i));
        let hit = associate_among(m, unclaimed, k, cfg)?;
        if let Some(i) = hit {
            claimed.insert(i);
        }
        if let Some(p) = fuse_product(Some(m), hit.map(|i| &frame.objects[i]), k, cfg)? {
            out.insert(p.product_id.clone(), p);
        }
    }

    // Unclaimed detections of products no marker accounted for; the most
    // confident detection per product wins.
    let mut leftovers: BTreeMap<&str, &ObjectObservation> = BTreeMap::new();
    for (i, o) in frame.objects.iter().enumerate() {
        if claimed.contains(&i) || o.confidence < cfg.min_confidence || out.contains_key(&o.product_id) {
            continue;
        }
        leftovers
            .entry(o.product_id.as_str())
            .and_modify(|kept| {
                let area = |x: &ObjectObservation| x.bbox_size_px.width * x.bbox_size_px.height;
                let better = o
                    .confidence
                    .total_cmp(&kept.confidence)
                    .then_with(|| area(o).total_cmp(&area(kept)))
                    .then_with(|| kept.screen_center.x.total_cmp(&o.screen_center.x));
                if better == Ordering::Greater {
                    *kept = o;
                }
            })
            .or_insert(o);
    }
    for o in leftovers.values() {
        if let Some(p) = fuse_product(None, Some(o), k, cfg)? {
            out.insert(p.product_id.clone(), p);
        }
    }

    Ok(out.into_values().collect())
}
