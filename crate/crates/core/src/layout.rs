//! Glyph placement: anchor quads over product faces, overlap resolution in
//! screen space, and radar-chart polygons.

use std::f64::consts::PI;

use nalgebra::{Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::AxisValue;
use crate::fusion::FusedProduct;
use crate::geometry::{world_to_screen, CameraIntrinsics, ScreenPoint};

/// Per-step shrink applied to both members of the worst overlapping pair.
pub const SHRINK_FACTOR: f64 = 0.9;
/// Glyphs are never shrunk below this scale.
pub const MIN_SCALE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub max_overlap_ratio: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self { max_overlap_ratio: 0.1 }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if !(0.0..1.0).contains(&self.max_overlap_ratio) {
            return Err(LayoutError::InvalidArgument(format!(
                "max_overlap_ratio {} outside [0, 1)",
                self.max_overlap_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphSpec {
    pub product_id: String,
    /// Full-size quad, counter-clockwise from top-left as seen by the camera.
    pub anchor_quad: [Point3<f64>; 4],
    pub axis_values: Vec<AxisValue>,
    /// Shrink applied by overlap resolution, in `(0, 1]`.
    pub scale_factor: f64,
    pub visible: bool,
}

impl GlyphSpec {
    pub fn new(product_id: impl Into<String>, anchor_quad: [Point3<f64>; 4], axis_values: Vec<AxisValue>) -> Self {
        Self {
            product_id: product_id.into(),
            anchor_quad,
            axis_values,
            scale_factor: 1.0,
            visible: true,
        }
    }

    pub fn center(&self) -> Point3<f64> {
        quad_center(&self.anchor_quad)
    }

    /// The anchor quad shrunk about its center by `scale_factor`.
    pub fn effective_quad(&self) -> [Point3<f64>; 4] {
        let c = self.center();
        self.anchor_quad.map(|p| c + (p - c) * self.scale_factor)
    }

    pub fn screen_quad(&self, k: &CameraIntrinsics) -> Option<[ScreenPoint; 4]> {
        let q = self.effective_quad();
        Some([
            world_to_screen(&q[0], k).ok()?,
            world_to_screen(&q[1], k).ok()?,
            world_to_screen(&q[2], k).ok()?,
            world_to_screen(&q[3], k).ok()?,
        ])
    }

    /// Screen-space bounding rectangle of the effective quad, or `None` when
    /// a corner is behind the camera.
    pub fn screen_rect(&self, k: &CameraIntrinsics) -> Option<ScreenRect> {
        self.screen_quad(k).map(|q| ScreenRect::bounding(&q))
    }
}

fn quad_center(q: &[Point3<f64>; 4]) -> Point3<f64> {
    Point3::from((q[0].coords + q[1].coords + q[2].coords + q[3].coords) / 4.0)
}

/// Axis-aligned screen rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenRect {
    pub min: ScreenPoint,
    pub max: ScreenPoint,
}

impl ScreenRect {
    pub fn bounding(points: &[ScreenPoint]) -> Self {
        let mut r = ScreenRect {
            min: ScreenPoint::new(f64::INFINITY, f64::INFINITY),
            max: ScreenPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in points {
            r.min.x = r.min.x.min(p.x);
            r.min.y = r.min.y.min(p.y);
            r.max.x = r.max.x.max(p.x);
            r.max.y = r.max.y.max(p.y);
        }
        r
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x).max(0.0) * (self.max.y - self.min.y).max(0.0)
    }

    pub fn intersection_area(&self, other: &ScreenRect) -> f64 {
        let w = self.max.x.min(other.max.x) - self.min.x.max(other.min.x);
        let h = self.max.y.min(other.max.y) - self.min.y.max(other.min.y);
        w.max(0.0) * h.max(0.0)
    }

    /// Intersection area over the smaller rectangle's area.
    pub fn overlap_ratio(&self, other: &ScreenRect) -> f64 {
        let smaller = self.area().min(other.area());
        if smaller <= 0.0 {
            0.0
        } else {
            self.intersection_area(other) / smaller
        }
    }
}

/// Quad spanning the product face, tilted by the pose rotation.
pub fn glyph_anchor(product: &FusedProduct) -> [Point3<f64>; 4] {
    let pose = &product.pose;
    let (hw, hh) = (pose.size.width / 2.0, pose.size.height / 2.0);
    // Poses are validated at fusion time; fall back to camera-facing otherwise.
    let q = pose.rotation.to_unit().unwrap_or_default();
    [
        Vector3::new(-hw, -hh, 0.0),
        Vector3::new(-hw, hh, 0.0),
        Vector3::new(hw, hh, 0.0),
        Vector3::new(hw, -hh, 0.0),
    ]
    .map(|offset| pose.position + q * offset)
}

/// Pairwise overlap summary for a set of visible glyphs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub pairs: usize,
    pub total_area_px: f64,
    pub ratio_sum: f64,
    pub max_ratio: f64,
}

impl OverlapStats {
    pub fn mean_ratio(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.ratio_sum / self.pairs as f64
        }
    }
}

pub fn overlap_stats(glyphs: &[GlyphSpec], k: &CameraIntrinsics) -> OverlapStats {
    let rects: Vec<ScreenRect> = glyphs
        .iter()
        .filter(|g| g.visible)
        .filter_map(|g| g.screen_rect(k))
        .collect();
    let mut stats = OverlapStats::default();
    for (i, a) in rects.iter().enumerate() {
        for b in &rects[i + 1..] {
            let ratio = a.overlap_ratio(b);
            stats.pairs += 1;
            stats.total_area_px += a.intersection_area(b);
            stats.ratio_sum += ratio;
            stats.max_ratio = stats.max_ratio.max(ratio);
        }
    }
    stats
}

/// Shrinks visible glyphs in place until no pair's screen rectangles overlap
/// by more than `max_overlap_ratio` of the smaller one, or both members of
/// every offending pair hit [`MIN_SCALE`].
///
/// Each step shrinks the worst pair by [`SHRINK_FACTOR`]. Pairs are visited
/// in product-id order so ties resolve the same way every run. Hidden glyphs
/// and glyphs that cannot be projected take no part.
pub fn resolve_overlaps(glyphs: Vec<GlyphSpec>, k: &CameraIntrinsics, max_overlap_ratio: f64) -> Vec<GlyphSpec> {
    let mut glyphs = glyphs;
    let mut order: Vec<usize> = (0..glyphs.len())
        .filter(|&i| glyphs[i].visible && glyphs[i].screen_rect(k).is_some())
        .collect();
    order.sort_by(|&a, &b| glyphs[a].product_id.cmp(&glyphs[b].product_id).then(a.cmp(&b)));

    let at_floor = |s: f64| s <= MIN_SCALE;
    loop {
        let rects: Vec<ScreenRect> = order
            .iter()
            .map(|&i| glyphs[i].screen_rect(k).expect("projectable"))
            .collect();
        let mut worst: Option<(f64, usize, usize)> = None;
        for a in 0..order.len() {
            for b in a + 1..order.len() {
                let (ga, gb) = (order[a], order[b]);
                if at_floor(glyphs[ga].scale_factor) && at_floor(glyphs[gb].scale_factor) {
                    continue;
                }
                let ratio = rects[a].overlap_ratio(&rects[b]);
                if ratio > max_overlap_ratio && worst.is_none_or(|(w, _, _)| ratio > w) {
                    worst = Some((ratio, ga, gb));
                }
            }
        }
        let Some((_, ga, gb)) = worst else {
            break;
        };
        for g in [ga, gb] {
            let s = &mut glyphs[g].scale_factor;
            *s = (*s * SHRINK_FACTOR).max(MIN_SCALE);
        }
    }
    glyphs
}

/// Radar chart polygon in glyph-local coordinates (`+y` down).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarPolygon {
    pub center: Point2<f64>,
    pub vertices: Vec<Point2<f64>>,
    pub axis_count: usize,
}

impl RadarPolygon {
    pub fn translated(mut self, center: Point2<f64>) -> Self {
        let shift = center - self.center;
        self.center = center;
        for v in &mut self.vertices {
            *v += shift;
        }
        self
    }
}

/// Angle of radar axis `k` of `axis_count`; axis 0 points up.
pub fn axis_angle(k: usize, axis_count: usize) -> f64 {
    2.0 * PI * k as f64 / axis_count as f64 - PI / 2.0
}

/// Polygon centered on the origin whose vertex `k` sits `radius * values[k]`
/// out along axis `k`.
pub fn radar_polygon(values: &[f64], radius: f64) -> Result<RadarPolygon, LayoutError> {
    let n = values.len();
    if n < 3 {
        return Err(LayoutError::InvalidArgument(format!(
            "radar chart needs at least 3 axes, got {n}"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LayoutError::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let vertices = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let theta = axis_angle(k, n);
            let r = radius * v;
            Point2::new(r * theta.cos(), r * theta.sin())
        })
        .collect();
    Ok(RadarPolygon {
        center: Point2::origin(),
        vertices,
        axis_count: n,
    })
}
