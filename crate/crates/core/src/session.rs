//! Shopping sessions: frames in, filtered glyph overlays out.
//!
//! A [`SessionService`] owns every live session over one shared catalog.
//! Sessions are independent; calls on the same session are serialized by a
//! per-session lock. Each overlay is a pure function of the catalog, the
//! session's settings and the last submitted frame.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use indexmap::IndexSet;
use nalgebra::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::broadcast;

use crate::catalog::{self, AxisValue, Catalog, Coupon, FeatureScale, ProductRecord};
use crate::fusion::{
    fuse_frame, FusedProduct, FusionConfig, FusionError, MarkerObservation, ObjectObservation, Provenance,
};
use crate::geometry::{CameraIntrinsics, ScreenPoint};
use crate::layout::{
    glyph_anchor, overlap_stats, radar_polygon, resolve_overlaps, GlyphSpec, LayoutConfig, LayoutError, OverlapStats,
    RadarPolygon,
};

/// Radar chart radius in glyph-local units; the chart fills the unit square.
const GLYPH_RADIUS: f64 = 0.5;
const EVENT_CHANNEL_CAPACITY: usize = 256;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{kind} `{id}` not found")]
    NotFound { kind: &'static str, id: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("favorites list is empty")]
    EmptyComparison,
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot format: {0}")]
    Snapshot(#[from] serde_json::Error),
}

impl SessionError {
    /// Stable machine-readable code used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::NotFound { .. } => "not_found",
            SessionError::Validation(_) => "validation_error",
            SessionError::EmptyComparison => "empty_comparison",
            SessionError::Fusion(_) => "fusion_error",
            SessionError::Layout(_) => "layout_error",
            SessionError::Io(_) | SessionError::Snapshot(_) => "internal",
        }
    }

    fn session(id: &str) -> Self {
        SessionError::NotFound {
            kind: "session",
            id: id.to_string(),
        }
    }
}

/// One camera observation with pre-decoded markers and detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFrame {
    pub frame_id: String,
    pub timestamp: DateTime<Utc>,
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub markers: Vec<MarkerObservation>,
    #[serde(default)]
    pub objects: Vec<ObjectObservation>,
    /// Backdrop image, relative to the fixture directory.
    #[serde(default)]
    pub image_ref: String,
}

impl SceneFrame {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.frame_id.is_empty() {
            out.push("frame_id is empty".to_string());
        }
        out.extend(
            self.intrinsics
                .problems()
                .into_iter()
                .map(|p| format!("intrinsics: {p}")),
        );
        for m in &self.markers {
            out.extend(m.problems());
        }
        for o in &self.objects {
            out.extend(o.problems());
        }
        out
    }

    pub fn product_ids(&self) -> BTreeSet<&str> {
        self.markers
            .iter()
            .map(|m| m.product_id.as_str())
            .chain(self.objects.iter().map(|o| o.product_id.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl FeatureRange {
    pub fn contains(&self, v: f64) -> bool {
        self.min.is_none_or(|lo| v >= lo) && self.max.is_none_or(|hi| v <= hi)
    }
}

/// Which products stay visible. The empty predicate passes everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterPredicate {
    /// Numeric bounds by feature name; products lacking a bounded feature fail.
    pub ranges: BTreeMap<String, FeatureRange>,
    /// Allowed brands; empty allows any.
    pub brands: Vec<String>,
    /// Allowed product types; empty allows any.
    pub product_types: Vec<String>,
}

impl FilterPredicate {
    pub fn validate(&self) -> Result<(), SessionError> {
        for (name, r) in &self.ranges {
            for bound in [r.min, r.max].into_iter().flatten() {
                if !bound.is_finite() {
                    return Err(SessionError::Validation(format!("range for `{name}` is not finite")));
                }
            }
            if let (Some(lo), Some(hi)) = (r.min, r.max) {
                if lo > hi {
                    return Err(SessionError::Validation(format!(
                        "range for `{name}` has min {lo} > max {hi}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn matches(&self, record: &ProductRecord) -> bool {
        (self.brands.is_empty() || self.brands.contains(&record.brand))
            && (self.product_types.is_empty() || self.product_types.contains(&record.product_type))
            && self
                .ranges
                .iter()
                .all(|(name, r)| record.feature_value(name).is_some_and(|v| r.contains(v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Initial radar axes.
    pub features: Vec<String>,
    pub fusion: FusionConfig,
    pub layout: LayoutConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            features: ["price", "rating", "protein_g", "calories"].map(String::from).to_vec(),
            fusion: FusionConfig::default(),
            layout: LayoutConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        check_features(&self.features)?;
        self.fusion.validate()?;
        self.layout.validate()?;
        Ok(())
    }
}

fn check_features(features: &[String]) -> Result<(), SessionError> {
    if features.len() < 3 {
        return Err(SessionError::Validation(format!(
            "a radar chart needs at least 3 features, got {}",
            features.len()
        )));
    }
    let mut seen = HashSet::new();
    for f in features {
        if f.is_empty() || !seen.insert(f) {
            return Err(SessionError::Validation(format!(
                "feature list has an empty or repeated entry `{f}`"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayGlyph {
    #[serde(flatten)]
    pub spec: GlyphSpec,
    pub provenance: Provenance,
    /// Corners of the effective quad on screen; `None` if one is behind the camera.
    pub screen_quad: Option<[ScreenPoint; 4]>,
    /// Radar chart in the glyph's unit square.
    pub polygon: RadarPolygon,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlayResult {
    pub frame_id: Option<String>,
    pub image_ref: Option<String>,
    pub intrinsics: Option<CameraIntrinsics>,
    pub glyphs_enabled: bool,
    pub features: Vec<String>,
    /// One glyph per fused product that passes the filter.
    pub glyphs: Vec<OverlayGlyph>,
    /// Catalog records of the products that pass the filter.
    pub products: Vec<ProductRecord>,
    pub filtered_out: Vec<String>,
    /// Fused product ids the catalog does not know.
    pub unresolved: Vec<String>,
    pub scales: Vec<FeatureScale>,
    pub overlap_before: OverlapStats,
    pub overlap_after: OverlapStats,
}

impl OverlayResult {
    pub fn visible_ids(&self) -> Vec<&str> {
        self.glyphs
            .iter()
            .filter(|g| g.spec.visible)
            .map(|g| g.spec.product_id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponEvent {
    /// Position in the session's event stream, starting at 1.
    pub sequence: u64,
    pub session_id: String,
    pub frame_id: String,
    pub product_id: String,
    pub coupon: Coupon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawValue {
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub product_id: String,
    pub name: String,
    pub brand: String,
    pub product_type: String,
    pub axis_values: Vec<AxisValue>,
    pub polygon: RadarPolygon,
    /// Unnormalized values per axis, for tooltips.
    pub raw_values: Vec<Option<RawValue>>,
}

/// Favorites superposed on one shared axis frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonView {
    pub axes: Vec<String>,
    pub scales: Vec<FeatureScale>,
    pub entries: Vec<ComparisonEntry>,
}

/// Serializable copy of one session, for persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub config: SessionConfig,
    pub filter: FilterPredicate,
    pub favorites: Vec<String>,
    pub glyphs_enabled: bool,
    pub selected_features: Vec<String>,
    pub last_frame: Option<SceneFrame>,
    pub frame_ids: Vec<String>,
    pub events: Vec<CouponEvent>,
}

struct Session {
    id: String,
    config: SessionConfig,
    filter: FilterPredicate,
    favorites: IndexSet<String>,
    glyphs_enabled: bool,
    selected_features: Vec<String>,
    last_frame: Option<SceneFrame>,
    last_overlay: OverlayResult,
    frame_ids: HashSet<String>,
    delivered_coupons: HashSet<String>,
    events: Vec<CouponEvent>,
    notify: broadcast::Sender<CouponEvent>,
}

impl Session {
    fn new(id: String, config: SessionConfig) -> Self {
        let (notify, _) = broadcast::channel(EVENT_CHANNEL_CAPACITY);
        let mut s = Self {
            id,
            selected_features: config.features.clone(),
            config,
            filter: FilterPredicate::default(),
            favorites: IndexSet::new(),
            glyphs_enabled: true,
            last_frame: None,
            last_overlay: OverlayResult::default(),
            frame_ids: HashSet::new(),
            delivered_coupons: HashSet::new(),
            events: Vec::new(),
            notify,
        };
        s.last_overlay = s.empty_overlay();
        s
    }

    fn empty_overlay(&self) -> OverlayResult {
        OverlayResult {
            glyphs_enabled: self.glyphs_enabled,
            features: self.selected_features.clone(),
            ..OverlayResult::default()
        }
    }

    fn refresh(&mut self, catalog: &Catalog) -> Result<OverlayResult, SessionError> {
        let Some(frame) = &self.last_frame else {
            self.last_overlay = self.empty_overlay();
            return Ok(self.last_overlay.clone());
        };
        let (overlay, passing) = build_overlay(
            catalog,
            frame,
            &self.config,
            &self.filter,
            &self.selected_features,
            self.glyphs_enabled,
        )?;
        let frame_id = frame.frame_id.clone();
        let now = frame.timestamp;
        for coupon in catalog.active_coupons(&passing, now) {
            if self.delivered_coupons.insert(coupon.coupon_id.clone()) {
                let event = CouponEvent {
                    sequence: self.events.len() as u64 + 1,
                    session_id: self.id.clone(),
                    frame_id: frame_id.clone(),
                    product_id: coupon.product_id.clone(),
                    coupon: coupon.clone(),
                };
                self.events.push(event.clone());
                // No subscribers is fine; the backlog keeps the event.
                let _ = self.notify.send(event);
            }
        }
        self.last_overlay = overlay;
        Ok(self.last_overlay.clone())
    }

    fn snapshot(&self) -> SessionSnapshot {
        let mut frame_ids: Vec<String> = self.frame_ids.iter().cloned().collect();
        frame_ids.sort();
        SessionSnapshot {
            session_id: self.id.clone(),
            config: self.config.clone(),
            filter: self.filter.clone(),
            favorites: self.favorites.iter().cloned().collect(),
            glyphs_enabled: self.glyphs_enabled,
            selected_features: self.selected_features.clone(),
            last_frame: self.last_frame.clone(),
            frame_ids,
            events: self.events.clone(),
        }
    }
}

/// Normalized radar axes for `record`; features with no scale for its type
/// come back as missing.
pub fn axis_values<S: AsRef<str>>(record: &ProductRecord, scales: &[FeatureScale], features: &[S]) -> Vec<AxisValue> {
    features
        .iter()
        .map(|f| match catalog::normalize(record, scales, std::slice::from_ref(f)) {
            Ok(v) => v[0],
            Err(_) => AxisValue::MISSING,
        })
        .collect()
}

/// Feature scales for every type in `types`, in type then feature order.
pub fn scales_for_types<'a, S: AsRef<str>>(
    catalog: &Catalog,
    types: impl IntoIterator<Item = &'a str>,
    features: &[S],
) -> Vec<FeatureScale> {
    let types: BTreeSet<&str> = types.into_iter().collect();
    types
        .into_iter()
        .flat_map(|t| catalog.feature_scales(t, features))
        .collect()
}

fn polygon_for(values: &[AxisValue]) -> Result<RadarPolygon, LayoutError> {
    let raw: Vec<f64> = values.iter().map(|v| v.value).collect();
    Ok(radar_polygon(&raw, GLYPH_RADIUS)?.translated(Point2::new(0.5, 0.5)))
}

/// Runs the full pipeline on one frame: fusion, catalog lookup, filter,
/// normalization, anchoring and overlap resolution. Also returns the ids of
/// products passing the filter.
pub fn build_overlay(
    catalog: &Catalog,
    frame: &SceneFrame,
    config: &SessionConfig,
    filter: &FilterPredicate,
    features: &[String],
    glyphs_enabled: bool,
) -> Result<(OverlayResult, Vec<String>), SessionError> {
    let fused = fuse_frame(frame, &config.fusion)?;
    let ids: Vec<&str> = fused.iter().map(|p| p.product_id.as_str()).collect();
    let lookup = catalog.query(&ids);

    let mut passing: Vec<(&FusedProduct, &ProductRecord)> = Vec::new();
    let mut filtered_out = Vec::new();
    let mut unresolved = Vec::new();
    for p in &fused {
        match catalog.get(&p.product_id) {
            None => unresolved.push(p.product_id.clone()),
            Some(r) if filter.matches(r) => passing.push((p, r)),
            Some(_) => filtered_out.push(p.product_id.clone()),
        }
    }
    debug_assert_eq!(unresolved, lookup.missing);

    let scales = scales_for_types(catalog, passing.iter().map(|(_, r)| r.product_type.as_str()), features);

    let k = &frame.intrinsics;
    let mut specs = Vec::with_capacity(passing.len());
    for (p, r) in &passing {
        let mut g = GlyphSpec::new(p.product_id.clone(), glyph_anchor(p), axis_values(r, &scales, features));
        g.visible = glyphs_enabled;
        specs.push(g);
    }
    let overlap_before = overlap_stats(&specs, k);
    let specs = resolve_overlaps(specs, k, config.layout.max_overlap_ratio);
    let overlap_after = overlap_stats(&specs, k);

    let mut glyphs = Vec::with_capacity(specs.len());
    for (spec, (p, _)) in specs.into_iter().zip(&passing) {
        glyphs.push(OverlayGlyph {
            screen_quad: spec.screen_quad(k),
            polygon: polygon_for(&spec.axis_values)?,
            provenance: p.provenance,
            spec,
        });
    }

    let overlay = OverlayResult {
        frame_id: Some(frame.frame_id.clone()),
        image_ref: Some(frame.image_ref.clone()),
        intrinsics: Some(*k),
        glyphs_enabled,
        features: features.to_vec(),
        glyphs,
        products: passing.iter().map(|(_, r)| (*r).clone()).collect(),
        filtered_out,
        unresolved,
        scales,
        overlap_before,
        overlap_after,
    };
    let passing_ids = passing.iter().map(|(p, _)| p.product_id.clone()).collect();
    Ok((overlay, passing_ids))
}

/// Owns all sessions over one catalog.
pub struct SessionService {
    catalog: Arc<Catalog>,
    defaults: SessionConfig,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionService {
    pub fn new(catalog: Arc<Catalog>) -> Self {
        Self::with_defaults(catalog, SessionConfig::default())
    }

    /// `defaults` is used by [`SessionService::create_default_session`].
    pub fn with_defaults(catalog: Arc<Catalog>, defaults: SessionConfig) -> Self {
        Self {
            catalog,
            defaults,
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn default_config(&self) -> &SessionConfig {
        &self.defaults
    }

    pub fn create_default_session(&self) -> Result<String, SessionError> {
        self.create_session(self.defaults.clone())
    }

    pub fn create_session(&self, config: SessionConfig) -> Result<String, SessionError> {
        config.validate()?;
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let session = Session::new(id.clone(), config);
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .keys()
            .cloned()
            .collect()
    }

    pub fn close_session(&self, session_id: &str) -> Result<(), SessionError> {
        self.sessions
            .write()
            .expect("session map poisoned")
            .remove(session_id)
            .map(|_| ())
            .ok_or_else(|| SessionError::session(session_id))
    }

    fn with_session<T>(
        &self,
        session_id: &str,
        f: impl FnOnce(&mut Session, &Catalog) -> Result<T, SessionError>,
    ) -> Result<T, SessionError> {
        let session = self
            .sessions
            .read()
            .expect("session map poisoned")
            .get(session_id)
            .cloned()
            .ok_or_else(|| SessionError::session(session_id))?;
        let mut guard = session.lock().expect("session poisoned");
        f(&mut guard, &self.catalog)
    }

    pub fn submit_frame(&self, session_id: &str, frame: SceneFrame) -> Result<OverlayResult, SessionError> {
        self.with_session(session_id, |s, catalog| {
            let problems = frame.problems();
            if !problems.is_empty() {
                return Err(SessionError::Validation(problems.join("; ")));
            }
            if s.frame_ids.contains(&frame.frame_id) {
                return Err(SessionError::Validation(format!(
                    "frame_id `{}` already submitted to this session",
                    frame.frame_id
                )));
            }
            let previous = s.last_frame.replace(frame);
            match s.refresh(catalog) {
                Ok(overlay) => {
                    let id = s.last_frame.as_ref().map(|f| f.frame_id.clone()).unwrap_or_default();
                    s.frame_ids.insert(id);
                    Ok(overlay)
                }
                Err(e) => {
                    s.last_frame = previous;
                    Err(e)
                }
            }
        })
    }

    pub fn overlay(&self, session_id: &str) -> Result<OverlayResult, SessionError> {
        self.with_session(session_id, |s, _| Ok(s.last_overlay.clone()))
    }

    pub fn set_filter(&self, session_id: &str, predicate: FilterPredicate) -> Result<OverlayResult, SessionError> {
        predicate.validate()?;
        self.with_session(session_id, |s, catalog| {
            s.filter = predicate;
            s.refresh(catalog)
        })
    }

    pub fn filter(&self, session_id: &str) -> Result<FilterPredicate, SessionError> {
        self.with_session(session_id, |s, _| Ok(s.filter.clone()))
    }

    pub fn toggle_glyphs(&self, session_id: &str, enabled: bool) -> Result<OverlayResult, SessionError> {
        self.with_session(session_id, |s, catalog| {
            s.glyphs_enabled = enabled;
            s.refresh(catalog)
        })
    }

    pub fn select_features(&self, session_id: &str, features: Vec<String>) -> Result<OverlayResult, SessionError> {
        check_features(&features)?;
        self.with_session(session_id, |s, catalog| {
            s.selected_features = features;
            s.refresh(catalog)
        })
    }

    /// Adds or removes `product_id`; remaining members keep their order.
    pub fn toggle_favorite(&self, session_id: &str, product_id: &str) -> Result<Vec<String>, SessionError> {
        self.with_session(session_id, |s, catalog| {
            if !catalog.contains(product_id) {
                return Err(SessionError::NotFound {
                    kind: "product",
                    id: product_id.to_string(),
                });
            }
            if !s.favorites.shift_remove(product_id) {
                s.favorites.insert(product_id.to_string());
            }
            Ok(s.favorites.iter().cloned().collect())
        })
    }

    pub fn favorites(&self, session_id: &str) -> Result<Vec<String>, SessionError> {
        self.with_session(session_id, |s, _| Ok(s.favorites.iter().cloned().collect()))
    }

    /// Favorites on one axis frame: the selected features plus rating.
    pub fn comparison_view(&self, session_id: &str) -> Result<ComparisonView, SessionError> {
        self.with_session(session_id, |s, catalog| {
            if s.favorites.is_empty() {
                return Err(SessionError::EmptyComparison);
            }
            let mut axes = s.selected_features.clone();
            if !axes.iter().any(|a| a == catalog::RATING) {
                axes.push(catalog::RATING.to_string());
            }
            let records: Vec<&ProductRecord> = s.favorites.iter().filter_map(|id| catalog.get(id)).collect();
            let scales = scales_for_types(catalog, records.iter().map(|r| r.product_type.as_str()), &axes);
            let entries = records
                .iter()
                .map(|r| {
                    let values = axis_values(r, &scales, &axes);
                    Ok(ComparisonEntry {
                        product_id: r.product_id.clone(),
                        name: r.name.clone(),
                        brand: r.brand.clone(),
                        product_type: r.product_type.clone(),
                        polygon: polygon_for(&values)?,
                        axis_values: values,
                        raw_values: axes
                            .iter()
                            .map(|a| {
                                r.feature(a).map(|v| RawValue {
                                    value: v.value,
                                    unit: v.unit,
                                })
                            })
                            .collect(),
                    })
                })
                .collect::<Result<Vec<_>, SessionError>>()?;
            Ok(ComparisonView { axes, scales, entries })
        })
    }

    /// Every coupon event delivered so far, in order.
    pub fn coupon_events(&self, session_id: &str) -> Result<Vec<CouponEvent>, SessionError> {
        self.coupon_events_since(session_id, 0)
    }

    /// Events with `sequence > after`.
    pub fn coupon_events_since(&self, session_id: &str, after: u64) -> Result<Vec<CouponEvent>, SessionError> {
        self.with_session(session_id, |s, _| {
            Ok(s.events.iter().filter(|e| e.sequence > after).cloned().collect())
        })
    }

    /// Backlog plus a receiver for later events, taken atomically so nothing
    /// falls between the two.
    pub fn subscribe_coupons(
        &self,
        session_id: &str,
    ) -> Result<(Vec<CouponEvent>, broadcast::Receiver<CouponEvent>), SessionError> {
        self.with_session(session_id, |s, _| Ok((s.events.clone(), s.notify.subscribe())))
    }

    pub fn snapshot(&self, session_id: &str) -> Result<SessionSnapshot, SessionError> {
        self.with_session(session_id, |s, _| Ok(s.snapshot()))
    }

    /// Recreates a session from a snapshot, replacing any session with the same id.
    pub fn restore(&self, snapshot: SessionSnapshot) -> Result<OverlayResult, SessionError> {
        snapshot.config.validate()?;
        check_features(&snapshot.selected_features)?;
        snapshot.filter.validate()?;
        let mut s = Session::new(snapshot.session_id.clone(), snapshot.config);
        s.filter = snapshot.filter;
        s.favorites = snapshot.favorites.into_iter().collect();
        s.glyphs_enabled = snapshot.glyphs_enabled;
        s.selected_features = snapshot.selected_features;
        s.frame_ids = snapshot.frame_ids.into_iter().collect();
        s.delivered_coupons = snapshot.events.iter().map(|e| e.coupon.coupon_id.clone()).collect();
        s.events = snapshot.events;
        s.last_frame = snapshot.last_frame;
        let overlay = s.refresh(&self.catalog)?;

        // Keep generated ids from colliding with restored ones.
        if let Some(n) = s.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
            self.next_id.fetch_max(n + 1, Ordering::Relaxed);
        }
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(s.id.clone(), Arc::new(Mutex::new(s)));
        Ok(overlay)
    }

    pub fn save_snapshot(&self, session_id: &str, path: impl AsRef<Path>) -> Result<(), SessionError> {
        let snap = self.snapshot(session_id)?;
        std::fs::write(path, serde_json::to_vec_pretty(&snap)?)?;
        Ok(())
    }

    pub fn load_snapshot(&self, path: impl AsRef<Path>) -> Result<String, SessionError> {
        let snap: SessionSnapshot = serde_json::from_slice(&std::fs::read(path)?)?;
        let id = snap.session_id.clone();
        self.restore(snap)?;
        Ok(id)
    }
}
