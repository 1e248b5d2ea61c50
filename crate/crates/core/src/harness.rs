//! Fixture sets, batch replay and validation.
//!
//! A fixture directory holds one `SceneFrame` JSON file per frame plus the
//! backdrop images they reference. Frames replay in file-name order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::fusion::{fuse_frame, Provenance};
use crate::session::{OverlayResult, SceneFrame, SessionConfig, SessionError, SessionService};

/// One problem found while checking fixtures, config or catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

impl Issue {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureFrame {
    /// File name within the fixture directory.
    pub name: String,
    pub frame: SceneFrame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSet {
    pub dir: PathBuf,
    pub frames: Vec<FixtureFrame>,
}

impl FixtureSet {
    /// Parses every `*.json` file in `dir`. Fails with every parse problem
    /// found, not just the first.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, Vec<Issue>> {
        let (set, issues) = Self::load_lenient(dir.as_ref());
        if issues.is_empty() {
            Ok(set)
        } else {
            Err(issues)
        }
    }

    fn load_lenient(dir: &Path) -> (Self, Vec<Issue>) {
        let mut set = FixtureSet {
            dir: dir.to_path_buf(),
            frames: Vec::new(),
        };
        let mut issues = Vec::new();
        let entries = match std::fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) => {
                issues.push(Issue::new(
                    dir.display().to_string(),
                    format!("cannot read directory: {e}"),
                ));
                return (set, issues);
            }
        };
        let mut names: Vec<String> = entries
            .filter_map(Result::ok)
            .filter(|e| e.path().is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| n.ends_with(".json"))
            .collect();
        names.sort();
        for name in names {
            let bytes = match std::fs::read(dir.join(&name)) {
                Ok(b) => b,
                Err(e) => {
                    issues.push(Issue::new(&name, format!("cannot read: {e}")));
                    continue;
                }
            };
            let mut de = serde_json::Deserializer::from_slice(&bytes);
            match serde_path_to_error::deserialize::<_, SceneFrame>(&mut de) {
                Ok(frame) => set.frames.push(FixtureFrame { name, frame }),
                Err(e) => {
                    let path = e.path().to_string();
                    issues.push(Issue::new(format!("{name} at {path}"), e.into_inner().to_string()));
                }
            }
        }
        (set, issues)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        let n = self.issues.len();
        write!(f, "{n} error{}", if n == 1 { "" } else { "s" })
    }
}

/// Checks a loaded fixture set against a catalog: frame invariants, unique
/// frame ids, product references and backdrop images.
pub fn check_fixtures(set: &FixtureSet, catalog: Option<&Catalog>) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut first_seen: HashMap<&str, &str> = HashMap::new();
    for FixtureFrame { name, frame } in &set.frames {
        let loc = format!("{name} (frame {})", frame.frame_id);
        for p in frame.problems() {
            issues.push(Issue::new(&loc, p));
        }
        if let Some(prev) = first_seen.insert(&frame.frame_id, name) {
            issues.push(Issue::new(
                &loc,
                format!("frame_id `{}` also used by {prev}", frame.frame_id),
            ));
        }
        if let Some(catalog) = catalog {
            for pid in frame.product_ids() {
                if !catalog.contains(pid) {
                    issues.push(Issue::new(&loc, format!("product_id `{pid}` not in catalog")));
                }
            }
        }
        if frame.image_ref.is_empty() {
            issues.push(Issue::new(&loc, "image_ref is empty"));
        } else if !set.dir.join(&frame.image_ref).is_file() {
            issues.push(Issue::new(&loc, format!("image `{}` not found", frame.image_ref)));
        }
    }
    issues
}

/// Exhaustive report for a fixture directory and catalog file; never stops
/// at the first problem.
pub fn validate(fixtures_dir: impl AsRef<Path>, catalog_path: impl AsRef<Path>) -> ValidationReport {
    let catalog_path = catalog_path.as_ref();
    let mut issues = Vec::new();
    let catalog = match Catalog::from_path(catalog_path) {
        Ok(c) => Some(c),
        Err(e) => {
            issues.push(Issue::new(catalog_path.display().to_string(), e.to_string()));
            None
        }
    };
    let (set, load_issues) = FixtureSet::load_lenient(fixtures_dir.as_ref());
    issues.extend(load_issues);
    issues.extend(check_fixtures(&set, catalog.as_ref()));
    ValidationReport { issues }
}

/// Per-run statistics written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub frames: usize,
    /// Distinct fused product ids over the run.
    pub products: usize,
    /// Fused products per case, summed over frames.
    pub case_counts: BTreeMap<Provenance, usize>,
    pub glyphs: usize,
    pub overlap_pairs: usize,
    pub mean_overlap_ratio_before: f64,
    pub mean_overlap_ratio_after: f64,
    pub total_overlap_area_before_px: f64,
    pub total_overlap_area_after_px: f64,
    pub coupon_events: usize,
}

impl Default for ReplaySummary {
    fn default() -> Self {
        Self {
            frames: 0,
            products: 0,
            case_counts: [Provenance::BothSources, Provenance::MarkerOnly, Provenance::ObjectOnly]
                .into_iter()
                .map(|p| (p, 0))
                .collect(),
            glyphs: 0,
            overlap_pairs: 0,
            mean_overlap_ratio_before: 0.0,
            mean_overlap_ratio_after: 0.0,
            total_overlap_area_before_px: 0.0,
            total_overlap_area_after_px: 0.0,
            coupon_events: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    /// `(fixture file stem, overlay)` in frame order.
    pub overlays: Vec<(String, OverlayResult)>,
    pub summary: ReplaySummary,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{} validation error(s)", .0.len())]
    Invalid(Vec<Issue>),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Replays `set` through a fresh session over `catalog`.
pub fn replay(set: &FixtureSet, catalog: Arc<Catalog>, config: SessionConfig) -> Result<ReplayOutput, ReplayError> {
    let fusion = config.fusion.clone();
    let service = SessionService::new(catalog);
    let session = service.create_session(config)?;

    let mut summary = ReplaySummary::default();
    let mut products = BTreeSet::new();
    let (mut ratio_before, mut ratio_after) = (0.0, 0.0);
    let mut overlays = Vec::with_capacity(set.frames.len());
    for FixtureFrame { name, frame } in &set.frames {
        for p in fuse_frame(frame, &fusion).map_err(SessionError::from)? {
            *summary.case_counts.entry(p.provenance).or_default() += 1;
            products.insert(p.product_id);
        }
        let overlay = service.submit_frame(&session, frame.clone())?;
        summary.frames += 1;
        summary.glyphs += overlay.glyphs.len();
        summary.overlap_pairs += overlay.overlap_before.pairs;
        ratio_before += overlay.overlap_before.ratio_sum;
        ratio_after += overlay.overlap_after.ratio_sum;
        summary.total_overlap_area_before_px += overlay.overlap_before.total_area_px;
        summary.total_overlap_area_after_px += overlay.overlap_after.total_area_px;
        let stem = name.strip_suffix(".json").unwrap_or(name).to_string();
        overlays.push((stem, overlay));
    }
    summary.products = products.len();
    if summary.overlap_pairs > 0 {
        summary.mean_overlap_ratio_before = ratio_before / summary.overlap_pairs as f64;
        summary.mean_overlap_ratio_after = ratio_after / summary.overlap_pairs as f64;
    }
    summary.coupon_events = service.coupon_events(&session)?.len();
    Ok(ReplayOutput { overlays, summary })
}

fn to_json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

/// Writes `frames/<stem>.json` per overlay and `summary.json` under `out_dir`.
pub fn write_replay(out_dir: impl AsRef<Path>, output: &ReplayOutput) -> std::io::Result<()> {
    let out_dir = out_dir.as_ref();
    let frames_dir = out_dir.join("frames");
    std::fs::create_dir_all(&frames_dir)?;
    for (stem, overlay) in &output.overlays {
        std::fs::write(frames_dir.join(format!("{stem}.json")), to_json_line(overlay))?;
    }
    std::fs::write(out_dir.join("summary.json"), to_json_line(&output.summary))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SessionConfig, Issue> {
    let path = path.as_ref();
    let loc = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| Issue::new(&loc, format!("cannot read: {e}")))?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    let config: SessionConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        Issue::new(format!("{loc} at {at}"), e.into_inner().to_string())
    })?;
    config.validate().map_err(|e| Issue::new(&loc, e.to_string()))?;
    Ok(config)
}

/// Validates, replays and writes outputs. Any validation problem aborts
/// before a single frame is processed.
pub fn run_replay(
    fixtures_dir: impl AsRef<Path>,
    catalog_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    config_path: Option<&Path>,
) -> Result<ReplaySummary, ReplayError> {
    let mut report = validate(fixtures_dir.as_ref(), catalog_path.as_ref());
    let config = match config_path.map(load_config).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(issue) => {
            report.issues.push(issue);
            SessionConfig::default()
        }
    };
    if !report.is_clean() {
        return Err(ReplayError::Invalid(report.issues));
    }
    let catalog = Catalog::from_path(catalog_path.as_ref()).map_err(|e| {
        ReplayError::Invalid(vec![Issue::new(
            catalog_path.as_ref().display().to_string(),
            e.to_string(),
        )])
    })?;
    let set = FixtureSet::load(fixtures_dir.as_ref()).map_err(ReplayError::Invalid)?;
    let output = replay(&set, Arc::new(catalog), config)?;
    write_replay(out_dir, &output)?;
    Ok(output.summary)
}
