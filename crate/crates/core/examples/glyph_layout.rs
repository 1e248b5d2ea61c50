//! Glyph anchoring and overlap resolution. Marker-only poses inflate glyphs
//! to the marker's size estimate, so neighbours collide; fused poses use the
//! detected box and stay apart.

use arshopping::layout::{glyph_anchor, overlap_stats, resolve_overlaps};
use arshopping::{fuse_frame, FusionConfig, GlyphSpec, LayoutConfig, SceneFrame};

fn load(set: &str) -> Result<SceneFrame, Box<dyn std::error::Error>> {
    let path = format!("{}/fixtures/{set}/frame-001.json", env!("CARGO_MANIFEST_DIR"));
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_ratio = LayoutConfig::default().max_overlap_ratio;
    for set in ["shelf_marker_only", "shelf"] {
        let frame = load(set)?;
        let k = &frame.intrinsics;
        let glyphs: Vec<GlyphSpec> = fuse_frame(&frame, &FusionConfig::default())?
            .iter()
            .map(|p| GlyphSpec::new(&p.product_id, glyph_anchor(p), vec![]))
            .collect();
        let before = overlap_stats(&glyphs, k);
        let resolved = resolve_overlaps(glyphs, k, max_ratio);
        let after = overlap_stats(&resolved, k);
        println!("{set}:");
        println!(
            "  overlap {:.1} px^2 -> {:.1} px^2, worst ratio {:.3} -> {:.3}",
            before.total_area_px, after.total_area_px, before.max_ratio, after.max_ratio
        );
        for g in &resolved {
            let r = g.screen_rect(k).expect("in front of camera");
            println!(
                "  {:<9} scale {:.3}  rect x {:.0}..{:.0} y {:.0}..{:.0}",
                g.product_id, g.scale_factor, r.min.x, r.max.x, r.min.y, r.max.y
            );
        }
    }
    Ok(())
}
