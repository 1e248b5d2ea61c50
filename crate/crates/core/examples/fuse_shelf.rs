//! Fuse a recorded aisle frame. One product has a marker and a detection,
//! one only a marker, one only a detection, and a low-confidence detection
//! gets dropped.

use arshopping::{fuse_frame, FusionConfig, SceneFrame};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/aisle/frame-001.json");
    let frame: SceneFrame = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    println!(
        "frame {}: {} markers, {} detections",
        frame.frame_id,
        frame.markers.len(),
        frame.objects.len()
    );

    for p in fuse_frame(&frame, &FusionConfig::default())? {
        let pos = p.pose.position;
        println!(
            "{:<14} {:<12} at ({:+.3}, {:+.3}, {:.3}) m, {:.3} x {:.3} m",
            p.product_id,
            format!("{:?}", p.provenance),
            pos.x,
            pos.y,
            pos.z,
            p.pose.size.width,
            p.pose.size.height
        );
    }

    // Requiring near-certain detections turns the fused product into a
    // marker-only one and drops the detection-only product.
    let strict = FusionConfig {
        min_confidence: 0.99,
        ..FusionConfig::default()
    };
    let ids: Vec<_> = fuse_frame(&frame, &strict)?
        .into_iter()
        .map(|p| format!("{}:{:?}", p.product_id, p.provenance))
        .collect();
    println!("min_confidence 0.99: {ids:?}");
    Ok(())
}
