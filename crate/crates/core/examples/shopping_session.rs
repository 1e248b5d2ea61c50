//! A shopper's session: submit frames, filter by protein, hide glyphs,
//! favourite two milks, compare them, and collect coupon notifications.

use std::collections::BTreeMap;
use std::sync::Arc;

use arshopping::session::FeatureRange;
use arshopping::{Catalog, FilterPredicate, SceneFrame, SessionService};

fn frame(n: u32) -> Result<SceneFrame, Box<dyn std::error::Error>> {
    let path = format!("{}/fixtures/shelf/frame-00{n}.json", env!("CARGO_MANIFEST_DIR"));
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = Catalog::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/catalog.json"))?;
    let service = SessionService::new(Arc::new(catalog));
    let s = service.create_default_session()?;

    let overlay = service.submit_frame(&s, frame(1)?)?;
    println!("visible: {:?}", overlay.visible_ids());

    let protein = FilterPredicate {
        ranges: BTreeMap::from([(
            "protein_g".to_string(),
            FeatureRange {
                min: Some(8.0),
                max: None,
            },
        )]),
        ..FilterPredicate::default()
    };
    let overlay = service.set_filter(&s, protein)?;
    println!(
        "protein >= 8 g: {:?}, filtered out {:?}",
        overlay.visible_ids(),
        overlay.filtered_out
    );

    let hidden = service.toggle_glyphs(&s, false)?;
    println!(
        "glyphs off: {} visible, {} products listed",
        hidden.visible_ids().len(),
        hidden.products.len()
    );
    service.toggle_glyphs(&s, true)?;

    service.toggle_favorite(&s, "milk-002")?;
    let favorites = service.toggle_favorite(&s, "milk-003")?;
    println!("favorites: {favorites:?}");
    let view = service.comparison_view(&s)?;
    for e in &view.entries {
        let axes: Vec<String> = e.axis_values.iter().map(|v| format!("{:.2}", v.value)).collect();
        println!("  {:<9} {:?} -> [{}]", e.product_id, view.axes, axes.join(", "));
    }

    service.submit_frame(&s, frame(2)?)?;
    for ev in service.coupon_events(&s)? {
        println!(
            "coupon #{} on {}: {} ({})",
            ev.sequence, ev.frame_id, ev.coupon.description, ev.product_id
        );
    }
    Ok(())
}
