mod common;

use std::sync::Arc;

use arshopping::catalog::AxisValue;
use arshopping::session::{FeatureRange, FilterPredicate, SceneFrame, SessionConfig, SessionError, SessionService};
use common::*;
use proptest::prelude::*;

fn shelf_frame(n: u32) -> SceneFrame {
    let path = fixtures_dir().join("shelf").join(format!("frame-00{n}.json"));
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn service() -> SessionService {
    SessionService::new(Arc::new(load_catalog()))
}

fn protein_at_least(v: f64) -> FilterPredicate {
    FilterPredicate {
        ranges: [(
            "protein_g".to_string(),
            FeatureRange {
                min: Some(v),
                max: None,
            },
        )]
        .into(),
        ..FilterPredicate::default()
    }
}

#[test]
fn create_sessions() {
    let svc = service();
    let a = svc.create_default_session().unwrap();
    let b = svc.create_default_session().unwrap();
    assert_ne!(a, b);
    assert!(svc.favorites(&a).unwrap().is_empty());
    let overlay = svc.overlay(&a).unwrap();
    assert!(overlay.glyphs.is_empty() && overlay.glyphs_enabled);

    let two = SessionConfig {
        features: vec!["price".into(), "rating".into()],
        ..SessionConfig::default()
    };
    assert!(matches!(svc.create_session(two), Err(SessionError::Validation(_))));
}

#[test]
fn unknown_session_is_not_found() {
    let svc = service();
    for err in [
        svc.submit_frame("nope", shelf_frame(1)).unwrap_err(),
        svc.overlay("nope").unwrap_err(),
        svc.coupon_events("nope").unwrap_err(),
        svc.toggle_favorite("nope", "milk-001").unwrap_err(),
    ] {
        assert!(matches!(err, SessionError::NotFound { kind: "session", .. }), "{err}");
    }
}

#[test]
fn empty_frame_gives_empty_overlay() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    let mut f = shelf_frame(1);
    f.markers.clear();
    f.objects.clear();
    let overlay = svc.submit_frame(&s, f).unwrap();
    assert!(overlay.glyphs.is_empty());
    assert_eq!(overlay.frame_id.as_deref(), Some("shelf-001"));
}

#[test]
fn invalid_and_repeated_frames_are_rejected() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    let mut bad = shelf_frame(1);
    bad.intrinsics.focal_length_px = -1.0;
    assert!(matches!(svc.submit_frame(&s, bad), Err(SessionError::Validation(_))));
    // a rejected frame does not consume its id
    svc.submit_frame(&s, shelf_frame(1)).unwrap();
    assert!(matches!(
        svc.submit_frame(&s, shelf_frame(1)),
        Err(SessionError::Validation(_))
    ));
}

#[test]
fn shelf_frame_yields_three_fused_glyphs() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    let overlay = svc.submit_frame(&s, shelf_frame(1)).unwrap();
    assert_eq!(overlay.visible_ids(), ["milk-001", "milk-002", "milk-003"]);
    assert_eq!(overlay.products.len(), 3);
    for g in &overlay.glyphs {
        assert_eq!(g.provenance, arshopping::Provenance::BothSources);
        assert_eq!(g.polygon.axis_count, 4);
        assert!(g.screen_quad.is_some());
    }
}

#[test]
fn filter_examples() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    // no frame yet: empty overlay
    assert!(svc.set_filter(&s, protein_at_least(8.0)).unwrap().glyphs.is_empty());
    svc.submit_frame(&s, shelf_frame(1)).unwrap();

    let o = svc.overlay(&s).unwrap();
    assert_eq!(o.visible_ids(), ["milk-002", "milk-003"]);
    assert_eq!(o.filtered_out, ["milk-001"]);

    let all = svc.set_filter(&s, FilterPredicate::default()).unwrap();
    assert_eq!(all.visible_ids().len(), 3);
    assert!(all.filtered_out.is_empty());

    let none = FilterPredicate {
        ranges: [(
            "price".to_string(),
            FeatureRange {
                min: Some(100.0),
                max: Some(200.0),
            },
        )]
        .into(),
        ..FilterPredicate::default()
    };
    let o = svc.set_filter(&s, none).unwrap();
    assert!(o.visible_ids().is_empty());
    assert_eq!(o.filtered_out.len(), 3);

    let brand = FilterPredicate {
        brands: vec!["Fairlife".into()],
        ..FilterPredicate::default()
    };
    assert_eq!(svc.set_filter(&s, brand).unwrap().visible_ids(), ["milk-003"]);

    let inverted = FilterPredicate {
        ranges: [(
            "price".to_string(),
            FeatureRange {
                min: Some(3.0),
                max: Some(2.0),
            },
        )]
        .into(),
        ..FilterPredicate::default()
    };
    assert!(matches!(svc.set_filter(&s, inverted), Err(SessionError::Validation(_))));
}

#[test]
fn glyph_toggle_and_features() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    let before = svc.submit_frame(&s, shelf_frame(1)).unwrap();

    let off = svc.toggle_glyphs(&s, false).unwrap();
    assert!(off.glyphs.iter().all(|g| !g.spec.visible));
    assert_eq!(off.products, before.products);

    let on = svc.toggle_glyphs(&s, true).unwrap();
    assert_eq!(on, before);

    let four = ["calories", "protein_g", "fat_g", "calcium_pct"]
        .map(String::from)
        .to_vec();
    let o = svc.select_features(&s, four.clone()).unwrap();
    assert_eq!(o.features, four);
    assert!(o
        .glyphs
        .iter()
        .all(|g| g.polygon.axis_count == 4 && g.spec.axis_values.len() == 4));

    let five = ["calories", "protein_g", "fat_g", "calcium_pct", "fiber_g"]
        .map(String::from)
        .to_vec();
    let o = svc.select_features(&s, five).unwrap();
    // milks have no fiber: flagged missing, not dropped
    assert!(o.glyphs.iter().all(|g| g.spec.axis_values[4] == AxisValue::MISSING));

    assert!(matches!(
        svc.select_features(&s, vec!["price".into(), "rating".into()]),
        Err(SessionError::Validation(_))
    ));
}

#[test]
fn favorites_toggle() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    assert_eq!(svc.toggle_favorite(&s, "milk-002").unwrap(), ["milk-002"]);
    assert_eq!(svc.toggle_favorite(&s, "milk-001").unwrap(), ["milk-002", "milk-001"]);
    assert_eq!(
        svc.toggle_favorite(&s, "milk-003").unwrap(),
        ["milk-002", "milk-001", "milk-003"]
    );
    assert_eq!(svc.toggle_favorite(&s, "milk-001").unwrap(), ["milk-002", "milk-003"]);
    assert_eq!(
        svc.toggle_favorite(&s, "milk-001").unwrap(),
        ["milk-002", "milk-003", "milk-001"]
    );
    assert!(matches!(
        svc.toggle_favorite(&s, "no-such-product"),
        Err(SessionError::NotFound { kind: "product", .. })
    ));
}

#[test]
fn comparison_view() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    assert!(matches!(svc.comparison_view(&s), Err(SessionError::EmptyComparison)));

    svc.toggle_favorite(&s, "milk-003").unwrap();
    let one = svc.comparison_view(&s).unwrap();
    assert_eq!(one.entries.len(), 1);
    // rating is already a default axis, so it is not repeated
    assert_eq!(one.axes, ["price", "rating", "protein_g", "calories"]);
    // milk-003 is the priciest milk; price is lower-is-better
    assert_eq!(one.entries[0].axis_values[0].value, 0.0);
    assert_eq!(one.entries[0].raw_values[0].as_ref().unwrap().value, 4.99);

    svc.select_features(&s, ["protein_g", "fat_g", "calories"].map(String::from).to_vec())
        .unwrap();
    svc.toggle_favorite(&s, "milk-001").unwrap();
    let two = svc.comparison_view(&s).unwrap();
    assert_eq!(two.axes, ["protein_g", "fat_g", "calories", "rating"]);
    assert_eq!(two.entries.len(), 2);
    for e in &two.entries {
        assert_eq!(e.polygon.axis_count, 4);
        assert_eq!(e.axis_values.len(), two.axes.len());
    }
}

#[test]
fn comparison_shares_scales_with_overlay() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    let overlay = svc.submit_frame(&s, shelf_frame(1)).unwrap();
    for id in ["milk-001", "milk-003"] {
        svc.toggle_favorite(&s, id).unwrap();
    }
    let cmp = svc.comparison_view(&s).unwrap();
    for scale in &overlay.scales {
        assert!(cmp.scales.contains(scale), "{scale:?}");
    }
    for entry in &cmp.entries {
        let glyph = overlay
            .glyphs
            .iter()
            .find(|g| g.spec.product_id == entry.product_id)
            .unwrap();
        for (i, feature) in overlay.features.iter().enumerate() {
            let j = cmp.axes.iter().position(|a| a == feature).unwrap();
            assert_eq!(glyph.spec.axis_values[i], entry.axis_values[j]);
        }
    }
}

#[test]
fn coupon_events_are_deduplicated() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    assert!(svc.coupon_events(&s).unwrap().is_empty());

    svc.submit_frame(&s, shelf_frame(1)).unwrap();
    svc.submit_frame(&s, shelf_frame(2)).unwrap();
    let events = svc.coupon_events(&s).unwrap();
    // milk-002 is on sale; milk-003's coupon expired in April
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].product_id, "milk-002");
    assert_eq!(events[0].coupon.coupon_id, "cp-milk-002-may");
    assert_eq!(events[0].frame_id, "shelf-001");
    assert_eq!(events[0].sequence, 1);
    assert_eq!(events[0].session_id, s);

    // a separate session gets its own copy
    let other = svc.create_default_session().unwrap();
    svc.submit_frame(&other, shelf_frame(2)).unwrap();
    assert_eq!(svc.coupon_events(&other).unwrap()[0].frame_id, "shelf-002");
}

#[test]
fn filtered_out_products_push_no_coupon_until_shown() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    svc.set_filter(
        &s,
        FilterPredicate {
            brands: vec!["Fairlife".into()],
            ..Default::default()
        },
    )
    .unwrap();
    svc.submit_frame(&s, shelf_frame(1)).unwrap();
    assert!(svc.coupon_events(&s).unwrap().is_empty());
    svc.set_filter(&s, FilterPredicate::default()).unwrap();
    assert_eq!(svc.coupon_events(&s).unwrap().len(), 1);
}

#[test]
fn replayed_sessions_serialize_identically() {
    let run = || {
        let svc = service();
        let s = svc.create_default_session().unwrap();
        let mut out = Vec::new();
        for n in [1, 2] {
            out.push(serde_json::to_vec(&svc.submit_frame(&s, shelf_frame(n)).unwrap()).unwrap());
        }
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn snapshot_round_trip() {
    let svc = service();
    let s = svc.create_default_session().unwrap();
    svc.submit_frame(&s, shelf_frame(1)).unwrap();
    svc.toggle_favorite(&s, "milk-002").unwrap();
    svc.set_filter(&s, protein_at_least(8.0)).unwrap();
    let overlay = svc.overlay(&s).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.json");
    svc.save_snapshot(&s, &path).unwrap();

    let fresh = service();
    let restored = fresh.load_snapshot(&path).unwrap();
    assert_eq!(restored, s);
    assert_eq!(fresh.overlay(&s).unwrap(), overlay);
    assert_eq!(fresh.favorites(&s).unwrap(), ["milk-002"]);
    assert_eq!(fresh.coupon_events(&s).unwrap(), svc.coupon_events(&s).unwrap());
    // restored frame ids still block duplicates, and new ids do not collide
    assert!(fresh.submit_frame(&s, shelf_frame(1)).is_err());
    assert_ne!(fresh.create_default_session().unwrap(), s);
}

fn range_strategy() -> impl Strategy<Value = (String, f64, f64)> {
    (
        prop::sample::select(vec!["price", "rating", "protein_g", "calories", "fat_g"]),
        0.0f64..300.0,
        0.0f64..300.0,
    )
        .prop_map(|(f, a, b)| (f.to_string(), a.min(b), a.max(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tightening_never_grows_the_visible_set(
        ranges in prop::collection::vec(range_strategy(), 0..4),
        shrink in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 4),
    ) {
        let svc = service();
        let s = svc.create_default_session().unwrap();
        svc.submit_frame(&s, shelf_frame(2)).unwrap();

        let mut loose = FilterPredicate::default();
        for (f, lo, hi) in &ranges {
            loose.ranges.insert(f.clone(), FeatureRange { min: Some(*lo), max: Some(*hi) });
        }
        let mut tight = loose.clone();
        for ((_, r), (a, b)) in tight.ranges.iter_mut().zip(&shrink) {
            let (lo, hi) = (r.min.unwrap(), r.max.unwrap());
            let new_lo = lo + (hi - lo) * a * 0.5;
            let new_hi = hi - (hi - new_lo) * b * 0.5;
            *r = FeatureRange { min: Some(new_lo), max: Some(new_hi) };
        }
        let wide: Vec<String> = svc.set_filter(&s, loose).unwrap().visible_ids().iter().map(|s| s.to_string()).collect();
        let narrow = svc.set_filter(&s, tight).unwrap();
        for id in narrow.visible_ids() {
            prop_assert!(wide.iter().any(|w| w == id));
        }
        // every fused product is either shown or listed as filtered out
        prop_assert_eq!(narrow.glyphs.len() + narrow.filtered_out.len(), 3);
    }
}
