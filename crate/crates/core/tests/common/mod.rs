//! Fixture paths, scene generators and brute-force oracles shared by the
//! integration tests. The oracles recompute everything from raw formulas and
//! never call into the fusion code they check.
#![allow(dead_code)]

use std::path::PathBuf;

use arshopping::fusion::{FusionConfig, MarkerObservation, ObjectObservation};
use arshopping::geometry::{CameraIntrinsics, PixelSize, Rotation, ScreenPoint};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn catalog_path() -> PathBuf {
    fixtures_dir().join("catalog.json")
}

pub fn load_catalog() -> arshopping::Catalog {
    arshopping::Catalog::from_path(catalog_path()).expect("bundled catalog loads")
}

pub fn camera() -> CameraIntrinsics {
    CameraIntrinsics::centered(1000.0, 1280.0, 720.0)
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    // uniform-ish: normalize a random 4-vector
    loop {
        let q: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 0.1 {
            // keep the marker facing the camera-ish so poses stay in front
            let r = Rotation {
                w: q[0].abs() / n + 2.0,
                x: q[1] / n * 0.3,
                y: q[2] / n * 0.3,
                z: q[3] / n * 0.3,
            };
            let m = (r.w * r.w + r.x * r.x + r.y * r.y + r.z * r.z).sqrt();
            return Rotation {
                w: r.w / m,
                x: r.x / m,
                y: r.y / m,
                z: r.z / m,
            };
        }
    }
}

pub fn random_marker(rng: &mut impl Rng, product_id: &str) -> MarkerObservation {
    MarkerObservation {
        marker_id: format!("mk-{}", rng.gen::<u32>()),
        product_id: product_id.to_string(),
        screen_center: ScreenPoint::new(rng.gen_range(200.0..1080.0), rng.gen_range(150.0..570.0)),
        apparent_size_px: rng.gen_range(20.0..120.0),
        rotation: random_rotation(rng),
        physical_size_m: rng.gen_range(0.03..0.08),
    }
}

pub fn random_object(rng: &mut impl Rng, product_id: &str) -> ObjectObservation {
    ObjectObservation {
        product_id: product_id.to_string(),
        screen_center: ScreenPoint::new(rng.gen_range(0.0..1280.0), rng.gen_range(0.0..720.0)),
        bbox_size_px: PixelSize {
            width: rng.gen_range(10.0..300.0),
            height: rng.gen_range(10.0..300.0),
        },
        confidence: rng.gen_range(0.5..=1.0),
    }
}

/// A marker and up to 10 detections on a coarse pixel grid, so exact
/// distance ties and duplicate positions actually occur.
pub struct AssociationScene {
    pub marker: MarkerObservation,
    pub objects: Vec<ObjectObservation>,
    pub config: FusionConfig,
}

pub fn random_association_scene(rng: &mut impl Rng) -> AssociationScene {
    const IDS: [&str; 4] = ["p0", "p1", "p2", "p3"];
    let grid = |v: f64| (v / 20.0).round() * 20.0;
    let mx = grid(rng.gen_range(300.0..980.0));
    let my = grid(rng.gen_range(200.0..520.0));
    let marker = MarkerObservation {
        marker_id: "mk".into(),
        product_id: IDS.choose(rng).unwrap().to_string(),
        screen_center: ScreenPoint::new(mx, my),
        apparent_size_px: rng.gen_range(20.0..120.0),
        rotation: Rotation::IDENTITY,
        physical_size_m: rng.gen_range(0.03..0.08),
    };
    let n = rng.gen_range(0..=10);
    let mut objects: Vec<ObjectObservation> = Vec::with_capacity(n);
    for _ in 0..n {
        let center = if !objects.is_empty() && rng.gen_bool(0.2) {
            // same spot as an earlier detection
            objects[rng.gen_range(0..objects.len())].screen_center
        } else if rng.gen_bool(0.2) {
            // mirror-symmetric offsets around the marker tie on distance
            let dx = grid(rng.gen_range(0.0..300.0));
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            ScreenPoint::new(mx + sign * dx, my)
        } else {
            ScreenPoint::new(
                grid(mx + rng.gen_range(-400.0..400.0)),
                grid(my + rng.gen_range(-300.0..300.0)),
            )
        };
        objects.push(ObjectObservation {
            product_id: IDS.choose(rng).unwrap().to_string(),
            screen_center: center,
            bbox_size_px: PixelSize {
                width: 50.0,
                height: 80.0,
            },
            confidence: *[0.2, 0.49, 0.5, 0.7, 0.95].choose(rng).unwrap(),
        });
    }
    let config = FusionConfig {
        association_max_dist_m: rng.gen_range(0.05..0.6),
        allow_id_mismatch: rng.gen_bool(0.4),
        ..FusionConfig::default()
    };
    AssociationScene {
        marker,
        objects,
        config,
    }
}

/// Brute force: score every detection, keep the admissible ones, sort by
/// (distance, product id, screen x) and take the first. Returns its index.
pub fn associate_oracle(
    marker: &MarkerObservation,
    objects: &[ObjectObservation],
    k: &CameraIntrinsics,
    cfg: &FusionConfig,
) -> Option<usize> {
    let f = k.focal_length_px;
    let (cx, cy) = (k.principal_point.x, k.principal_point.y);
    let depth = f * marker.physical_size_m / marker.apparent_size_px;
    let lift = |p: &ScreenPoint| ((p.x - cx) * depth / f, (p.y - cy) * depth / f);
    let (mx, my) = lift(&marker.screen_center);

    let mut admissible: Vec<(f64, &str, f64, usize)> = objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.confidence >= cfg.min_confidence)
        .filter(|(_, o)| cfg.allow_id_mismatch || o.product_id == marker.product_id)
        .map(|(i, o)| {
            let (ox, oy) = lift(&o.screen_center);
            let (dx, dy) = (ox - mx, oy - my);
            ((dx * dx + dy * dy).sqrt(), o.product_id.as_str(), o.screen_center.x, i)
        })
        .filter(|(d, ..)| *d <= cfg.association_max_dist_m)
        .collect();
    admissible.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.partial_cmp(&b.2).unwrap())
            .then_with(|| a.3.cmp(&b.3))
    });
    admissible.first().map(|t| t.3)
}

/// Rotation matrix of a unit quaternion applied to `v`, written out by hand.
pub fn rotate_by_matrix(q: &Rotation, v: [f64; 3]) -> [f64; 3] {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let m = [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ];
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Checks `fuse_product` for one presence combination against the case
/// definitions, recomputing every expected field from raw formulas.
pub fn check_fusion_case(
    marker: Option<&MarkerObservation>,
    object: Option<&ObjectObservation>,
    k: &CameraIntrinsics,
    cfg: &FusionConfig,
) -> Result<(), String> {
    use arshopping::fusion::{fuse_product, Provenance};

    const TOL: f64 = 1e-12;
    let f = k.focal_length_px;
    let (cx, cy) = (k.principal_point.x, k.principal_point.y);
    let fused = fuse_product(marker, object, k, cfg).map_err(|e| e.to_string())?;
    let depth_of = |m: &MarkerObservation| f * m.physical_size_m / m.apparent_size_px;
    let lift = |p: &ScreenPoint, d: f64| [(p.x - cx) * d / f, (p.y - cy) * d / f, d];
    let same3 = |a: [f64; 3], b: &nalgebra::Point3<f64>| (0..3).all(|i| close(a[i], b[i], TOL));

    match (marker, object, fused) {
        (None, None, None) => Ok(()),
        (None, None, Some(p)) => Err(format!("absent case produced {:?}", p.provenance)),
        (_, _, None) => Err("present observation produced no product".into()),
        (Some(m), Some(o), Some(p)) => {
            let d = depth_of(m);
            let ok = p.provenance == Provenance::BothSources
                && p.product_id == m.product_id
                && same3(lift(&o.screen_center, d), &p.pose.position)
                && close(p.pose.size.width, o.bbox_size_px.width * d / f, TOL)
                && close(p.pose.size.height, o.bbox_size_px.height * d / f, TOL)
                && p.pose.rotation == m.rotation;
            ok.then_some(()).ok_or_else(|| format!("both-sources mismatch: {p:?}"))
        }
        (Some(m), None, Some(p)) => {
            let d = depth_of(m);
            let c = lift(&m.screen_center, d);
            let off = cfg.relative_offset * m.physical_size_m;
            let r = rotate_by_matrix(&m.rotation, [off.x, off.y, off.z]);
            let side = m.physical_size_m * cfg.product_to_marker_scale;
            let ok = p.provenance == Provenance::MarkerOnly
                && same3([c[0] + r[0], c[1] + r[1], c[2] + r[2]], &p.pose.position)
                && close(p.pose.size.width, side, TOL)
                && close(p.pose.size.height, side, TOL)
                && p.pose.rotation == m.rotation;
            ok.then_some(()).ok_or_else(|| format!("marker-only mismatch: {p:?}"))
        }
        (None, Some(o), Some(p)) => {
            let d = cfg.default_product_depth_m;
            let ok = p.provenance == Provenance::ObjectOnly
                && p.product_id == o.product_id
                && same3(lift(&o.screen_center, d), &p.pose.position)
                && close(p.pose.size.width, o.bbox_size_px.width * d / f, TOL)
                && close(p.pose.size.height, o.bbox_size_px.height * d / f, TOL)
                && p.pose.rotation == Rotation::IDENTITY;
            ok.then_some(()).ok_or_else(|| format!("object-only mismatch: {p:?}"))
        }
    }
}

/// Under both sources, the detection box drives size only and the marker
/// rotation drives orientation only.
pub fn check_field_provenance(
    marker: &MarkerObservation,
    object: &ObjectObservation,
    k: &CameraIntrinsics,
    cfg: &FusionConfig,
    rng: &mut impl Rng,
) -> Result<(), String> {
    use arshopping::fusion::fuse_product;

    let base = fuse_product(Some(marker), Some(object), k, cfg)
        .map_err(|e| e.to_string())?
        .unwrap();

    let mut bigger = object.clone();
    bigger.bbox_size_px.width += rng.gen_range(1.0..50.0);
    bigger.bbox_size_px.height += rng.gen_range(1.0..50.0);
    let p = fuse_product(Some(marker), Some(&bigger), k, cfg)
        .map_err(|e| e.to_string())?
        .unwrap();
    if p.pose.size == base.pose.size || p.pose.rotation != base.pose.rotation {
        return Err("bbox perturbation leaked into rotation or left size unchanged".into());
    }

    let mut turned = marker.clone();
    turned.rotation = loop {
        let r = random_rotation(rng);
        if r != marker.rotation {
            break r;
        }
    };
    let p = fuse_product(Some(&turned), Some(object), k, cfg)
        .map_err(|e| e.to_string())?
        .unwrap();
    if p.pose.rotation == base.pose.rotation || p.pose.size != base.pose.size {
        return Err("rotation perturbation leaked into size or left rotation unchanged".into());
    }
    Ok(())
}
