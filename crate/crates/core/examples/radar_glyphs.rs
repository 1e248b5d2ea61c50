//! Radar polygons: vertex k lies at radius * value along an axis that
//! starts at 12 o'clock and proceeds clockwise on screen.

use arshopping::layout::{axis_angle, radar_polygon};
use nalgebra::Point2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let values = [1.0, 0.5, 0.25, 0.75, 0.0];
    for k in 0..values.len() {
        println!("axis {k}: {:6.1} deg", axis_angle(k, values.len()).to_degrees());
    }

    // Glyph-local unit square, so center at (0.5, 0.5) with radius 0.5.
    let poly = radar_polygon(&values, 0.5)?.translated(Point2::new(0.5, 0.5));
    for (v, p) in values.iter().zip(&poly.vertices) {
        println!("value {v:.2} -> ({:.3}, {:.3})", p.x, p.y);
    }

    let path: Vec<String> = poly
        .vertices
        .iter()
        .map(|p| format!("{:.1},{:.1}", p.x * 100.0, p.y * 100.0))
        .collect();
    println!(
        "<svg viewBox=\"0 0 100 100\"><polygon points=\"{}\"/></svg>",
        path.join(" ")
    );

    if let Err(e) = radar_polygon(&[0.3, 0.6], 1.0) {
        println!("two axes: {e}");
    }
    Ok(())
}
