//! Pinhole camera math: lift a pixel to 3D, project it back, and estimate
//! depth from a marker of known size.

use arshopping::geometry::{marker_depth, rotate_point, screen_to_world, world_to_screen};
use arshopping::{CameraIntrinsics, Rotation, ScreenPoint};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = CameraIntrinsics::centered(1000.0, 1280.0, 720.0);

    // A 5 cm marker that spans 40 px sits 1.25 m away.
    let depth = marker_depth(0.05, 40.0, &k)?;
    println!("marker depth: {depth:.3} m");

    let pixel = ScreenPoint::new(900.0, 200.0);
    let world = screen_to_world(pixel, depth, &k)?;
    let back = world_to_screen(&world, &k)?;
    println!(
        "pixel {pixel:?} -> world ({:.4}, {:.4}, {:.4}) -> pixel {back:?}",
        world.x, world.y, world.z
    );

    // A marker yawed 30 degrees carries its offset vector around with it.
    let yaw = Rotation::from_axis_angle(Vector3::y(), 30f64.to_radians());
    let offset = rotate_point(&yaw, &Vector3::new(0.0, 0.0, 0.1))?;
    println!(
        "offset (0, 0, 0.1) under 30 deg yaw: ({:.4}, {:.4}, {:.4})",
        offset.x, offset.y, offset.z
    );

    match screen_to_world(pixel, -1.0, &k) {
        Ok(_) => unreachable!(),
        Err(e) => println!("negative depth rejected: {e}"),
    }
    Ok(())
}
