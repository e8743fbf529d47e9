//! Visual channel: orthographic view of the body through the transparent
//! sensor skin, shaded by distance to the sensor plane.

use crate::render::{ImageRgb, Rgb, VisualImage};
use crate::scalar::Real;

use super::body::RigidBody;
use super::episode::SensorGeometry;

/// Render the body as seen from below the sensor. Pixels covered by the body
/// take its color scaled by closeness (full brightness at contact); the rest
/// is background.
pub fn render_visual<R: Real>(
    body: Option<&RigidBody<R>>,
    geometry: &SensorGeometry<R>,
    background: Rgb<R>,
    far: R,
) -> VisualImage<R> {
    let mut img = ImageRgb::constant(geometry.width_px, geometry.height_px, background);
    let Some(body) = body else {
        return img;
    };
    for py in 0..geometry.height_px {
        for px in 0..geometry.width_px {
            let (x, y) = geometry.pixel_center(px, py);
            if let Some(t) = body.raycast_up(x, y) {
                let brightness = (R::one() - t.max(R::zero()) / far).max(R::zero()).min(R::one());
                img.set(px, py, [
                    body.color[0] * brightness,
                    body.color[1] * brightness,
                    body.color[2] * brightness,
                ]);
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Quat, Vec3};
    use crate::scene::body::{Pose, RigidBody, Shape};

    fn geometry() -> SensorGeometry<f64> {
        SensorGeometry { width_px: 32, height_px: 32, pitch: 2e-3, gel_thickness: 0.005 }
    }

    #[test]
    fn empty_scene_is_background() {
        let bg = [0.1, 0.2, 0.3];
        let img = render_visual::<f64>(None, &geometry(), bg, 0.1);
        assert!(img.pixels.iter().all(|&p| p == bg));
    }

    #[test]
    fn sphere_projects_to_disc() {
        let g = geometry();
        let r = 0.012;
        let body = RigidBody::new(
            Shape::Sphere { radius: r },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.03), orientation: Quat::identity() },
        );
        let img = render_visual(Some(&body), &g, [0.0; 3], 0.1);
        let covered = img.pixels.iter().filter(|&&p| p != [0.0; 3]).count();
        let expected = std::f64::consts::PI * (r / g.pitch) * (r / g.pitch);
        let radius_px = r / g.pitch;
        // disc pixel count within the ±1-pixel radius band
        let lo = std::f64::consts::PI * (radius_px - 1.0).powi(2);
        let hi = std::f64::consts::PI * (radius_px + 1.0).powi(2);
        assert!(covered as f64 >= lo && covered as f64 <= hi, "covered {covered}, expected ~{expected}");
    }

    #[test]
    fn touching_box_face_full_brightness() {
        let g = geometry();
        let body = RigidBody::new(
            Shape::Box { half_extents: Vec3::new(0.01, 0.01, 0.005) },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.005), orientation: Quat::identity() },
        );
        let img = render_visual(Some(&body), &g, [0.0; 3], 0.1);
        let center = img.at(16, 16);
        for ch in 0..3 {
            assert!((center[ch] - body.color[ch]).abs() < 1e-12);
        }
    }
}
