//! Small raster helpers for the prediction strips: line overlays for pose
//! axes (solid = ground truth, dashed = prediction) and strip composition.

use anyhow::Result;
use gelsim::render::ImageRgb;

pub type Img = ImageRgb<f64>;

pub fn draw_line(img: &mut Img, x0: f64, y0: f64, x1: f64, y1: f64, color: [f64; 3], dashed: bool) {
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        if dashed && (s / 3) % 2 == 1 {
            continue;
        }
        let t = s as f64 / steps as f64;
        let x = (x0 + (x1 - x0) * t).round() as isize;
        let y = (y0 + (y1 - y0) * t).round() as isize;
        if x >= 0 && y >= 0 && (x as usize) < img.width && (y as usize) < img.height {
            img.set(x as usize, y as usize, color);
        }
    }
}

/// Overlay the body frame's x/y axes at the pose's position. Positions are
/// in half-width-normalized units ([-1, 1] spans the sensor).
pub fn draw_pose_axes(img: &mut Img, pose: &[f64; 7], dashed: bool) {
    let (w, h) = (img.width as f64, img.height as f64);
    let cx = (pose[0] + 1.0) * 0.5 * w;
    let cy = (pose[1] + 1.0) * 0.5 * h;
    let (qw, qx, qy, qz) = (pose[3], pose[4], pose[5], pose[6]);
    // rotated basis vectors, xy-projection
    let ax = (1.0 - 2.0 * (qy * qy + qz * qz), 2.0 * (qx * qy + qw * qz));
    let ay = (2.0 * (qx * qy - qw * qz), 1.0 - 2.0 * (qx * qx + qz * qz));
    let len = w.min(h) * 0.25;
    draw_line(img, cx, cy, cx + ax.0 * len, cy + ax.1 * len, [1.0, 0.2, 0.2], dashed);
    draw_line(img, cx, cy, cx + ay.0 * len, cy + ay.1 * len, [0.2, 1.0, 0.2], dashed);
}

pub fn upscale_nearest(img: &Img, factor: usize) -> Img {
    let mut out = ImageRgb::constant(img.width * factor, img.height * factor, [0.0; 3]);
    for y in 0..out.height {
        for x in 0..out.width {
            out.set(x, y, img.at(x / factor, y / factor));
        }
    }
    out
}

/// Concatenate panels horizontally with a 1-pixel separator.
pub fn hstack(panels: &[Img], sep_color: [f64; 3]) -> Img {
    let h = panels.iter().map(|p| p.height).max().unwrap_or(1);
    let w: usize = panels.iter().map(|p| p.width).sum::<usize>() + panels.len().saturating_sub(1);
    let mut out = ImageRgb::constant(w, h, sep_color);
    let mut x_off = 0;
    for p in panels {
        for y in 0..p.height {
            for x in 0..p.width {
                out.set(x_off + x, y, p.at(x, y));
            }
        }
        x_off += p.width + 1;
    }
    out
}

pub fn save_png(img: &Img, path: &std::path::Path) -> Result<()> {
    let mut buf = image::RgbImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.at(x, y);
            let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            buf.put_pixel(x as u32, y as u32, image::Rgb([q(p[0]), q(p[1]), q(p[2])]));
        }
    }
    buf.save(path)?;
    Ok(())
}

/// Rebuild an image panel from a flattened channel-major sample vector.
pub fn panel_from_chw(data: &[f64], side_w: usize, side_h: usize) -> Img {
    ImageRgb::from_chw(side_w, side_h, data)
}
