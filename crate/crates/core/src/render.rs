//! Tactile image rendering: Phong reflectance per pixel over the surface
//! normal field, followed by a penetration-depth darkening mask.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::heightfield::{HeightMap, NormalField};
use crate::scalar::Real;

pub type Rgb<R> = [R; 3];

/// RGB image with channel values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb<R> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb<R>>,
}

impl<R: Real> ImageRgb<R> {
    pub fn constant(width: usize, height: usize, color: Rgb<R>) -> Self {
        Self { width, height, pixels: vec![color; width * height] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Rgb<R> {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: Rgb<R>) {
        self.pixels[y * self.width + x] = c;
    }

    /// Flattened channel-major layout `[3, H, W]`, the tensor layout used on disk.
    pub fn to_chw(&self) -> Vec<R> {
        let mut out = Vec::with_capacity(3 * self.pixels.len());
        for ch in 0..3 {
            out.extend(self.pixels.iter().map(|p| p[ch]));
        }
        out
    }

    pub fn from_chw(width: usize, height: usize, data: &[R]) -> Self {
        let n = width * height;
        assert_eq!(data.len(), 3 * n, "chw size mismatch");
        let pixels = (0..n).map(|i| [data[i], data[n + i], data[2 * n + i]]).collect();
        Self { width, height, pixels }
    }
}

pub type TactileImage<R> = ImageRgb<R>;
pub type VisualImage<R> = ImageRgb<R>;

/// Directional light with per-channel diffuse and specular intensities.
#[derive(Debug, Clone, Copy)]
pub struct LightSource<R> {
    /// Unit vector from the surface toward the light.
    pub direction: Vec3<R>,
    pub diffuse: Rgb<R>,
    pub specular: Rgb<R>,
}

#[derive(Debug, Clone)]
pub struct PhongParams<R> {
    pub k_ambient: R,
    pub k_diffuse: R,
    pub k_specular: R,
    pub shininess: R,
    pub ambient_intensity: Rgb<R>,
    /// Unit vector toward the camera.
    pub view_dir: Vec3<R>,
    pub lights: Vec<LightSource<R>>,
}

impl<R: Real> PhongParams<R> {
    /// Published reflectance constants with a three-light RGB rig at 120°
    /// azimuth spacing and 45° elevation.
    pub fn default_rig() -> Self {
        let elev = R::c(std::f64::consts::FRAC_PI_4);
        let mut lights = Vec::new();
        for (i, color) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
            let az = R::c(2.0 * std::f64::consts::PI * i as f64 / 3.0);
            let dir = Vec3::new(az.cos() * elev.cos(), az.sin() * elev.cos(), elev.sin());
            let rgb = [R::c(color[0]), R::c(color[1]), R::c(color[2])];
            lights.push(LightSource { direction: dir, diffuse: rgb, specular: rgb });
        }
        Self {
            k_ambient: R::c(0.8),
            k_diffuse: R::c(1.0),
            k_specular: R::c(0.5),
            shininess: R::c(5.0),
            ambient_intensity: [R::one(); 3],
            view_dir: Vec3::unit_z(),
            lights,
        }
    }
}

/// Depth-dependent attenuation applied after shading.
#[derive(Debug, Clone, Copy)]
pub struct DarkeningParams<R> {
    /// Maximum attenuation at full gel thickness, in [0, 1].
    pub d_max: R,
    pub gel_thickness: R,
}

impl<R: Real> DarkeningParams<R> {
    pub fn new(d_max: R, gel_thickness: R) -> Self {
        Self { d_max, gel_thickness }
    }

    /// mask(depth) = 1 − d_max·smoothstep(depth / gel_thickness)
    #[inline]
    pub fn mask(&self, depth: R) -> R {
        let t = (depth / self.gel_thickness).max(R::zero()).min(R::one());
        let s = t * t * (R::c(3.0) - R::two() * t);
        R::one() - self.d_max * s
    }
}

/// Mirror reflection of the light direction about the normal: 2(L·N)N − L.
#[inline]
pub fn reflect<R: Real>(light: Vec3<R>, normal: Vec3<R>) -> Vec3<R> {
    normal.scale(R::two() * light.dot(normal)) - light
}

/// Phong reflectance of one surface point, clamped to [0, 1] per channel.
pub fn phong_pixel<R: Real>(normal: Vec3<R>, params: &PhongParams<R>) -> Rgb<R> {
    let mut out = [
        params.k_ambient * params.ambient_intensity[0],
        params.k_ambient * params.ambient_intensity[1],
        params.k_ambient * params.ambient_intensity[2],
    ];
    for light in &params.lights {
        let diff = light.direction.dot(normal).max(R::zero());
        let spec_base = reflect(light.direction, normal).dot(params.view_dir).max(R::zero());
        let spec = spec_base.powf(params.shininess);
        for ch in 0..3 {
            out[ch] = out[ch] + params.k_diffuse * diff * light.diffuse[ch]
                + params.k_specular * spec * light.specular[ch];
        }
    }
    for v in &mut out {
        *v = v.max(R::zero()).min(R::one());
    }
    out
}

/// Render a tactile image: per-pixel Phong over the normal field, then the
/// darkening mask as a function of indentation depth.
pub fn render_tactile<R: Real>(
    h: &HeightMap<R>,
    normals: &NormalField<R>,
    params: &PhongParams<R>,
    darkening: &DarkeningParams<R>,
) -> Result<TactileImage<R>> {
    if h.width() != normals.width || h.height() != normals.height {
        return Err(Error::DimensionMismatch {
            left: format!("height map {}x{}", h.width(), h.height()),
            right: format!("normals {}x{}", normals.width, normals.height),
        });
    }
    let mut img = ImageRgb::constant(h.width(), h.height(), [R::zero(); 3]);
    for y in 0..h.height() {
        for x in 0..h.width() {
            let mut c = phong_pixel(normals.at(x, y), params);
            let m = darkening.mask(h.at(x, y));
            for ch in 0..3 {
                c[ch] = c[ch] * m;
            }
            img.set(x, y, c);
        }
    }
    Ok(img)
}
