//! Phase rendering for figures.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{Context, Result};
use ccsc::ComplexImage;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};

/// HSV to RGB with full saturation; `hue` in `[0, 1)`.
fn hue_value_to_rgb(hue: f64, value: f64) -> [u8; 3] {
    let h = (hue.rem_euclid(1.0)) * 6.0;
    let sector = h.floor() as u32 % 6;
    let f = h - h.floor();
    let (v, q, t) = (value, value * (1.0 - f), value * f);
    let (r, g, b) = match sector {
        0 => (v, t, 0.0),
        1 => (q, v, 0.0),
        2 => (0.0, v, t),
        3 => (0.0, q, v),
        4 => (t, 0.0, v),
        _ => (v, 0.0, q),
    };
    let byte = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    [byte(r), byte(g), byte(b)]
}

/// RGB pixels: hue from phase (cyclic, so ±π meet), value from
/// `log(1 + |z|)` scaled by its maximum.
pub fn phase_rgb(img: &ComplexImage) -> Vec<u8> {
    let logs: Vec<f64> = img.as_slice().iter().map(|z| z.norm().ln_1p()).collect();
    let peak = logs.iter().cloned().fold(0.0, f64::max);
    img.as_slice()
        .iter()
        .zip(&logs)
        .flat_map(|(z, l)| {
            let value = if peak > 0.0 { l / peak } else { 0.0 };
            hue_value_to_rgb((z.arg() + PI) / (2.0 * PI), value)
        })
        .collect()
}

pub fn write_phase_png(path: &Path, img: &ComplexImage) -> Result<()> {
    let rgb = phase_rgb(img);
    let (w, h) = (u32::try_from(img.cols())?, u32::try_from(img.rows())?);
    ccsc::io::write_atomic(path, |out| {
        PngEncoder::new(out)
            .write_image(&rgb, w, h, ExtendedColorType::Rgb8)
            .map_err(std::io::Error::other)
    })
    .with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccsc::Complex64;

    #[test]
    fn opposite_ends_of_the_phase_circle_match() {
        let a = hue_value_to_rgb((PI + PI) / (2.0 * PI), 1.0);
        let b = hue_value_to_rgb((-PI + 1e-12 + PI) / (2.0 * PI), 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_image_renders_black() {
        let rgb = phase_rgb(&ComplexImage::zeros(2, 3));
        assert_eq!(rgb, vec![0; 18]);
    }

    #[test]
    fn brightest_pixel_has_full_value() {
        let img = ComplexImage::from_vec(1, 2, vec![Complex64::new(3.0, 0.0), Complex64::new(0.5, 0.0)]).unwrap();
        let rgb = phase_rgb(&img);
        assert_eq!(rgb[..3].iter().max(), Some(&255));
        assert!(rgb[3..].iter().max().unwrap() < &255);
    }
}
