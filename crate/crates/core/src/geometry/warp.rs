use image::{Rgb, RgbImage};

use super::homography::Homography;
use crate::error::{Error, Result};
use crate::pressure::{PressureImage, Space};

/// Bilinear sample with zero padding outside the grid. Integer coordinates
/// hit cell centers.
#[inline]
pub fn sample_bilinear_zero(values: &[f32], width: usize, height: usize, x: f64, y: f64) -> f32 {
    if !(x > -1.0 && y > -1.0 && x < width as f64 && y < height as f64) {
        return 0.0;
    }
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let at = |xi: isize, yi: isize| -> f64 {
        if xi < 0 || yi < 0 || xi >= width as isize || yi >= height as isize {
            0.0
        } else {
            values[yi as usize * width + xi as usize] as f64
        }
    };
    let v = (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x0 + 1, y0))
        + fy * ((1.0 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1));
    v.max(0.0) as f32
}

/// Resamples a sensor-space pressure image into a `out_width x out_height`
/// camera grid by inverse mapping through `h`.
pub fn warp_pressure(
    p: &PressureImage,
    h: &Homography,
    out_width: usize,
    out_height: usize,
) -> Result<PressureImage> {
    if p.space() != Space::Sensor {
        return Err(Error::invalid("warp_pressure expects a sensor-space image"));
    }
    let inv = h.inverse()?;
    warp_values(p, &inv, out_width, out_height, Space::Camera)
}

/// Generic inverse-mapped resampling; `dst_to_src` maps output pixels into
/// the source grid.
pub fn warp_values(
    p: &PressureImage,
    dst_to_src: &Homography,
    out_width: usize,
    out_height: usize,
    space: Space,
) -> Result<PressureImage> {
    let (w, h) = p.dims();
    let src = p.values();
    PressureImage::from_fn(out_width, out_height, space, None, |u, v| {
        match dst_to_src.apply(u as f64, v as f64) {
            Some([x, y]) => sample_bilinear_zero(src, w, h, x, y),
            None => 0.0,
        }
    })
}

/// Bilinear resize with half-pixel centers and edge clamping.
pub fn resize_rgb_bilinear(img: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    if (w, h) == (out_w, out_h) {
        return img.clone();
    }
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    RgbImage::from_fn(out_w, out_h, |u, v| {
        let x = ((u as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
        let y = ((v as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        sample_rgb_clamped(img, x, y)
    })
}

pub(crate) fn sample_rgb_clamped(img: &RgbImage, x: f64, y: f64) -> Rgb<u8> {
    let (w, h) = img.dimensions();
    let x0 = x.floor().clamp(0.0, (w - 1) as f64) as u32;
    let y0 = y.floor().clamp(0.0, (h - 1) as f64) as u32;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = (x - x0 as f64).clamp(0.0, 1.0);
    let fy = (y - y0 as f64).clamp(0.0, 1.0);
    let (p00, p10, p01, p11) = (
        img.get_pixel(x0, y0),
        img.get_pixel(x1, y0),
        img.get_pixel(x0, y1),
        img.get_pixel(x1, y1),
    );
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = (1.0 - fy) * ((1.0 - fx) * p00[c] as f64 + fx * p10[c] as f64)
            + fy * ((1.0 - fx) * p01[c] as f64 + fx * p11[c] as f64);
        out[c] = v.round().clamp(0.0, 255.0) as u8;
    }
    Rgb(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(w: usize, h: usize, cx: f64, cy: f64, sigma: f64) -> PressureImage {
        PressureImage::from_fn(w, h, Space::Sensor, Some(1.25e-3), |x, y| {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            (50.0 * (-d2 / (2.0 * sigma * sigma)).exp()) as f32
        })
        .unwrap()
    }

    #[test]
    fn identity_warp_is_exact() {
        let p = blob(40, 30, 17.3, 11.8, 4.0);
        let q = warp_pressure(&p, &Homography::identity(), 40, 30).unwrap();
        assert_eq!(q.values(), p.values());
        assert_eq!(q.space(), Space::Camera);
    }

    #[test]
    fn zero_in_zero_out() {
        let p = PressureImage::zeros(20, 10, Space::Sensor);
        let h = Homography::from_row_major([1.2, 0.1, 3.0, 0.0, 0.9, 2.0, 1e-3, 0.0, 1.0]).unwrap();
        let q = warp_pressure(&p, &h, 33, 21).unwrap();
        assert!(q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integer_translation_preserves_sum() {
        let p = blob(40, 30, 20.0, 15.0, 3.0);
        let q = warp_pressure(&p, &Homography::translation(7.0, 4.0), 60, 50).unwrap();
        assert!((q.sum() - p.sum()).abs() <= 1e-4 * p.sum());
    }

    #[test]
    fn rejects_camera_input_and_singular() {
        let cam = PressureImage::zeros(4, 4, Space::Camera);
        assert!(warp_pressure(&cam, &Homography::identity(), 4, 4).is_err());
    }

    #[test]
    fn round_trip_warp_reproduces_smooth_blob() {
        let p = blob(80, 60, 40.0, 28.0, 6.0);
        let h = Homography::from_row_major([1.05, 0.04, 6.0, -0.03, 0.97, 4.0, 2e-4, -1e-4, 1.0])
            .unwrap();
        let cam = warp_pressure(&p, &h, 100, 80).unwrap();
        let back = warp_values(&cam, &h, 80, 60, Space::Sensor).unwrap();
        let peak = p.max_value();
        let worst = p
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(worst <= 0.01 * peak, "max error {worst} vs peak {peak}");
    }

    #[test]
    fn resize_same_size_is_identity() {
        let img = RgbImage::from_fn(9, 7, |x, y| Rgb([x as u8 * 20, y as u8 * 30, 5]));
        assert_eq!(resize_rgb_bilinear(&img, 9, 7), img);
        let up = resize_rgb_bilinear(&img, 18, 14);
        assert_eq!(up.dimensions(), (18, 14));
    }
}
