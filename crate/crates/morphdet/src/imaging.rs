//! Image loading and the six-channel color decomposition (HSV + YCbCr).
//!
//! All pixel data is carried as [`ImagePlane`]: row-major `f64` intensities
//! in `[0, 1]`. Conversions are pure functions; repeated calls on the same
//! input produce bit-identical output.

use std::path::Path;

use crate::error::{Error, Result};

/// A single raster channel: row-major real-valued intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "plane data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// True when every sample is finite and inside `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }

    /// Crop the centered `fraction` of the plane (both axes).
    pub fn center_crop(&self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!(
                "center-crop fraction {fraction} outside (0, 1]"
            )));
        }
        let cw = ((self.width as f64 * fraction).round() as usize).max(1);
        let ch = ((self.height as f64 * fraction).round() as usize).max(1);
        let x0 = (self.width - cw) / 2;
        let y0 = (self.height - ch) / 2;
        let mut data = Vec::with_capacity(cw * ch);
        for y in y0..y0 + ch {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + cw]);
        }
        Self::new(cw, ch, data)
    }

    /// Bilinear resize with center-aligned sampling. Identity when the
    /// target equals the current dimensions.
    pub fn resize_bilinear(&self, out_w: usize, out_h: usize) -> Result<Self> {
        if out_w == 0 || out_h == 0 {
            return Err(Error::DimensionMismatch(
                "resize target has a zero dimension".into(),
            ));
        }
        if out_w == self.width && out_h == self.height {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / out_w as f64;
        let sy = self.height as f64 / out_h as f64;
        let mut data = Vec::with_capacity(out_w * out_h);
        for oy in 0..out_h {
            let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for ox in 0..out_w {
                let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                let top = self.at(x0, y0) * (1.0 - wx) + self.at(x1, y0) * wx;
                let bot = self.at(x0, y1) * (1.0 - wx) + self.at(x1, y1) * wx;
                data.push(top * (1.0 - wy) + bot * wy);
            }
        }
        Self::new(out_w, out_h, data)
    }
}

/// Decoded RGB image as three planes in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct RgbPlanes {
    pub r: ImagePlane,
    pub g: ImagePlane,
    pub b: ImagePlane,
}

impl RgbPlanes {
    fn check_dims(&self) -> Result<()> {
        let (w, h) = (self.r.width(), self.r.height());
        for p in [&self.g, &self.b] {
            if p.width() != w || p.height() != h {
                return Err(Error::DimensionMismatch(
                    "RGB planes differ in size".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn center_crop(&self, fraction: f64) -> Result<Self> {
        Ok(Self {
            r: self.r.center_crop(fraction)?,
            g: self.g.center_crop(fraction)?,
            b: self.b.center_crop(fraction)?,
        })
    }

    pub fn resize_bilinear(&self, w: usize, h: usize) -> Result<Self> {
        Ok(Self {
            r: self.r.resize_bilinear(w, h)?,
            g: self.g.resize_bilinear(w, h)?,
            b: self.b.resize_bilinear(w, h)?,
        })
    }
}

/// The six color channels, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorChannel {
    H,
    S,
    V,
    Y,
    Cb,
    Cr,
}

impl ColorChannel {
    pub const ALL: [ColorChannel; 6] = [
        ColorChannel::H,
        ColorChannel::S,
        ColorChannel::V,
        ColorChannel::Y,
        ColorChannel::Cb,
        ColorChannel::Cr,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ColorChannel::H => "H",
            ColorChannel::S => "S",
            ColorChannel::V => "V",
            ColorChannel::Y => "Y",
            ColorChannel::Cb => "Cb",
            ColorChannel::Cr => "Cr",
        }
    }
}

/// The six-channel decomposition of one input image, channels ordered
/// H, S, V, Y, Cb, Cr and all sharing the same dimensions.
#[derive(Debug, Clone)]
pub struct ColorStack {
    channels: Vec<ImagePlane>,
    source_id: String,
}

impl ColorStack {
    /// Assemble a stack from six equally-sized planes already in canonical
    /// H, S, V, Y, Cb, Cr order.
    pub fn from_planes(channels: Vec<ImagePlane>, source_id: &str) -> Result<Self> {
        if channels.len() != 6 {
            return Err(Error::DimensionMismatch(format!(
                "color stack needs 6 channels, got {}",
                channels.len()
            )));
        }
        let (w, h) = (channels[0].width(), channels[0].height());
        if channels.iter().any(|c| c.width() != w || c.height() != h) {
            return Err(Error::DimensionMismatch(
                "color stack channels differ in size".into(),
            ));
        }
        Ok(Self {
            channels,
            source_id: source_id.to_string(),
        })
    }

    pub fn channels(&self) -> &[ImagePlane] {
        &self.channels
    }

    pub fn channel(&self, c: ColorChannel) -> &ImagePlane {
        let idx = ColorChannel::ALL.iter().position(|x| *x == c).unwrap();
        &self.channels[idx]
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }
}

/// Decode a PNG or JPEG file into RGB planes scaled to `[0, 1]`.
///
/// Grayscale files are rejected: the downstream color decomposition
/// requires chroma information.
pub fn load_image(path: &Path) -> Result<RgbPlanes> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    use image::ColorType::*;
    match img.color() {
        L8 | La8 | L16 | La16 => return Err(Error::GrayscaleInput {
            path: path.to_path_buf(),
        }),
        _ => {}
    }
    let rgb = img.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut r = Vec::with_capacity(w * h);
    let mut g = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for px in rgb.pixels() {
        r.push(px.0[0] as f64 / 255.0);
        g.push(px.0[1] as f64 / 255.0);
        b.push(px.0[2] as f64 / 255.0);
    }
    Ok(RgbPlanes {
        r: ImagePlane::new(w, h, r)?,
        g: ImagePlane::new(w, h, g)?,
        b: ImagePlane::new(w, h, b)?,
    })
}

fn converted_planes<F>(rgb: &RgbPlanes, f: F) -> Result<(ImagePlane, ImagePlane, ImagePlane)>
where
    F: Fn(f64, f64, f64) -> (f64, f64, f64),
{
    rgb.check_dims()?;
    let (w, h) = (rgb.r.width(), rgb.r.height());
    let n = w * h;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y, z) = f(rgb.r.data()[i], rgb.g.data()[i], rgb.b.data()[i]);
        a.push(x.clamp(0.0, 1.0));
        b.push(y.clamp(0.0, 1.0));
        c.push(z.clamp(0.0, 1.0));
    }
    Ok((
        ImagePlane::new(w, h, a)?,
        ImagePlane::new(w, h, b)?,
        ImagePlane::new(w, h, c)?,
    ))
}

#[inline]
pub(crate) fn hsv_from_rgb(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    // Hexcone hue in degrees; achromatic pixels get hue 0 by convention.
    let h_deg = if delta == 0.0 {
        0.0
    } else if max == r {
        let mut h = 60.0 * ((g - b) / delta);
        if h < 0.0 {
            h += 360.0;
        }
        h
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h_deg / 360.0, s, v)
}

#[inline]
pub(crate) fn ycbcr_from_rgb(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    // Full-range BT.601: luma weights 0.299/0.587/0.114, chroma scaled so
    // the extremes land on [0, 1] with offset 0.5.
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 0.5 + (b - y) / 1.772;
    let cr = 0.5 + (r - y) / 1.402;
    (y, cb, cr)
}

/// Convert RGB planes to HSV. Hue is stored normalized to `[0, 1]`
/// (degrees / 360).
pub fn rgb_to_hsv(rgb: &RgbPlanes) -> Result<(ImagePlane, ImagePlane, ImagePlane)> {
    converted_planes(rgb, hsv_from_rgb)
}

/// Convert RGB planes to full-range BT.601 YCbCr, rescaled to `[0, 1]`.
pub fn rgb_to_ycbcr(rgb: &RgbPlanes) -> Result<(ImagePlane, ImagePlane, ImagePlane)> {
    converted_planes(rgb, ycbcr_from_rgb)
}

/// Build the canonical six-channel stack (H, S, V, Y, Cb, Cr).
pub fn decompose_color_spaces(rgb: &RgbPlanes, source_id: &str) -> Result<ColorStack> {
    let (h, s, v) = rgb_to_hsv(rgb)?;
    let (y, cb, cr) = rgb_to_ycbcr(rgb)?;
    Ok(ColorStack {
        channels: vec![h, s, v, y, cb, cr],
        source_id: source_id.to_string(),
    })
}
