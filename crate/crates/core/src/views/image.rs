//! Dense row-major images and PNG helpers.

use std::ops::{Add, Mul};
use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};
use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Image<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "image data length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn pixels(&self) -> &[T] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Horizontal mirror.
    pub fn flip_horizontal(&self) -> Self {
        Image::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, y).clone()
        })
    }
}

/// Values that can be bilinearly blended.
pub trait Blend: Copy + Add<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Add<Output = T> + Mul<f64, Output = T>> Blend for T {}

/// Bilinear sample at continuous pixel coordinates (centers at half-integers),
/// clamped to the image bounds.
pub fn sample_image<T: Blend>(p: Vector2<f64>, image: &Image<T>) -> T {
    assert!(image.width > 0 && image.height > 0, "empty image");
    let fx = (p.x - 0.5).clamp(0.0, (image.width - 1) as f64);
    let fy = (p.y - 0.5).clamp(0.0, (image.height - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(image.width - 1);
    let y1 = (y0 + 1).min(image.height - 1);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let top = *image.get(x0, y0) * (1.0 - tx) + *image.get(x1, y0) * tx;
    let bottom = *image.get(x0, y1) * (1.0 - tx) + *image.get(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}

fn quantize8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn quantize16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

pub fn save_gray(image: &Image<f64>, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_vec(
        image.width as u32,
        image.height as u32,
        image.data.iter().map(|&v| quantize8(v)).collect(),
    )
    .expect("buffer size");
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

/// Saves an RGB image with components in [0, 1], 8 or 16 bits per channel.
pub fn save_rgb(image: &Image<Vec3>, path: &Path, sixteen_bit: bool) -> Result<()> {
    let (w, h) = (image.width as u32, image.height as u32);
    let result = if sixteen_bit {
        let data = image
            .data
            .iter()
            .flat_map(|c| [quantize16(c.x), quantize16(c.y), quantize16(c.z)])
            .collect();
        ImageBuffer::<Rgb<u16>, Vec<u16>>::from_vec(w, h, data)
            .expect("buffer size")
            .save(path)
    } else {
        let data = image
            .data
            .iter()
            .flat_map(|c| [quantize8(c.x), quantize8(c.y), quantize8(c.z)])
            .collect();
        ImageBuffer::<Rgb<u8>, Vec<u8>>::from_vec(w, h, data)
            .expect("buffer size")
            .save(path)
    };
    result.map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    image::open(path).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

/// Loads a mask: the alpha channel when present, otherwise luminance.
pub fn load_gray(path: &Path) -> Result<Image<f64>> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = if img.color().has_alpha() {
        img.to_rgba32f().pixels().map(|p| p.0[3] as f64).collect()
    } else {
        img.to_luma32f().pixels().map(|p| p.0[0] as f64).collect()
    };
    Ok(Image::from_vec(w, h, data))
}

/// Loads RGB with components in [0, 1] at the file's native precision.
pub fn load_rgb(path: &Path) -> Result<Image<Vec3>> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        image::DynamicImage::ImageRgb16(_) | image::DynamicImage::ImageRgba16(_) => img
            .to_rgb16()
            .pixels()
            .map(|p| Vec3::new(p.0[0] as f64, p.0[1] as f64, p.0[2] as f64) / 65535.0)
            .collect(),
        _ => img
            .to_rgb8()
            .pixels()
            .map(|p| Vec3::new(p.0[0] as f64, p.0[1] as f64, p.0[2] as f64) / 255.0)
            .collect(),
    };
    Ok(Image::from_vec(w, h, data))
}
