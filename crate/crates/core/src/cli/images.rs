//! Frame images are looked up in a directory by frame id:
//! `<dir>/<frame_id>.<ext>` for any of the supported extensions.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use guardline::model::ImageGeometry;
use image::RgbImage;

const EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

pub(crate) fn find(dir: &Path, frame_id: u64) -> Option<PathBuf> {
    EXTENSIONS.iter().map(|ext| dir.join(format!("{frame_id}.{ext}"))).find(|p| p.is_file())
}

pub(crate) fn load(dir: &Path, frame_id: u64, geometry: ImageGeometry) -> Result<RgbImage> {
    let Some(path) = find(dir, frame_id) else {
        bail!("no image for frame {frame_id} in {}", dir.display());
    };
    let img = image::open(&path).with_context(|| format!("cannot decode {}", path.display()))?.to_rgb8();
    if img.dimensions() != (geometry.width, geometry.height) {
        bail!(
            "image {} is {}x{} but frame {frame_id} has geometry {}x{}",
            path.display(),
            img.width(),
            img.height(),
            geometry.width,
            geometry.height
        );
    }
    Ok(img)
}
