//! Texture descriptors extracted from the 18 scale-space sub-images.
//!
//! Three descriptor families run independently on every sub-image and the
//! per-sub-image fragments are concatenated in canonical stack order, one
//! vector per family. LBP and BSIF fragments are L1-normalized 256-bin
//! histograms; HoG fragments are L2-Hys block descriptors whose length
//! depends on the sub-image size.

pub mod bsif;
pub mod hog;
pub mod lbp;

pub use bsif::FilterBank;

use crate::config::DescriptorConfig;
use crate::error::{Error, Result};
use crate::imaging::ColorChannel;
use crate::scalespace::{ScaleSpaceStack, SUB_IMAGES};

/// The three descriptor families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureType {
    Lbp,
    Hog,
    Bsif,
}

impl FeatureType {
    pub const ALL: [FeatureType; 3] = [FeatureType::Lbp, FeatureType::Hog, FeatureType::Bsif];

    pub fn label(&self) -> &'static str {
        match self {
            FeatureType::Lbp => "lbp",
            FeatureType::Hog => "hog",
            FeatureType::Bsif => "bsif",
        }
    }

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|t| t == self).unwrap()
    }
}

/// One descriptor vector for a single image and feature type.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub feature_type: FeatureType,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// The three descriptor vectors of one image.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub lbp: FeatureVector,
    pub hog: FeatureVector,
    pub bsif: FeatureVector,
    pub source_id: String,
}

impl FeatureSet {
    pub fn get(&self, t: FeatureType) -> &FeatureVector {
        match t {
            FeatureType::Lbp => &self.lbp,
            FeatureType::Hog => &self.hog,
            FeatureType::Bsif => &self.bsif,
        }
    }
}

/// Extract all three descriptor vectors from an 18-entry stack.
pub fn extract_feature_set(
    stack: &ScaleSpaceStack,
    cfg: &DescriptorConfig,
    bank: &FilterBank,
) -> Result<FeatureSet> {
    if stack.sub_images().len() != SUB_IMAGES {
        return Err(Error::DimensionMismatch(format!(
            "scale-space stack has {} entries, expected {SUB_IMAGES}",
            stack.sub_images().len()
        )));
    }
    let mut lbp_values = Vec::new();
    let mut hog_values = Vec::new();
    let mut bsif_values = Vec::new();
    for sub in stack.sub_images() {
        lbp_values.extend(lbp::lbp_histogram(sub)?);
        hog_values.extend(hog::hog_descriptor(sub, cfg)?);
        bsif_values.extend(bsif::bsif_histogram(sub, bank)?);
    }
    Ok(FeatureSet {
        lbp: FeatureVector {
            feature_type: FeatureType::Lbp,
            values: lbp_values,
        },
        hog: FeatureVector {
            feature_type: FeatureType::Hog,
            values: hog_values,
        },
        bsif: FeatureVector {
            feature_type: FeatureType::Bsif,
            values: bsif_values,
        },
        source_id: stack.source_id().to_string(),
    })
}

/// Descriptor layout of one sub-image at the configured geometry.
#[derive(Debug, Clone)]
pub struct SubImageLayout {
    pub index: usize,
    pub channel: ColorChannel,
    pub level: usize,
    pub width: usize,
    pub height: usize,
    pub lbp_dim: usize,
    pub hog_blocks: (usize, usize),
    pub hog_dim: usize,
    pub bsif_dim: usize,
}

/// The fixed per-sub-image dimensionality table for a descriptor config.
#[derive(Debug, Clone)]
pub struct DimLayout {
    pub sub_images: Vec<SubImageLayout>,
    pub lbp_total: usize,
    pub hog_total: usize,
    pub bsif_total: usize,
}

/// Compute the layout table implied by `cfg` (inputs are square at the
/// working resolution; level dimensions halve with ceiling).
pub fn dim_layout(cfg: &DescriptorConfig) -> DimLayout {
    let mut sub_images = Vec::with_capacity(SUB_IMAGES);
    let mut lbp_total = 0;
    let mut hog_total = 0;
    let mut bsif_total = 0;
    for index in 0..SUB_IMAGES {
        let (channel, level) = ScaleSpaceStack::channel_and_level(index);
        let mut side = cfg.resolution;
        for _ in 0..level {
            side = side.div_ceil(2);
        }
        let cells = side / cfg.hog_cell;
        let blocks = cells.saturating_sub(cfg.hog_block - 1);
        let block_dim = cfg.hog_block * cfg.hog_block * cfg.hog_bins;
        let hog_dim = blocks * blocks * block_dim;
        let lbp_dim = 1usize << cfg.lbp_points;
        let bsif_dim = 1usize << cfg.bsif_filters;
        lbp_total += lbp_dim;
        hog_total += hog_dim;
        bsif_total += bsif_dim;
        sub_images.push(SubImageLayout {
            index,
            channel,
            level,
            width: side,
            height: side,
            lbp_dim,
            hog_blocks: (blocks, blocks),
            hog_dim,
            bsif_dim,
        });
    }
    DimLayout {
        sub_images,
        lbp_total,
        hog_total,
        bsif_total,
    }
}

impl DimLayout {
    pub fn total(&self, t: FeatureType) -> usize {
        match t {
            FeatureType::Lbp => self.lbp_total,
            FeatureType::Hog => self.hog_total,
            FeatureType::Bsif => self.bsif_total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{ColorStack, ImagePlane};
    use crate::scalespace::build_scale_space_stack;

    fn constant_stack(side: usize, value: f64) -> ScaleSpaceStack {
        let channels: Vec<ImagePlane> =
            (0..6).map(|_| ImagePlane::filled(side, side, value)).collect();
        let cs = ColorStack::from_planes(channels, "const").unwrap();
        build_scale_space_stack(&cs).unwrap()
    }

    #[test]
    fn lbp_vector_length_is_18x256() {
        let stack = constant_stack(64, 0.5);
        let fs = extract_feature_set(&stack, &DescriptorConfig::default(), FilterBank::default_bank().unwrap()).unwrap();
        assert_eq!(fs.lbp.dim(), 18 * 256);
        assert_eq!(fs.bsif.dim(), 18 * 256);
    }

    #[test]
    fn constant_stack_gives_one_hot_lbp_blocks() {
        // 0.5 is dyadic, so the pyramid bands of a constant plane are
        // exactly zero and every LBP code is 255 (ties compare as >=).
        let stack = constant_stack(64, 0.5);
        let fs = extract_feature_set(&stack, &DescriptorConfig::default(), FilterBank::default_bank().unwrap()).unwrap();
        for block in fs.lbp.values.chunks(256) {
            assert_eq!(block[255], 1.0);
            assert!(block[..255].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn extraction_is_pure() {
        let stack = constant_stack(64, 0.25);
        let cfg = DescriptorConfig::default();
        let bank = FilterBank::default_bank().unwrap();
        let a = extract_feature_set(&stack, &cfg, bank).unwrap();
        let b = extract_feature_set(&stack, &cfg, bank).unwrap();
        assert_eq!(a.lbp.values, b.lbp.values);
        assert_eq!(a.hog.values, b.hog.values);
        assert_eq!(a.bsif.values, b.bsif.values);
    }

    #[test]
    fn layout_matches_default_geometry() {
        let layout = dim_layout(&DescriptorConfig::default());
        assert_eq!(layout.lbp_total, 4608);
        assert_eq!(layout.bsif_total, 4608);
        // 320 -> 39x39 blocks, 160 -> 19x19, 80 -> 9x9, each block 36-dim.
        let per_channel = (39 * 39 + 19 * 19 + 9 * 9) * 36;
        assert_eq!(layout.hog_total, 6 * per_channel);
        assert_eq!(layout.sub_images[3].channel, ColorChannel::S);
        assert_eq!(layout.sub_images[3].level, 0);
        assert_eq!(layout.sub_images[5].width, 80);
    }
}
