//! Statistical texture descriptors: intensity histogram, HOG and uniform LBP.

mod hog;
mod hpiv;
mod lbp;

pub use self::hog::{hog, HOG_BINS};
pub use self::hpiv::hpiv;
pub use self::lbp::{
    is_uniform, lbp, lbp_code, lbp_image, lbp_with, transitions, uniform_bin, LbpOptions,
    LBP_BINS, NEIGHBOR_OFFSETS,
};
