use crate::descriptor::{Descriptor, FeatureVector};
use crate::image::GrayImage;

/// 256-bin intensity histogram as raw counts.
pub fn hpiv(img: &GrayImage) -> FeatureVector {
    let mut counts = [0u64; 256];
    for &v in img.data() {
        counts[v as usize] += 1;
    }
    FeatureVector::new(
        Descriptor::Hpiv,
        counts.iter().map(|&c| c as f64).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_image() {
        let h = hpiv(&GrayImage::filled(40, 40, 7).unwrap());
        assert_eq!(h.len(), 256);
        assert_eq!(h.values()[7], 1600.0);
        assert_eq!(h.values().iter().sum::<f64>(), 1600.0);
    }

    #[test]
    fn small_image_counts() {
        let h = hpiv(&GrayImage::new(2, 2, vec![0, 0, 255, 1]).unwrap());
        assert_eq!(h.values()[0], 2.0);
        assert_eq!(h.values()[1], 1.0);
        assert_eq!(h.values()[255], 1.0);
        assert_eq!(h.values().iter().sum::<f64>(), 4.0);
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_shift_covariant(
            mut px in proptest::collection::vec(0u8..200, 64), shift in 0u8..56
        ) {
            let a = hpiv(&GrayImage::new(8, 8, px.clone()).unwrap());
            px.reverse();
            let b = hpiv(&GrayImage::new(8, 8, px.clone()).unwrap());
            prop_assert_eq!(a.values(), b.values());
            let shifted = hpiv(&GrayImage::new(8, 8, px.iter().map(|&v| v + shift).collect()).unwrap());
            for i in 0..200usize {
                prop_assert_eq!(a.values()[i], shifted.values()[i + shift as usize]);
            }
        }
    }
}
