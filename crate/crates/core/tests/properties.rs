use defect_vision::ann::{AnnConfig, AnnModel, HiddenActivation, OutputActivation};
use defect_vision::classify::{ClassifierKind, ClassifierSpec};
use defect_vision::dataset::Dataset;
use defect_vision::edge::{convolve2d, Border, Kernel2D};
use defect_vision::image::RealImage;
use defect_vision::synth::{area_mm2, sample_extent, DefectStats};
use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn image_and_kernel() -> impl Strategy<Value = (RealImage, Kernel2D)> {
    (0usize..3, 0usize..3)
        .prop_flat_map(|(a, b)| {
            let (kr, kc) = (2 * a + 1, 2 * b + 1);
            (kr..=10usize, kc..=10usize, Just(kr), Just(kc))
        })
        .prop_flat_map(|(h, w, kr, kc)| {
            (
                prop::collection::vec(-100.0..100.0f64, w * h),
                prop::collection::vec(-1.0..1.0f64, kr * kc),
                Just((w, h, kr, kc)),
            )
        })
        .prop_map(|(px, k, (w, h, kr, kc))| (RealImage::new(w, h, px).unwrap(), Kernel2D::new(kr, kc, k).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_is_linear_in_the_image((img, k) in image_and_kernel(), s in -3.0..3.0f64) {
        let scaled = RealImage::new(img.width(), img.height(), img.data().iter().map(|v| v * s).collect()).unwrap();
        for border in [Border::Zero, Border::Replicate] {
            let a = convolve2d(&scaled, &k, border).unwrap();
            let b = convolve2d(&img, &k, border).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - s * y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_kernel_is_a_no_op((img, _) in image_and_kernel()) {
        let out = convolve2d(&img, &Kernel2D::identity(), Border::Zero).unwrap();
        prop_assert_eq!(out.data(), img.data());
    }

    #[test]
    fn area_conversion_is_additive(a in 0.0..1e6f64, b in 0.0..1e6f64) {
        prop_assert!((area_mm2(a + b) - area_mm2(a) - area_mm2(b)).abs() < 1e-9);
    }

    #[test]
    fn sampled_extents_respect_table_bounds(seed in any::<u64>()) {
        let stats = DefectStats::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let (w, h) = sample_extent(&mut rng, &stats, 0.7);
            prop_assert!((6..=65).contains(&w) && (5..=71).contains(&h));
            prop_assert!((30..=3195).contains(&(w * h)));
        }
    }

    #[test]
    fn tanh_network_gradients_match_finite_differences(
        x_dim in 1usize..=5,
        g in 1usize..=4,
        softmax in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut cfg = AnnConfig::new(x_dim, g);
        cfg.hidden_activation = HiddenActivation::Tansig;
        cfg.output_activation = if softmax { OutputActivation::Softmax } else { OutputActivation::Sigmoid };
        cfg.seed = seed;
        let mut model = AnnModel::init(cfg).unwrap();
        let x = Array2::from_shape_fn((4, x_dim), |(i, j)| ((i * 7 + j * 3) % 5) as f64 / 2.0 - 1.0);
        let labels = [0u8, 1, 1, 0];
        let (_, grad) = model.loss_and_grad(x.view(), &labels).unwrap();
        let analytic: Vec<f64> = grad.iter().collect();
        for (k, &a) in analytic.iter().enumerate() {
            let orig = *model.params.get_mut(k);
            *model.params.get_mut(k) = orig + 1e-5;
            let up = model.loss(x.view(), &labels).unwrap();
            *model.params.get_mut(k) = orig - 1e-5;
            let down = model.loss(x.view(), &labels).unwrap();
            *model.params.get_mut(k) = orig;
            let n = (up - down) / 2e-5;
            prop_assert!((a - n).abs() / a.abs().max(n.abs()).max(1e-6) < 1e-4, "param {}: {} vs {}", k, a, n);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn scores_and_predictions_agree(seed in any::<u64>(), kind_idx in 0usize..22) {
        let kind = ClassifierKind::ALL[kind_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let x = Array2::from_shape_fn((120, 4), |_| rng.random_range(-1.0..1.0));
        let y: Vec<u8> = x.rows().into_iter().map(|r| u8::from(r[0] - r[2] > 0.1)).collect();
        prop_assume!(y.iter().filter(|&&v| v == 1).count() >= 10 && y.iter().filter(|&&v| v == 0).count() >= 10);
        let data = Dataset::from_parts(x.clone(), y).unwrap();
        let model = ClassifierSpec::new(kind).with_seed(seed).fit(&data).unwrap();
        let scores = model.score_batch(x.view()).unwrap();
        let pred = model.predict_batch(x.view()).unwrap();
        for (s, p) in scores.iter().zip(&pred) {
            prop_assert_eq!(*p, u8::from(*s > 0.0));
        }
    }
}
