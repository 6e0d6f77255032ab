//! Acceptance suite. Runs as a plain binary (no libtest harness) so that each
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any failure.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use defect_vision::ann::{AdamConfig, AdamState, AnnConfig, AnnModel, HiddenActivation, OutputActivation, Params};
use defect_vision::classify::svm::{kkt_violation, smo, Kernel, SmoOptions, SvmModel};
use defect_vision::classify::{ClassifierKind, ClassifierSpec, KnnModel, KnnVariant};
use defect_vision::dataset::{Dataset, Standardizer};
use defect_vision::descriptor::{build_dataset, extract, Descriptor};
use defect_vision::edge::{convolve2d, Border, EdgeMethod, EdgeParams, Kernel2D};
use defect_vision::eval::{accuracy, cross_validate, roc, run_grid, ConfusionMatrix};
use defect_vision::image::{GrayImage, RealImage};
use defect_vision::stats::{is_uniform, lbp_code, lbp_image, LbpOptions, NEIGHBOR_OFFSETS};
use defect_vision::synth::{area_mm2, gen_patches, sample_extent, DefectStats, SynthParams, DEFAULT_DEFECT_FRACTION};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn feature_lengths() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let img = GrayImage::from_fn(40, 40, |_, _| rng.random()).unwrap();
    let params = EdgeParams::default();
    let mut expected: Vec<(Descriptor, usize)> = Descriptor::EDGE.iter().map(|&d| (d, 1600)).collect();
    expected.extend([
        (Descriptor::Hpiv, 256),
        (Descriptor::Hog { cell: 8 }, 576),
        (Descriptor::Hog { cell: 10 }, 324),
        (Descriptor::Lbp { cell: 8 }, 1475),
        (Descriptor::Lbp { cell: 16 }, 236),
        (Descriptor::Lbp { cell: 32 }, 59),
    ]);
    for (d, len) in &expected {
        let got = extract(&img, *d, &params).map_err(|e| format!("{d}: {e}"))?.len();
        check(got == *len, || format!("{d}: {got} features, expected {len}"))?;
        check(d.output_len(40, 40) == *len, || format!("{d}: output_len disagrees"))?;
    }
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{} descriptors, lengths 1600/256/576/324/1475/236/59", expected.len()))
}

fn brute_convolve(img: &RealImage, k: &Kernel2D, border: Border) -> Vec<f64> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (kr, kc) = (k.rows() as isize, k.cols() as isize);
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for i in 0..kr {
                for j in 0..kc {
                    let sr = r - (i - kr / 2);
                    let sc = c - (j - kc / 2);
                    let inside = (0..h).contains(&sr) && (0..w).contains(&sc);
                    let v = match border {
                        Border::Zero if !inside => 0.0,
                        Border::Zero => img.get(sr as usize, sc as usize),
                        Border::Replicate => img.get(sr.clamp(0, h - 1) as usize, sc.clamp(0, w - 1) as usize),
                    };
                    acc += k.get(i as usize, j as usize) * v;
                }
            }
            out.push(acc);
        }
    }
    out
}

fn convolution_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let kr = 2 * rng.random_range(0..3) + 1;
        let kc = 2 * rng.random_range(0..3) + 1;
        let h = rng.random_range(kr..=12);
        let w = rng.random_range(kc..=12);
        let img = RealImage::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect()).unwrap();
        let k = Kernel2D::new(kr, kc, (0..kr * kc).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        for border in [Border::Zero, Border::Replicate] {
            let got = convolve2d(&img, &k, border).map_err(|e| e.to_string())?;
            for (a, b) in got.data().iter().zip(brute_convolve(&img, &k, border)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    within(t.elapsed(), Duration::from_secs(5))?;
    Ok(format!("50 pairs x 2 borders, max deviation {worst:.1e}"))
}

fn lbp_oracle() -> Outcome {
    let center = 128u8;
    for pattern in 0..=255u8 {
        // Bit p set means the centre is brighter than neighbour p.
        let neighbors: [u8; 8] = std::array::from_fn(|p| if pattern >> p & 1 == 1 { 90 } else { 170 });
        let mut oracle = 0u32;
        for (p, &g) in neighbors.iter().enumerate() {
            if i32::from(center) - i32::from(g) > 0 {
                oracle += 1 << p;
            }
        }
        let code = lbp_code(center, &neighbors, LbpOptions::default());
        check(u32::from(code) == oracle, || format!("pattern {pattern}: code {code}, oracle {oracle}"))?;
        // Same pattern through the image path.
        let mut px = [center; 9];
        for (p, &(dc, dr)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            px[((1 + dr) * 3 + 1 + dc) as usize] = neighbors[p];
        }
        let img = GrayImage::new(3, 3, px.to_vec()).unwrap();
        let via_image = lbp_image(&img, LbpOptions::default())[4];
        check(u32::from(via_image) == oracle, || format!("pattern {pattern}: image path gave {via_image}"))?;
    }
    let uniform = (0..=255u8).filter(|&c| is_uniform(c)).count();
    check(uniform == 58 && 256 - uniform == 198, || format!("partition {uniform}/{}", 256 - uniform))?;
    Ok("256/256 codes match; uniform partition 58/198".into())
}

fn brute_knn(train: &Array2<f64>, labels: &[u8], query: &Array2<f64>, variant: KnnVariant) -> Vec<u8> {
    let st = Standardizer::fit(train.view());
    let (zt, zq) = (st.transform(train.view()), st.transform(query.view()));
    let mut out = Vec::new();
    for q in zq.rows() {
        let mut d: Vec<(f64, usize)> = zt
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let dist = match variant.metric() {
                    defect_vision::classify::Metric::Euclidean => {
                        q.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                    }
                    defect_vision::classify::Metric::Cubic => {
                        q.iter().zip(t).map(|(a, b)| (a - b).abs().powi(3)).sum::<f64>().cbrt()
                    }
                    defect_vision::classify::Metric::Cosine => {
                        let dot: f64 = q.iter().zip(t).map(|(a, b)| a * b).sum();
                        let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
                        let nt = t.iter().map(|a| a * a).sum::<f64>().sqrt();
                        1.0 - dot / (nq * nt)
                    }
                };
                (dist, i)
            })
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut w0, mut w1) = (0.0, 0.0);
        for &(dist, i) in &d[..variant.k()] {
            let w = if variant.weighted() { 1.0 / (dist * dist) } else { 1.0 };
            if labels[i] == 1 {
                w1 += w
            } else {
                w0 += w
            }
        }
        out.push(u8::from(w1 > w0));
    }
    out
}

fn knn_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    for _ in 0..20 {
        let train = Array2::from_shape_fn((200, 10), |_| rng.random_range(-1.0..1.0));
        let labels: Vec<u8> = train
            .rows()
            .into_iter()
            .map(|r| u8::from(r[0] + 0.5 * r[1] + rng.random_range(-0.5..0.5) > 0.0))
            .collect();
        let query = Array2::from_shape_fn((50, 10), |_| rng.random_range(-1.0..1.0));
        let data = Dataset::from_parts(train.clone(), labels.clone()).unwrap();
        for variant in KnnVariant::ALL {
            let model = KnnModel::fit(&data, variant).map_err(|e| e.to_string())?;
            let got: Vec<u8> = model.scores(query.view()).iter().map(|&s| u8::from(s > 0.0)).collect();
            let want = brute_knn(&train, &labels, &query, variant);
            check(got == want, || format!("{variant:?} disagrees with the brute-force oracle"))?;
            compared += got.len();
        }
    }
    within(t.elapsed(), Duration::from_secs(10))?;
    Ok(format!("20 datasets x 6 variants, {compared} predictions identical"))
}

fn svm_correctness() -> Outcome {
    let t = Instant::now();
    let mut worst_kkt: f64 = 0.0;
    let mut worst_eq: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let w: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while labels.len() < 80 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            if s.abs() > 0.3 {
                rows.extend(x);
                labels.push(u8::from(s > 0.0));
            }
        }
        let x = Array2::from_shape_vec((80, 5), rows).unwrap();
        let data = Dataset::from_parts(x.clone(), labels.clone()).unwrap();
        let model = SvmModel::fit(&data, Kernel::Linear, SmoOptions::default()).map_err(|e| e.to_string())?;
        let pred: Vec<u8> = model.decision(x.view()).iter().map(|&f| u8::from(f > 0.0)).collect();
        check(pred == labels, || format!("seed {seed}: training accuracy below 100%"))?;

        let z = Standardizer::fit(x.view()).transform(x.view());
        let k = Kernel::Linear.matrix(z.view(), z.view());
        let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let sol = smo(&k, &y, SmoOptions::default()).map_err(|e| e.to_string())?;
        let f: Vec<f64> = (0..y.len())
            .map(|i| (0..y.len()).map(|j| sol.alpha[j] * y[j] * k[[j, i]]).sum::<f64>() + sol.bias)
            .collect();
        worst_kkt = worst_kkt.max(kkt_violation(&sol.alpha, &y, &f, 1.0));
        worst_eq = worst_eq.max(sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs());
    }
    check(worst_kkt <= 1e-3, || format!("KKT violation {worst_kkt:e}"))?;
    check(worst_eq < 1e-6, || format!("|sum alpha y| = {worst_eq:e}"))?;

    let xor = Array2::from_shape_vec((4, 2), vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    let data = Dataset::from_parts(xor.clone(), vec![0, 0, 1, 1]).unwrap();
    let model = ClassifierSpec::new(ClassifierKind::QuadraticSvm).fit(&data).map_err(|e| e.to_string())?;
    let pred = model.predict_batch(xor.view()).map_err(|e| e.to_string())?;
    check(pred == vec![0, 0, 1, 1], || format!("quadratic XOR predictions {pred:?}"))?;
    within(t.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "10/10 separable sets at 100%, max KKT violation {worst_kkt:.1e}, max |sum alpha y| {worst_eq:.1e}, XOR solved"
    ))
}

fn ann_gradient_check() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for net in 0..20u64 {
        let x_dim = rng.random_range(1..=5);
        let g = rng.random_range(1..=4);
        let mut cfg = AnnConfig::new(x_dim, g);
        cfg.hidden_activation = HiddenActivation::Tansig;
        cfg.output_activation = if net % 2 == 0 {
            OutputActivation::Sigmoid
        } else {
            OutputActivation::Softmax
        };
        cfg.seed = net;
        let mut model = AnnModel::init(cfg).map_err(|e| e.to_string())?;
        for k in 0..model.params.len() {
            *model.params.get_mut(k) = rng.random_range(-1.0..1.0);
        }
        let n = rng.random_range(3..=8);
        let x = Array2::from_shape_fn((n, x_dim), |_| rng.random_range(-2.0..2.0));
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let (_, grad) = model.loss_and_grad(x.view(), &labels).map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = grad.iter().collect();
        for (k, &a) in analytic.iter().enumerate() {
            let orig = *model.params.get_mut(k);
            *model.params.get_mut(k) = orig + h;
            let up = model.loss(x.view(), &labels).map_err(|e| e.to_string())?;
            *model.params.get_mut(k) = orig - h;
            let down = model.loss(x.view(), &labels).map_err(|e| e.to_string())?;
            *model.params.get_mut(k) = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    check(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    within(t.elapsed(), Duration::from_secs(10))?;
    Ok(format!("20 tanh nets, max relative error {worst:.1e}"))
}

fn adam_first_step() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lr = 1e-3;
    let config = AdamConfig {
        epsilon: 1e-12,
        ..AdamConfig::default()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut params = Params::zeros(6, 5, 2);
        for k in 0..params.len() {
            *params.get_mut(k) = rng.random_range(-1.0..1.0);
        }
        let mut grads = Params::zeros(6, 5, 2);
        for k in 0..grads.len() {
            let mag = 10f64.powf(rng.random_range(-2.0..2.0));
            *grads.get_mut(k) = if rng.random() { mag } else { -mag };
        }
        let before: Vec<f64> = params.iter().collect();
        let mut adam = AdamState::new(&params, config);
        adam.step(&mut params, &grads, false).map_err(|e| e.to_string())?;
        for ((b, a), g) in before.iter().zip(params.iter()).zip(grads.iter()) {
            worst = worst.max((a - b + lr * g.signum()).abs());
        }
    }
    check(worst < 1e-9 * lr, || format!("max |dw + lr sign(g)| = {worst:e}"))?;
    Ok(format!("max |dw + lr sign(g)| = {worst:.1e} (bound {:.0e})", 1e-9 * lr))
}

fn accuracy_arithmetic() -> Outcome {
    let acc = accuracy(&ConfusionMatrix::new(1836, 65, 328, 147)).map_err(|e| e.to_string())?;
    check((acc - 0.835).abs() <= 0.001, || format!("accuracy {acc}"))?;
    check((acc - 1983.0 / 2376.0).abs() < 1e-15, || format!("accuracy {acc} != 1983/2376"))?;
    Ok(format!("accuracy {:.4}% vs reported 83.50%", acc * 100.0))
}

/// The benchmark patch set, shared by criteria 9, 10 and 12.
struct Bench {
    approx: Dataset,
    sets: Vec<(String, Dataset)>,
}

fn bench_set() -> Result<Bench, String> {
    let patches = gen_patches(2378, DEFAULT_DEFECT_FRACTION, 42, &SynthParams::default()).map_err(|e| e.to_string())?;
    let images: Vec<GrayImage> = patches.iter().map(|p| p.image.clone()).collect();
    let labels: Vec<u8> = patches.iter().map(|p| p.label).collect();
    let ids: Vec<String> = (0..images.len()).map(|i| format!("patch_{i:05}")).collect();
    let params = EdgeParams::default();
    let sets = Descriptor::EDGE
        .iter()
        .map(|&d| Ok((d.to_string(), build_dataset(&images, &labels, &ids, d, &params)?)))
        .collect::<defect_vision::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let approx = sets
        .iter()
        .find(|(n, _)| *n == Descriptor::Edge(EdgeMethod::ApproxCanny).to_string())
        .unwrap()
        .1
        .clone();
    Ok(Bench { approx, sets })
}

fn protocol_reproduction(bench: &Bench) -> Outcome {
    let data = &bench.approx;
    check(data.class_counts() == [1903, 475], || format!("class counts {:?}", data.class_counts()))?;
    let rep = cross_validate(data, &ClassifierSpec::new(ClassifierKind::Majority), 5, 42).map_err(|e| e.to_string())?;
    check(rep.confusion.total() == 2378, || format!("pooled total {}", rep.confusion.total()))?;
    check(rep.confusion.tn == 1903 && rep.confusion.fp == 0, || format!("{:?}", rep.confusion))?;
    check(rep.accuracy == 1903.0 / 2378.0, || format!("accuracy {}", rep.accuracy))?;
    Ok(format!("pooled total 2378, majority baseline 1903/2378 = {:.2}%", rep.accuracy * 100.0))
}

fn end_to_end(bench: &Bench, build_time: Duration) -> Outcome {
    let t = Instant::now();
    let table = run_grid(&bench.sets, ClassifierKind::grid(), 5, 42, 42).map_err(|e| e.to_string())?;
    let grid_time = t.elapsed() + build_time;
    let col = Descriptor::Edge(EdgeMethod::ApproxCanny).to_string();
    let acc = table.get(ClassifierKind::FineGaussianSvm, &col).unwrap();
    let baseline = 1903.0 / 2378.0;
    let cm = table.confusion[ClassifierKind::grid().iter().position(|&k| k == ClassifierKind::FineGaussianSvm).unwrap()]
        [bench.sets.iter().position(|(n, _)| *n == col).unwrap()];
    check(acc >= 0.90, || format!("Fine Gaussian SVM + ApproxCanny accuracy {:.2}%", acc * 100.0))?;
    check(acc - baseline >= 0.08, || format!("margin over baseline {:.2} pp", (acc - baseline) * 100.0))?;
    within(grid_time, Duration::from_secs(30 * 60))?;
    Ok(format!(
        "ApproxCanny + Fine Gaussian SVM {:.2}% (+{:.2} pp over majority; tn {} fp {} fn {} tp {}), {}x{} grid in {:.0?}",
        acc * 100.0,
        (acc - baseline) * 100.0,
        cm.tn,
        cm.fp,
        cm.fn_,
        cm.tp,
        table.rows.len(),
        table.columns.len(),
        grid_time
    ))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn defect_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let stats = DefectStats::default();
    let params = SynthParams::default();
    let mut xs: Vec<f64> = (0..10_000)
        .map(|_| sample_extent(&mut rng, &stats, params.size_correlation).0 as f64)
        .collect();
    xs.sort_by(f64::total_cmp);
    let q = [quantile(&xs, 0.25), quantile(&xs, 0.5), quantile(&xs, 0.75)];
    for (got, want) in q.iter().zip([16.0, 20.0, 26.0]) {
        check((got - want).abs() <= 2.0, || format!("x quartiles {q:?}"))?;
    }
    let (lo, hi) = (format!("{:.4}", area_mm2(30.0)), format!("{:.4}", area_mm2(3195.0)));
    check(lo == "0.0422" && hi == "4.4930", || format!("area_mm2 gave {lo} / {hi}"))?;
    Ok(format!("x quartiles {}/{}/{}; 30 px -> {lo} mm2, 3195 px -> {hi} mm2", q[0], q[1], q[2]))
}

fn roc_validity(bench: &Bench) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let labels: Vec<u8> = (0..1000).map(|_| u8::from(rng.random_bool(0.3))).collect();
    let scores: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
    let random = roc(&labels, &scores).map_err(|e| e.to_string())?;
    let auc = random.auc();
    let tied = roc(&labels, &vec![0.5; 1000]).map_err(|e| e.to_string())?;
    let quantized: Vec<f64> = scores.iter().map(|s| (s * 4.0).floor()).collect();
    let coarse = roc(&labels, &quantized).map_err(|e| e.to_string())?;
    let svm = cross_validate(&bench.approx, &ClassifierSpec::new(ClassifierKind::FineGaussianSvm), 5, 42)
        .map_err(|e| e.to_string())?
        .roc
        .ok_or("no ROC from cross-validation")?;
    for (name, curve) in [("random", &random), ("tied", &tied), ("quantized", &coarse), ("svm", &svm)] {
        check(curve.is_valid(), || format!("{name} curve is not a monotone staircase"))?;
        let (first, last) = (curve.points[0], curve.points[curve.points.len() - 1]);
        check(
            (first.fpr, first.tpr) == (0.0, 0.0) && (last.fpr, last.tpr) == (1.0, 1.0),
            || format!("{name} curve endpoints"),
        )?;
    }
    check((0.45..=0.55).contains(&auc), || format!("random AUC {auc}"))?;
    Ok(format!("4 curves valid; random-score AUC {auc:.4}; SVM AUC {:.4}", svm.auc()))
}

fn run(id: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = t.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {id:>2} PASS  {title}: {detail} [{secs:.1}s]");
            true
        }
        Err(why) => {
            println!("criterion {id:>2} FAIL  {title}: {why} [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = Vec::new();
    ok.push(run(1, "feature lengths", feature_lengths));
    ok.push(run(2, "convolution oracle", convolution_oracle));
    ok.push(run(3, "LBP code oracle", lbp_oracle));
    ok.push(run(4, "kNN oracle", knn_oracle));
    ok.push(run(5, "SVM correctness", svm_correctness));
    ok.push(run(6, "ANN gradient check", ann_gradient_check));
    ok.push(run(7, "Adam first step", adam_first_step));
    ok.push(run(8, "accuracy arithmetic", accuracy_arithmetic));

    let t = Instant::now();
    let bench = bench_set();
    let build_time = t.elapsed();
    match &bench {
        Ok(b) => {
            ok.push(run(9, "protocol reproduction", || protocol_reproduction(b)));
            ok.push(run(10, "end-to-end synthetic benchmark", || end_to_end(b, build_time)));
        }
        Err(e) => {
            ok.push(run(9, "protocol reproduction", || Err(format!("benchmark set: {e}"))));
            ok.push(run(10, "end-to-end synthetic benchmark", || Err(format!("benchmark set: {e}"))));
        }
    }
    ok.push(run(11, "defect-size calibration", defect_calibration));
    match &bench {
        Ok(b) => ok.push(run(12, "ROC validity", || roc_validity(b))),
        Err(e) => ok.push(run(12, "ROC validity", || Err(format!("benchmark set: {e}")))),
    }

    let passed = ok.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed == ok.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
