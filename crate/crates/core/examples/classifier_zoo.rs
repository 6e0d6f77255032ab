//! Fits every classifier on a noisy two-ring problem and reports hold-out
//! accuracy.
//!
//! cargo run --example classifier_zoo

use defect_vision::classify::{ClassifierKind, ClassifierSpec};
use defect_vision::dataset::Dataset;
use defect_vision::eval::{holdout, Split};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> defect_vision::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 600;
    let mut x = Array2::zeros((n, 6));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // Inner disc = defect, outer ring = clean; four nuisance columns.
        let defect = i % 4 == 0;
        let r = if defect { rng.random_range(0.0..1.0) } else { rng.random_range(1.2..2.2) };
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        x[[i, 0]] = r * t.cos();
        x[[i, 1]] = r * t.sin();
        for j in 2..6 {
            x[[i, j]] = rng.random_range(-1.0..1.0);
        }
        labels.push(u8::from(defect));
    }
    let data = Dataset::from_parts(x, labels)?;
    let split = Split::new(75)?;

    println!("{:<24} {:>9}", "classifier", "accuracy");
    for &kind in ClassifierKind::ALL.iter() {
        let spec = ClassifierSpec::new(kind).with_seed(5);
        let report = holdout(&data, &spec, split, 11)?;
        println!("{:<24} {:>8.2}%", kind.label(), report.accuracy * 100.0);
    }
    Ok(())
}
