//! Trains the three-layer network on LBP features of a small synthetic set
//! and prints the loss curve and train/test accuracy.
//!
//! cargo run --example ann_training

use defect_vision::ann::{train_ann, AnnConfig};
use defect_vision::descriptor::{build_dataset, Descriptor};
use defect_vision::edge::EdgeParams;
use defect_vision::eval::Split;
use defect_vision::synth::{gen_patches, SynthParams};

fn main() -> defect_vision::Result<()> {
    let patches = gen_patches(300, 0.2, 17, &SynthParams::default())?;
    let images: Vec<_> = patches.iter().map(|p| p.image.clone()).collect();
    let labels: Vec<u8> = patches.iter().map(|p| p.label).collect();
    let ids: Vec<String> = (0..images.len()).map(|i| i.to_string()).collect();
    let data = build_dataset(&images, &labels, &ids, Descriptor::Lbp { cell: 16 }, &EdgeParams::default())?;

    let mut cfg = AnnConfig::new(data.n_features(), 50);
    cfg.seed = 3;
    let run = train_ann(&data, cfg, Split::new(75)?)?;
    for (epoch, loss) in run.loss_history.iter().enumerate().step_by(25) {
        println!("epoch {:>3}  loss {:.4}", epoch + 1, loss);
    }
    println!(
        "split {}: train {:.2}%, test {:.2}%",
        run.split,
        run.train.accuracy * 100.0,
        run.test.accuracy * 100.0
    );
    if let Some(roc) = &run.test.roc {
        println!("test AUC {:.3}", roc.auc());
    }
    Ok(())
}
