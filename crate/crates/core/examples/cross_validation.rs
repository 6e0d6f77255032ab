//! Stratified 5-fold cross-validation with a pooled confusion matrix and ROC.
//!
//! cargo run --example cross_validation

use defect_vision::classify::{ClassifierKind, ClassifierSpec};
use defect_vision::descriptor::{build_dataset, Descriptor};
use defect_vision::edge::EdgeParams;
use defect_vision::eval::cross_validate;
use defect_vision::synth::{gen_patches, SynthParams};

fn main() -> defect_vision::Result<()> {
    let patches = gen_patches(400, 0.2, 21, &SynthParams::default())?;
    let images: Vec<_> = patches.iter().map(|p| p.image.clone()).collect();
    let labels: Vec<u8> = patches.iter().map(|p| p.label).collect();
    let ids: Vec<String> = (0..images.len()).map(|i| i.to_string()).collect();
    let data = build_dataset(&images, &labels, &ids, Descriptor::Hog { cell: 8 }, &EdgeParams::default())?;

    for kind in [ClassifierKind::Majority, ClassifierKind::LinearSvm, ClassifierKind::BaggedTrees] {
        let report = cross_validate(&data, &ClassifierSpec::new(kind).with_seed(1), 5, 1)?;
        let cm = report.confusion;
        let folds: Vec<String> = report
            .per_fold
            .unwrap_or_default()
            .iter()
            .map(|a| format!("{:.1}", a * 100.0))
            .collect();
        println!("{}", kind.label());
        println!("  pooled accuracy {:.2}%  (folds: {})", report.accuracy * 100.0, folds.join(" "));
        println!("  tn {} fp {} fn {} tp {}", cm.tn, cm.fp, cm.fn_, cm.tp);
        if let Some(roc) = report.roc {
            println!("  AUC {:.3} over {} ROC points", roc.auc(), roc.points.len());
        }
    }
    Ok(())
}
