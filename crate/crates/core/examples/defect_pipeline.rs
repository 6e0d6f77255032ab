//! The full pipeline: synthetic patches -> ApproxCanny edge maps -> Fine
//! Gaussian SVM, cross-validated, then trained on everything, saved and
//! reloaded.
//!
//! cargo run --release --example defect_pipeline

use defect_vision::classify::{ClassifierKind, ClassifierSpec, TrainedModel};
use defect_vision::descriptor::{build_dataset, extract, Descriptor};
use defect_vision::edge::{EdgeMethod, EdgeParams};
use defect_vision::eval::cross_validate;
use defect_vision::synth::{gen_indexed, gen_patches, SynthParams};

fn main() -> defect_vision::Result<()> {
    let synth = SynthParams::default();
    let patches = gen_patches(600, 0.2, 5, &synth)?;
    let images: Vec<_> = patches.iter().map(|p| p.image.clone()).collect();
    let labels: Vec<u8> = patches.iter().map(|p| p.label).collect();
    let ids: Vec<String> = (0..images.len()).map(|i| i.to_string()).collect();
    let desc = Descriptor::Edge(EdgeMethod::ApproxCanny);
    let edge = EdgeParams::default();
    let data = build_dataset(&images, &labels, &ids, desc, &edge)?;

    let spec = ClassifierSpec::new(ClassifierKind::FineGaussianSvm);
    let report = cross_validate(&data, &spec, 5, 5)?;
    let majority = data.class_counts()[0] as f64 / data.n_samples() as f64;
    println!(
        "5-fold accuracy {:.2}% (majority baseline {:.2}%)",
        report.accuracy * 100.0,
        majority * 100.0
    );

    let model = spec.fit(&data)?;
    let path = std::env::temp_dir().join("fine-gaussian-svm.dvmd");
    model.save(&path)?;
    let model = TrainedModel::load(&path)?;

    // Fresh patches the model has never seen.
    for (i, defect) in [(10_000, true), (10_001, false), (10_002, true), (10_003, false)] {
        let patch = gen_indexed(99, i, defect, &synth)?;
        let x = extract(&patch.image, desc, &edge)?;
        println!(
            "new patch {i}: truth {}, predicted {}",
            u8::from(defect),
            model.predict(x.values())?
        );
    }
    Ok(())
}
