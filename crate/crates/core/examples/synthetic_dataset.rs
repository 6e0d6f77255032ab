//! Writes a small synthetic patch set with its manifest, reads it back and
//! summarizes the defect sizes in pixels and square millimetres.
//!
//! cargo run --example synthetic_dataset [-- OUT_DIR]

use std::path::PathBuf;

use defect_vision::synth::{area_mm2, gen_dataset, gen_indexed, load_manifest, SynthParams};

fn main() -> defect_vision::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("defect-vision-synth"));
    let params = SynthParams::default();
    let manifest = gen_dataset(50, 0.2, 8, &params, &out)?;
    let (images, labels, _) = load_manifest(out.join("manifest.csv"))?;
    println!(
        "{} patches of {}x{} in {}, {} defective",
        images.len(),
        images[0].width(),
        images[0].height(),
        out.display(),
        labels.iter().filter(|&&l| l == 1).count()
    );
    assert_eq!(manifest.len(), images.len());

    // Patches are a pure function of (seed, index): regenerate the defects
    // to look at their blobs.
    for (i, &l) in labels.iter().enumerate().filter(|(_, &l)| l == 1).take(5) {
        let patch = gen_indexed(8, i, l == 1, &params)?;
        for b in &patch.blobs {
            println!(
                "patch {i:>2}: {:>2}x{:<2} px box, {:>4} px^2 = {:.4} mm^2",
                b.width,
                b.height,
                b.area(),
                area_mm2(b.area() as f64)
            );
        }
    }
    Ok(())
}
