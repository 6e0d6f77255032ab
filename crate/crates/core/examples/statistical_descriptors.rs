//! HPIV, HOG and uniform LBP on a 40x40 patch.
//!
//! cargo run --example statistical_descriptors

use defect_vision::descriptor::{extract, Descriptor};
use defect_vision::edge::EdgeParams;
use defect_vision::synth::{gen_indexed, SynthParams};

fn main() -> defect_vision::Result<()> {
    let patch = gen_indexed(9, 0, true, &SynthParams::default())?;
    let params = EdgeParams::default();
    for d in Descriptor::STATISTICAL {
        let v = extract(&patch.image, d, &params)?;
        let values = v.values();
        let nonzero = values.iter().filter(|&&x| x != 0.0).count();
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        println!("{:<6} {:>5} features, {:>5} non-zero, max {:.3}", d.to_string(), v.len(), nonzero, max);
    }

    // Intensity histogram peak: where the leather background sits.
    let h = extract(&patch.image, Descriptor::Hpiv, &params)?;
    let (peak, count) = h
        .values()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    println!("\nmost frequent gray level {peak} ({count} of 1600 pixels)");
    Ok(())
}
