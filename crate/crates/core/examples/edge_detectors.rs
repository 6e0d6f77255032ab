//! Runs all six edge detectors on one synthetic defect patch and prints the
//! ApproxCanny map as ASCII art.
//!
//! cargo run --example edge_detectors

use defect_vision::edge::{detect_edges, EdgeMethod, EdgeParams};
use defect_vision::image::resize_bilinear;
use defect_vision::synth::{gen_indexed, SynthParams};

fn main() -> defect_vision::Result<()> {
    let params = SynthParams::default();
    let defect = gen_indexed(3, 0, true, &params)?;
    let clean = gen_indexed(3, 1, false, &params)?;
    for b in &defect.blobs {
        println!("blob at ({}, {}), {}x{} px, dip {:.0}", b.left, b.top, b.width, b.height, b.dip);
    }

    let edge = EdgeParams::default();
    println!("\n{:<12} {:>8} {:>8}", "method", "defect", "clean");
    for method in EdgeMethod::ALL {
        let d = detect_edges(&resize_bilinear(&defect.image, 40, 40)?, method, &edge)?;
        let c = detect_edges(&resize_bilinear(&clean.image, 40, 40)?, method, &edge)?;
        println!("{:<12} {:>8} {:>8}", method.name(), d.count(), c.count());
    }

    let map = detect_edges(&resize_bilinear(&defect.image, 40, 40)?, EdgeMethod::ApproxCanny, &edge)?;
    println!("\napproxcanny, defect patch:");
    for r in 0..map.height() {
        let line: String = (0..map.width()).map(|c| if map.get(r, c) { '#' } else { '.' }).collect();
        println!("{line}");
    }
    Ok(())
}
