//! Shared inputs for the criterion benches.

use strokeforge::synth::{curve_corpus, glyph_suite};
use strokeforge::BinaryImage;

/// Thick glyphs and inked curves, in a fixed order.
pub fn corpus() -> Vec<(String, BinaryImage)> {
    let mut out: Vec<(String, BinaryImage)> = glyph_suite().into_iter().map(|g| (g.name, g.thick)).collect();
    out.extend(curve_corpus());
    out
}
