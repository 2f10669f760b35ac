//! Shared builders for the benchmark targets; see `benches/pipeline.rs`.

use scale_equate::{simulate_responses, PersonDist, ResponseMatrix, SimSpec, WeightSpec};

/// Simulated complete response matrix with unit weights.
pub fn matrix(severities: &[f64], n: usize, seed: u64) -> ResponseMatrix {
    let spec = SimSpec {
        severities: severities.to_vec(),
        codes: None,
        person: PersonDist::Normal { mean: 0.0, sd: 1.0 },
        n,
        seed,
        weights: WeightSpec::Unit,
        scale_id: "BENCH".into(),
    };
    simulate_responses(&spec).expect("valid benchmark spec")
}

/// Eight evenly spaced severities spanning [-2, 2].
pub fn spread() -> Vec<f64> {
    (0..8).map(|j| -2.0 + 4.0 * j as f64 / 7.0).collect()
}
