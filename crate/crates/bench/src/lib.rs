//! Fixtures shared by the criterion benchmarks in `benches/`.

use signcon::{dataio, DataMatrix, LossFamily, LossSpec, SignPattern};

/// A benchmark problem: data, loss and a pattern constraining every other
/// coordinate.
pub struct Fixture {
    pub data: DataMatrix,
    pub loss: LossSpec,
    pub pattern: SignPattern,
}

/// Binary classification with `n` examples in `d` dimensions.
pub fn binary(n: usize, d: usize, family: LossFamily) -> Fixture {
    let ints: Vec<i64> = (0..d as i64).map(|h| [1, 0, -1, 0][h as usize % 4]).collect();
    let pattern = SignPattern::from_ints(&ints).expect("valid signs");
    let data = dataio::synth_classification(17, n, d, &pattern, 0.3).expect("valid sizes");
    let loss = LossSpec::new(family, data.labels()).expect("binary labels");
    Fixture { data, loss, pattern }
}

/// `m`-class problem with the binary pattern broadcast to every class.
pub fn multiclass(n: usize, d: usize, m: usize, family: LossFamily) -> Fixture {
    let ints: Vec<i64> = (0..d as i64).map(|h| [1, 0, -1, 0][h as usize % 4]).collect();
    let pattern = SignPattern::from_ints(&ints).and_then(|p| p.broadcast(m)).expect("valid signs");
    let data = dataio::synth_multiclass(17, n, d, m, &pattern, 0.3).expect("valid sizes");
    let loss = LossSpec::new(family, data.labels()).expect("class labels");
    Fixture { data, loss, pattern }
}
