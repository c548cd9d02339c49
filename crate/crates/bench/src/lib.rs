//! Shared fixtures for the criterion benchmarks.

use mintt::{builtin_model, deciles, simulate, Query, TimeSeries};

/// A simulated series from one of the builtin models, with its deciles as
/// intervention values.
pub fn fixture(model_id: u32, n: usize) -> (TimeSeries, Query) {
    let model = builtin_model(model_id).expect("valid model id");
    let ts = simulate(&model, n, 42, 500).expect("simulation succeeds");
    let d = deciles(&ts.column(0).expect("column 0")).expect("deciles");
    let query = Query::new(0, 0, 2, d.to_vec());
    (ts, query)
}
