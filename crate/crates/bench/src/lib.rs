//! Fixtures shared by the criterion benches.

use aspca_core::simgen::{self, Setting};
use aspca_core::{DataMatrix, SymmetricMatrix};

/// One draw from a reference setting at `n = ⌈√d⌉`.
pub fn sample(setting: Setting, d: usize, seed: u64) -> DataMatrix {
    let spec = setting.spec(d).expect("valid setting");
    simgen::sample(&spec, simgen::n_for_d(d), seed)
        .expect("sampling succeeds")
        .data
}

/// Dual covariance of an `s1` draw, for eigensolver timings.
pub fn dual(d: usize, n: usize, seed: u64) -> SymmetricMatrix {
    let spec = Setting::S1.spec(d).expect("valid setting");
    let x = simgen::sample(&spec, n, seed).expect("sampling succeeds").data;
    aspca_core::dual_covariance(&x)
}
