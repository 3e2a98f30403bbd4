//! Regenerate the golden instance files pinned by `tests/golden.rs`.
//!
//! Run from the workspace root:
//! `cargo run -p gfbs --example gen_golden`

use gfbs::bench::{generate, Dims, ProblemKind};
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    std::fs::create_dir_all(&dir).unwrap();
    let cases = [
        ("equality_qp_seed0_n3_m1.txt", ProblemKind::EqualityQP, 0, Dims { n: 3, m: 1 }),
        ("lasso_seed7_n20_m50.txt", ProblemKind::Lasso, 7, Dims { n: 20, m: 50 }),
        ("tv1d_seed1_n64.txt", ProblemKind::Tv1D, 1, Dims { n: 64, m: 0 }),
    ];
    for (file, kind, seed, dims) in cases {
        let instance = generate(kind, seed, dims).unwrap();
        let path = dir.join(file);
        std::fs::write(&path, instance.serialize()).unwrap();
        println!("wrote {}", path.display());
    }
}
