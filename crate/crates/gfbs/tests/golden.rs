//! The seeded generator is its own specification: these tests pin three
//! generated instances byte-for-byte so any change to the random stream or
//! the serialization format is caught. Regenerate deliberately with
//! `cargo run -p gfbs --example gen_golden`.

use gfbs::bench::{generate, oracle_solve, Dims, ProblemKind};
use std::path::Path;

fn check(file: &str, kind: ProblemKind, seed: u64, dims: Dims) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(file);
    let pinned = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
    let fresh = generate(kind, seed, dims).unwrap().serialize();
    assert_eq!(fresh, pinned, "{file} drifted from the pinned instance");
}

#[test]
fn equality_qp_seed0_is_pinned() {
    check(
        "equality_qp_seed0_n3_m1.txt",
        ProblemKind::EqualityQP,
        0,
        Dims { n: 3, m: 1 },
    );
}

#[test]
fn lasso_seed7_is_pinned() {
    check(
        "lasso_seed7_n20_m50.txt",
        ProblemKind::Lasso,
        7,
        Dims { n: 20, m: 50 },
    );
}

#[test]
fn tv1d_seed1_is_pinned() {
    check("tv1d_seed1_n64.txt", ProblemKind::Tv1D, 1, Dims { n: 64, m: 0 });
}

#[test]
fn oracle_is_bit_for_bit_idempotent() {
    let problem = generate(ProblemKind::Lasso, 7, Dims { n: 20, m: 50 }).unwrap();
    let a = oracle_solve(&problem).unwrap();
    let b = oracle_solve(&problem).unwrap();
    assert_eq!(a.primal.as_slice(), b.primal.as_slice());
    assert!(a.kkt_residual <= 1e-10);
}
