mod common;

use common::CASES;

#[test]
fn interlacing() {
    common::interlacing(CASES).unwrap();
}

#[test]
fn lowner_consistency() {
    common::lowner(CASES).unwrap();
}

#[test]
fn stable_gap_branches() {
    common::stable_gaps(CASES).unwrap();
}

#[test]
fn split_reassembly() {
    common::split_reassembly(CASES).unwrap();
}

#[test]
fn tree_audit() {
    common::tree_audit(CASES).unwrap();
}
