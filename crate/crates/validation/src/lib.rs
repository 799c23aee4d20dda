//! Holds the `acceptance` test target, which checks every acceptance
//! criterion at its stated tolerance and prints one pass/fail line each.
//! Run it alone with `cargo test -p cpi-validation --test acceptance`.
