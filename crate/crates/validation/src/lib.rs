//! Holds the `acceptance` test target. Run it with
//! `cargo test -p spinbus-validation --test acceptance`.
