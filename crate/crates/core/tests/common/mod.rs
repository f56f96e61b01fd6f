//! Shared oracles for the integration tests.
#![allow(dead_code)]

pub mod gradcheck;
pub mod orders;
