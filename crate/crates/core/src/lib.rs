//! Simulator for composable multi-client blind verifiable delegated quantum
//! computation.
//!
//! Layers, bottom up: [`qsim`] (dense state substrate), [`authcode`]
//! (one-time pad and Clifford trap authentication), [`acframe`] (resources,
//! converters and distinguishing advantage), [`dqc`] (single-client
//! delegation backends), [`multiclient`] (the multi-client protocols and
//! their error bounds) and [`harness`] (adversaries, trials, reports, CLI
//! plumbing).

pub mod acframe;
pub mod authcode;
pub mod dqc;
pub mod harness;
pub mod multiclient;
pub mod qsim;
