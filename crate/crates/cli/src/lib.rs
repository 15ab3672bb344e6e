//! HTTP service and command-line front end for `stdqa-core`.

pub mod cli;
pub mod http;
