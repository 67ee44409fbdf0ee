//! Command-line companion to the `hankel-pe` library: random instance
//! generation, verification sweeps, and file-format plumbing.

pub mod gen;
pub mod report;
pub mod sweep;
pub mod sysio;
