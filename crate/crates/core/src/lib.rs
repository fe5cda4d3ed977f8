pub mod cycles;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod inference;
pub mod io;
pub mod mle;
pub mod model;
pub mod oracle;
pub mod report;
pub mod rng;
