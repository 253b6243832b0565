pub mod groebner;
pub mod linalg;
pub mod poly;
pub mod loopfront;
pub mod cfinite;
pub mod invgen;
pub mod loopsynth;
pub mod smtio;
pub mod cli;
