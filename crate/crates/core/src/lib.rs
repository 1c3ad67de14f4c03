pub mod cli;
pub mod domain;
pub mod live;
pub mod lmu;
pub mod metering;
pub mod protocol;
pub mod simnet;
pub mod sln;
