mod linalg;
pub mod baseline;
pub mod boost;
pub mod cli;
pub mod data;
pub mod error;
pub mod interpret;
pub mod io;
pub mod loss;
pub mod model;
pub mod sim;
pub mod threshold;
pub mod tree;
pub mod tuning;
