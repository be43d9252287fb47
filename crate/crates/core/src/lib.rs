pub mod analysis;
pub mod benders;
pub mod ingest;
pub mod lp;
pub mod model;
pub mod scenario;
pub mod synthetic;
