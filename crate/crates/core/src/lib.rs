pub mod error;
pub mod fluid;
pub mod linprog;
pub mod model;
pub mod optimality;
pub mod paths;
pub mod policy;
pub mod report;
pub mod sim;
pub mod stats;
