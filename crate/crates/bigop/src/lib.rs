pub mod backend;
pub mod cli;
pub mod datagen;
pub mod driver;
pub mod engine;
pub mod model;
pub mod prescription;
mod seed;
