#![no_std]

extern crate alloc;

pub mod algebra;
pub mod bch;
pub mod content;
pub mod coarse;
pub mod cubes;
pub mod decompose;
pub mod discrete;
pub mod error;
pub mod group;
pub mod hom;
pub mod lattice;
pub mod linalg;
pub mod maps;
pub mod norm;
pub mod presets;
pub mod scalar;
pub mod spatial;

pub use error::{Error, Result};
