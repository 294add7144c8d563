//! Two-phase flow in 2D porous media with nanoparticle transport,
//! retention, and porosity/permeability damage, solved by an iterative
//! implicit-pressure explicit-saturation scheme.

pub mod driver;
pub mod error;
pub mod flow;
pub mod grid;
pub mod io;
pub mod petrophysics;
pub mod sparse;
pub mod transport;

pub use error::{Error, Result};
