//! Conforming virtual elements of arbitrary smoothness for polyharmonic
//! problems on polygonal meshes.

pub mod element;
pub mod error;
pub mod function;
pub mod mesh;
pub mod poly;
pub mod quad;
pub mod system;
pub mod verify;

pub use error::{Result, VemError};
pub use function::SmoothFunction;
