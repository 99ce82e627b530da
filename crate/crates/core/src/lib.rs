//! Model order reduction for fully coupled thermoelastic vibration.
//!
//! The pipeline is: [`mesh`] and [`assembly`] build the coupled second-order
//! blocks, [`statespace`] arranges them as a symmetric first-order pencil,
//! [`reduction`] projects it with single-field or coupled bases, and
//! [`analysis`] and [`transient`] measure what the projection loses.

pub mod analysis;
pub mod assembly;
pub mod eigensolve;
pub mod error;
pub mod io;
pub mod mesh;
pub mod reduction;
pub mod scenario;
pub mod sparse;
pub mod statespace;
pub mod transient;

pub use error::{Error, Result};

/// Caps the threads used by dense kernels; `0` means all cores.
pub fn set_threads(n: usize) {
    let par = match n {
        1 => faer::Par::Seq,
        n => faer::Par::rayon(n),
    };
    faer::set_global_parallelism(par);
}
