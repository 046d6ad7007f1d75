//! Activation times from the anisotropic Eikonal equation.

pub mod fim;
pub mod roots;
pub mod tensor;

pub use fim::{solve_eikonal, ActivationMap, Root, RootSet};
pub use roots::default_root_set;
pub use tensor::{build_velocity_tensor, ConductionParams};
