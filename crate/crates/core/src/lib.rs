//! Open-system simulation of microwave-dressed spin qubits coupled to a
//! mechanical resonator.

pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod models;
pub mod dynamics;
pub mod spectra;
pub mod gates;
pub mod donors;

pub use error::{Error, Result};
pub use hilbert::{HilbertSpace, Operator, PauliAxis, State};
pub use linalg::{CMatrix, C64};
