//! Cochains on the uniform cubical grid over `[0,1]^m`.

mod boundary;
mod calc;
mod cochain;
mod group;
pub mod io;
mod space;

pub use boundary::FaceTrace;
pub use calc::GridCalculus;
pub use cochain::{DualCochain, GridForm};
pub use group::{log_coords, pass, CellGroups, GridGroupField};
pub use space::{next_index, Block, Grid};
