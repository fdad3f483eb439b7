//! Finite-dimensional C*-algebra workbench: algebras, states and channels,
//! the GNS construction, executable checks of no-signaling and no-broadcasting
//! results, a commitment protocol with its attacks, and classical phase spaces.

pub mod algebra;
pub mod ansatz;
pub mod bitcommit;
pub mod classical;
pub mod error;
pub mod gns;
pub mod linalg;
pub mod optimize;
pub mod scenario;
pub mod states;
pub mod theorems;
