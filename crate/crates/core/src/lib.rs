pub mod affine_orbits;
pub mod arith;
pub mod chart;
pub mod combin;
pub mod diffop;
pub mod dmod;
pub mod error;
pub mod exec;
pub mod indigenous;
pub mod io;
pub mod linalg;
pub mod tango;
pub mod upoly;
