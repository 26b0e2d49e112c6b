//! Simulator and planning stack for bilateral robot cable untangling.

pub mod diagram;
pub mod geom;
pub mod loki;
pub mod percept;
pub mod bruce;
pub mod executor;
pub mod spiderman;
pub mod bench;
