//! Capture-recapture models plugged into the staged engine.

pub mod m0;
pub mod mh;
pub mod scr;
