//! Multi-exit evacuation simulation.
//!
//! Pedestrians are discs in a square room with two exits. Each frame a
//! direction policy (a Rainbow DQN over egocentric grayscale rasters, or a
//! simple geometric baseline) picks one of eight headings per pedestrian,
//! ORCA turns the preferred velocities into collision-free ones, and the
//! world advances one frame. The harness trains the policy, evaluates it
//! over scenario families, and writes metrics, frames, and checkpoints.

pub mod checkpoint;
pub mod config;
pub mod env;
pub mod geometry;
pub mod harness;
pub mod nn;
pub mod orca;
pub mod raster;
pub mod replay;
pub mod reward;
pub mod trainer;
