//! Desk-scale task-and-motion planning with learned diffusion samplers.
//!
//! The library trains a point-cloud autoencoder, a trajectory diffusion model
//! and state/collision classifiers against a built-in 2-D quasi-static
//! simulator of a hinged-door appliance, then composes the learned samplers
//! with engineered ones (grasps, placements, RRT-connect motion) inside a
//! stream-based planner.

pub mod nn;
