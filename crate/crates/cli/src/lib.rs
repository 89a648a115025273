//! Command-line and HTTP front ends for the CAD risk model.
//!
//! [`api`] holds the transport-independent request handlers shared by the
//! `fcm-cad` binary and the HTTP service in [`service`].

pub mod api;
pub mod service;
pub mod weights;
