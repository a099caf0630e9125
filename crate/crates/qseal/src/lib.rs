//! Monte Carlo simulator and analysis toolkit for entangled-photon
//! quantum seals on optical fiber links.
//!
//! A seal sends one photon of a time-energy-entangled pair through the
//! monitored fiber and keeps its twin on a protected reference path. Both
//! are analyzed by unbalanced Mach-Zehnder receivers; the two-photon
//! coincidence fringe visibility is then compared against the classical
//! correlation bound `1/sqrt(2)`. Any intercept-and-resend of the monitored
//! photon collapses the fringe, so a visibility above the bound certifies
//! the absence of such tampering while leaving the singles rates — the only
//! thing a passive observer changes — to a separate rate monitor.
//!
//! The crate is organized as a pipeline:
//!
//! - [`optics`]: closed-form interference statistics (the physics).
//! - [`components`]: sources, fibers, receivers, detectors as samplers.
//! - [`adversary`]: attack models that rewrite states and channels.
//! - [`sim`]: deterministic windowed Monte Carlo over a sealed link.
//! - [`analytics`]: coincidence matching, visibility estimation, the
//!   threshold test, rate monitoring, and the seal state machine.
//! - [`network`]: seal-aware routing over a link graph.
//! - [`config`], [`logfmt`], [`runner`]: scenario files, on-disk record
//!   formats, and the end-to-end run pipeline behind the CLI.
//!
//! All randomness flows from a single master seed through labeled
//! substreams ([`rng`]), so every artifact a run produces is reproducible
//! byte for byte.

pub mod adversary;
pub mod analytics;
pub mod components;
pub mod config;
pub mod logfmt;
pub mod network;
pub mod optics;
pub mod rng;
pub mod runner;
pub mod sim;
