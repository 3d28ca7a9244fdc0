//! Event-based prediction suffix trees for asynchronous multichannel spike
//! streams, with sequential baselines, benchmark generation and scoring.

pub mod datagen;
pub mod error;
pub mod eval;
pub mod event;
pub mod extensions;
pub mod infer;
pub mod runner;
pub mod scenario;
pub mod tree;
pub mod verify;
pub mod vmm;

pub use error::{Error, Result};
pub use event::{Channel, Delay, Entry, Event, EventStream, HistoryWindow, Label, Subsequence, Time};
pub use infer::{Candidate, PredictionMatrix};
pub use tree::{EpstParams, EpstTree, NodeKind};
