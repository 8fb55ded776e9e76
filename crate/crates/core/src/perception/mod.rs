//! Detections to located, tracked objects and the events derived from them.

mod events;
mod fall;
mod locate;
mod replay;
mod tracker;

pub use events::{
    detect_hazard_proximity, detect_interaction, EmergencyConfig, EpisodeFilter, EventKind, PerceptionEvent,
};
pub use fall::{fall_window, FallDetector};
pub use locate::{frame_roi_depths, locate, locate_with_depths, roi_mean_depth, LocateConfig, LocatedDetection};
pub use replay::{read_replay, track_replay, write_replay_line, DepthRef, ReplayError, ReplayFrame};
pub use tracker::{BBoxSample, Track, TrackInput, TrackStatus, Tracker, TrackerConfig, TrackerError};
