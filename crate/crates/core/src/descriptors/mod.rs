//! Landmark detection and landmark descriptors.

mod landmarks;
mod wks;

pub use landmarks::{
    agd, centers_function, detect_landmarks, filter_by_separation, landmark_adjacency,
    local_extrema, Category, ExtremumKind, Landmark, LandmarkEntry, LandmarkJson, LandmarkParams,
    LandmarkSet,
};
pub use wks::{
    normalized_distance_matrix, wks, wks_distance, WksTable, DEFAULT_ENERGY_SCALES,
    DEFAULT_SIGMA_STEPS,
};
