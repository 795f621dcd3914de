//! Per-pixel texture clustering and object extraction.

mod components;
mod kmeans;
mod object;

pub use components::{connected_components, Component};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use object::{
    extract_object, extract_object_with, largest_object, normalize_features, CountScope,
    ExtractedObject, Labeling,
};
