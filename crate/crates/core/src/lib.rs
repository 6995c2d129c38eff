pub mod config;
pub mod descriptors;
pub mod elastic;
pub mod error;
pub mod eval;
pub mod fmap;
pub mod genetic;
pub mod knn;
pub mod mesh;
pub mod pipeline;
pub mod shape;
pub mod spectral;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use mesh::{TriMesh, Vec3};
pub use shape::ShapeData;
