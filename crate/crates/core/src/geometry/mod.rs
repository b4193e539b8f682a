//! Triangle meshes, poses, bounds and ray queries.

mod bvh;
mod io;
mod mesh;
pub mod primitives;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use primitives::PrimitiveShape;
pub use bvh::{intersect_triangle, Bvh, BvhNode, Hit, Ray};
pub use io::{
    load_mesh, load_mesh_auto, parse_obj, parse_stl, to_binary_stl, to_obj_string, MeshFormat,
};
pub use mesh::{
    drop_to_ground, mesh_aabb, transform_mesh, transform_mesh_affine, translate_mesh, Aabb,
    Affine, Pose, TriangleMesh, DEGENERATE_AREA,
};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("empty mesh")]
    Empty,
    #[error("{}: empty mesh", .0.display())]
    EmptyFile(PathBuf),
    #[error("malformed geometry: {0}")]
    Malformed(String),
    #[error("{}: malformed geometry: {}", .0.display(), .1)]
    MalformedFile(PathBuf, String),
    #[error("{}: unsupported mesh format (expected .obj or .stl)", .0.display())]
    UnknownFormat(PathBuf),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("empty scene: no triangles to build a BVH from")]
    EmptyScene,
}

impl MeshError {
    /// Attaches a file path to errors raised while parsing an in-memory buffer.
    pub fn at(self, path: &Path) -> MeshError {
        match self {
            MeshError::Parse { line, message, .. } => MeshError::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            MeshError::Empty => MeshError::EmptyFile(path.to_path_buf()),
            MeshError::Malformed(m) => MeshError::MalformedFile(path.to_path_buf(), m),
            other => other,
        }
    }
}
