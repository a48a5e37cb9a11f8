//! Small reference surfaces used by tests, examples and the CLI.

use crate::error::Result;
use crate::surface::{extract_surface, Axis, Face, Sign, SurfelId, SurfelSurface, VoxelCoord};

/// The six faces of the voxel at the origin.
pub fn single_voxel() -> SurfelSurface {
    extract_surface([VoxelCoord::new(0, 0, 0)]).expect("a single voxel is a valid surface")
}

/// Surfels of an `nx × ny` flat patch: the `+Z` faces of voxels `(i, j, 0)`.
pub fn flat_patch_surfels(nx: i64, ny: i64) -> Vec<SurfelId> {
    let up = Face::new(Axis::Z, Sign::Plus);
    (0..nx)
        .flat_map(|i| (0..ny).map(move |j| SurfelId::new(VoxelCoord::new(i, j, 0), up)))
        .collect()
}

/// A flat `nx × ny` patch lying in the plane `z = 1`, with boundary.
pub fn flat_patch(nx: i64, ny: i64) -> Result<SurfelSurface> {
    SurfelSurface::from_surfels(flat_patch_surfels(nx, ny))
}

/// Voxels `(i, j, −1 − i − j)` for `0 ≤ i, j < n`, one layer of the digital
/// plane `x + y + z = −1`.
pub fn standard_plane_voxels(n: i64) -> Vec<VoxelCoord> {
    (0..n)
        .flat_map(|i| (0..n).map(move |j| VoxelCoord::new(i, j, -1 - i - j)))
        .collect()
}

/// Surfels of the standard digital plane: the `+X`, `+Y`, `+Z` faces of
/// [`standard_plane_voxels`]. Corners have coordinate sums 0, 1 or 2, so the
/// black graph is hexagonal and the white one triangular.
pub fn standard_plane_surfels(n: i64) -> Vec<SurfelId> {
    standard_plane_voxels(n)
        .into_iter()
        .flat_map(|v| Axis::ALL.map(|a| SurfelId::new(v, Face::new(a, Sign::Plus))))
        .collect()
}

pub fn standard_plane_patch(n: i64) -> Result<SurfelSurface> {
    SurfelSurface::from_surfels(standard_plane_surfels(n))
}

/// The unit normal of the standard plane.
pub fn standard_plane_normal() -> [f64; 3] {
    let s = 1.0 / 3f64.sqrt();
    [s, s, s]
}
