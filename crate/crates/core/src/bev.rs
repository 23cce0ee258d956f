//! Bird's-eye-view projection of boxes and rotated crop/pool over grids.
//!
//! Grid coordinates are in cells: column `x`, row `y`, cell `(row, col)`
//! covering `[col, col + 1) x [row, row + 1)` with its center at
//! `(col + 0.5, row + 0.5)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::map_ordered;
use crate::scene::Box3D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BevError {
    #[error("invalid BEV config: {0}")]
    InvalidConfig(String),
    #[error("projection produced a non-finite value")]
    NonFinite,
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),
    #[error("grid shape {height}x{width}x{channels} does not match {len} values")]
    Shape { height: usize, width: usize, channels: usize, len: usize },
    #[error("grid contains a non-finite value")]
    NonFiniteGrid,
    #[error("no cell center lies inside the rectangle")]
    EmptyRegion,
    #[error("malformed grid file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BevConfig {
    /// Meters per voxel in the ground plane.
    pub voxel_factor: f64,
    /// Voxels per feature cell (backbone stride).
    pub out_size_factor: u32,
    /// `[x_min, y_min, z_min, x_max, y_max, z_max]` in meters.
    pub pc_range: [f64; 6],
}

impl Default for BevConfig {
    fn default() -> Self {
        BevConfig { voxel_factor: 0.075, out_size_factor: 8, pc_range: [-54.0, -54.0, -5.0, 54.0, 54.0, 3.0] }
    }
}

impl BevConfig {
    pub fn validate(&self) -> Result<(), BevError> {
        if !(self.voxel_factor.is_finite() && self.voxel_factor > 0.0) {
            return Err(BevError::InvalidConfig("voxel_factor must be positive".into()));
        }
        if self.out_size_factor < 1 {
            return Err(BevError::InvalidConfig("out_size_factor must be at least 1".into()));
        }
        for axis in 0..3 {
            let (lo, hi) = (self.pc_range[axis], self.pc_range[axis + 3]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(BevError::InvalidConfig(format!("pc_range axis {axis} needs min < max")));
            }
        }
        Ok(())
    }

    /// Meters per feature cell.
    pub fn cell_size(&self) -> f64 {
        self.voxel_factor * f64::from(self.out_size_factor)
    }

    /// `(height, width)` of the feature grid covering the range.
    pub fn grid_shape(&self) -> (usize, usize) {
        let cells = |axis: usize| ((self.pc_range[axis + 3] - self.pc_range[axis]) / self.cell_size()).round() as usize;
        (cells(1), cells(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    /// `(x_m, y_m)` in cells.
    pub center: [f64; 2],
    /// `(hx, hy)` in cells, along the rect's own axes.
    pub half_extents: [f64; 2],
    /// Radians, counterclockwise from the grid x axis.
    pub yaw: f64,
}

impl RotatedRect {
    pub fn new(center: [f64; 2], half_extents: [f64; 2], yaw: f64) -> Result<Self, BevError> {
        if !center.iter().chain(&half_extents).chain([&yaw]).all(|v| v.is_finite()) {
            return Err(BevError::InvalidRect("non-finite value".into()));
        }
        if half_extents.iter().any(|h| *h <= 0.0) {
            return Err(BevError::InvalidRect("half extents must be positive".into()));
        }
        Ok(RotatedRect { center, half_extents, yaw })
    }

    /// Unit vectors of the rect's x and y axes.
    fn axes(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.yaw.sin_cos();
        ([c, s], [-s, c])
    }

    /// Corners in counterclockwise order, starting from offset (-hx, -hy).
    pub fn vertices(&self) -> [[f64; 2]; 4] {
        let [hx, hy] = self.half_extents;
        let (s, c) = self.yaw.sin_cos();
        [[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]]
            .map(|[dx, dy]| [self.center[0] + c * dx - s * dy, self.center[1] + s * dx + c * dy])
    }

    /// Boundary-inclusive point membership.
    pub fn contains(&self, point: [f64; 2]) -> bool {
        let d = [point[0] - self.center[0], point[1] - self.center[1]];
        let (u, v) = self.axes();
        (d[0] * u[0] + d[1] * u[1]).abs() <= self.half_extents[0]
            && (d[0] * v[0] + d[1] * v[1]).abs() <= self.half_extents[1]
    }

    /// Tight axis-aligned rectangle around the rotated one.
    pub fn circumscribed(&self) -> RotatedRect {
        let [hx, hy] = self.half_extents;
        let (s, c) = self.yaw.sin_cos();
        RotatedRect {
            center: self.center,
            half_extents: [hx * c.abs() + hy * s.abs(), hx * s.abs() + hy * c.abs()],
            yaw: 0.0,
        }
    }

    /// Axis-aligned bounds `[x_min, y_min, x_max, y_max]`.
    fn bounds(&self) -> [f64; 4] {
        let outer = self.circumscribed();
        let [cx, cy] = outer.center;
        let [hx, hy] = outer.half_extents;
        [cx - hx, cy - hy, cx + hx, cy + hy]
    }
}

pub fn rotated_vertices(rect: &RotatedRect) -> [[f64; 2]; 4] {
    rect.vertices()
}

pub fn contains(rect: &RotatedRect, point: [f64; 2]) -> bool {
    rect.contains(point)
}

pub fn circumscribed_rect(rect: &RotatedRect) -> RotatedRect {
    rect.circumscribed()
}

/// Maps a box's ground-plane footprint into grid cells. Height is dropped
/// and yaw carried over unchanged.
pub fn project_box_to_bev(bbox: &Box3D, config: &BevConfig) -> Result<RotatedRect, BevError> {
    config.validate()?;
    let cell = config.cell_size();
    let center = [(bbox.x - config.pc_range[0]) / cell, (bbox.y - config.pc_range[1]) / cell];
    let half = [bbox.x_size / (2.0 * cell), bbox.y_size / (2.0 * cell)];
    if !center.iter().chain(&half).chain([&bbox.yaw]).all(|v| v.is_finite()) {
        return Err(BevError::NonFinite);
    }
    RotatedRect::new(center, half, bbox.yaw)
}

/// `height x width x channels` feature map, row-major with channels last.
#[derive(Debug, Clone, PartialEq)]
pub struct BevGrid {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Structured description of the binary grid layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub dtype: String,
    pub layout: String,
    pub header_bytes: usize,
}

const HEADER_BYTES: usize = 24;

impl BevGrid {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self, BevError> {
        let expected = height.checked_mul(width).and_then(|n| n.checked_mul(channels));
        if height == 0 || width == 0 || channels == 0 || expected != Some(data.len()) {
            return Err(BevError::Shape { height, width, channels, len: data.len() });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(BevError::NonFiniteGrid);
        }
        Ok(BevGrid { height, width, channels, data })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, BevError> {
        let mut data = Vec::with_capacity(height * width * channels);
        for row in 0..height {
            for col in 0..width {
                for ch in 0..channels {
                    data.push(f(row, col, ch));
                }
            }
        }
        BevGrid::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Feature vector of cell `(row, col)`.
    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            height: self.height,
            width: self.width,
            channels: self.channels,
            dtype: "f64le".into(),
            layout: "row-major HxWxC after a u64le H, W, C header".into(),
            header_bytes: HEADER_BYTES,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + 8 * self.data.len());
        for dim in [self.height, self.width, self.channels] {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BevError> {
        if bytes.len() < HEADER_BYTES {
            return Err(BevError::Format("truncated header".into()));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().expect("8 bytes"));
        let dims = [word(0), word(1), word(2)].map(|d| usize::try_from(d).unwrap_or(usize::MAX));
        let body = &bytes[HEADER_BYTES..];
        if !body.len().is_multiple_of(8) {
            return Err(BevError::Format("body is not a whole number of f64 values".into()));
        }
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        BevGrid::new(dims[0], dims[1], dims[2], data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolStrategy {
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CropVariant {
    #[default]
    Rotated,
    /// Axis-aligned rectangle circumscribing the rotated footprint.
    Circumscribed,
}

macro_rules! keyword_enum {
    ($ty:ty, $($name:literal => $variant:expr),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim().to_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown value `{other}`")),
                }
            }
        }
    };
}

keyword_enum!(PoolStrategy, "mean" => PoolStrategy::Mean, "max" => PoolStrategy::Max);
keyword_enum!(CropVariant, "rotated" => CropVariant::Rotated, "circumscribed" => CropVariant::Circumscribed);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEmbedding(pub Vec<f64>);

/// Pools the features of every cell whose center lies inside `rect`.
pub fn crop_pool(grid: &BevGrid, rect: &RotatedRect, strategy: PoolStrategy) -> Result<ObjectEmbedding, BevError> {
    let [x0, y0, x1, y1] = rect.bounds();
    // Cell c has center c + 0.5; only centers within the bounds can match.
    let first = |lo: f64| (lo - 0.5).ceil().max(0.0) as usize;
    let last = |hi: f64, n: usize| {
        let c = (hi - 0.5).floor();
        if c < 0.0 {
            None
        } else {
            Some((c as usize).min(n - 1))
        }
    };
    let (Some(col_end), Some(row_end)) = (last(x1, grid.width), last(y1, grid.height)) else {
        return Err(BevError::EmptyRegion);
    };

    let mut acc = vec![
        match strategy {
            PoolStrategy::Mean => 0.0,
            PoolStrategy::Max => f64::NEG_INFINITY,
        };
        grid.channels
    ];
    let mut hits = 0usize;
    for row in first(y0)..=row_end {
        for col in first(x0)..=col_end {
            if !rect.contains([col as f64 + 0.5, row as f64 + 0.5]) {
                continue;
            }
            hits += 1;
            for (a, v) in acc.iter_mut().zip(grid.cell(row, col)) {
                match strategy {
                    PoolStrategy::Mean => *a += v,
                    PoolStrategy::Max => *a = a.max(*v),
                }
            }
        }
    }
    if hits == 0 {
        return Err(BevError::EmptyRegion);
    }
    if strategy == PoolStrategy::Mean {
        acc.iter_mut().for_each(|a| *a /= hits as f64);
    }
    Ok(ObjectEmbedding(acc))
}

pub fn crop_pool_variant(
    grid: &BevGrid,
    rect: &RotatedRect,
    strategy: PoolStrategy,
    variant: CropVariant,
) -> Result<ObjectEmbedding, BevError> {
    match variant {
        CropVariant::Rotated => crop_pool(grid, rect, strategy),
        CropVariant::Circumscribed => crop_pool(grid, &rect.circumscribed(), strategy),
    }
}

/// Crops every rect independently; results are in input order.
pub fn crop_pool_batch(
    grid: &BevGrid,
    rects: &[RotatedRect],
    strategy: PoolStrategy,
    variant: CropVariant,
    workers: usize,
) -> Vec<Result<ObjectEmbedding, BevError>> {
    map_ordered(rects, workers, |rect| crop_pool_variant(grid, rect, strategy, variant))
}
