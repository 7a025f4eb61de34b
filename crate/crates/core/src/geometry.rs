//! Array geometry: ring configuration, candidate position grids and the
//! anti-coupling spacing constraints.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FclaError, Result};
use crate::pattern::Pattern;

/// Relative slack applied when comparing spacings against their minima, so
/// that grid points placed exactly at the minimum pass after rounding.
const SPACING_SLACK: f64 = 1e-9;

/// Explicit angular/vertical grid sizes. When present, the ring radius and the
/// vertical extent of a configuration are derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub angles: usize,
    pub heights: usize,
}

/// Flexible cylindrical array description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FclaConfig {
    /// Number of rings (M).
    pub rings: usize,
    /// Antennas per ring (N).
    pub per_ring: usize,
    /// Ring radius in meters.
    pub radius: f64,
    /// Vertical extent available to the rings, meters.
    pub height_extent: f64,
    /// Minimum inter-element spacing, meters.
    pub d_min: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
    pub pattern: Pattern,
    #[serde(default)]
    pub grid_override: Option<GridSize>,
}

impl FclaConfig {
    /// Builds a configuration from physical dimensions. Grid sizes follow from
    /// `floor(2π/ψ_min)` and `floor(Z/d_min)`.
    pub fn new(
        rings: usize,
        per_ring: usize,
        radius: f64,
        height_extent: f64,
        d_min: f64,
        wavelength: f64,
        pattern: Pattern,
    ) -> Result<Self> {
        let config = Self {
            rings,
            per_ring,
            radius,
            height_extent,
            d_min,
            wavelength,
            pattern,
            grid_override: None,
        };
        config.validate()?;
        Ok(config)
    }

    /// Builds a configuration with `angles` revolving-angle slots and
    /// `heights` height slots. The radius is chosen so that adjacent angle
    /// slots are exactly `d_min` apart along the chord, and the vertical
    /// extent is `heights * d_min`.
    pub fn with_grid(
        rings: usize,
        per_ring: usize,
        grid: GridSize,
        d_min: f64,
        wavelength: f64,
        pattern: Pattern,
    ) -> Result<Self> {
        if grid.angles < 2 {
            return Err(FclaError::InvalidConfig(format!(
                "angle grid needs at least 2 slots, got {}",
                grid.angles
            )));
        }
        if !(d_min > 0.0) {
            return Err(FclaError::InvalidConfig(format!("d_min must be positive, got {d_min}")));
        }
        let radius = d_min / (2.0 * (PI / grid.angles as f64).sin());
        let config = Self {
            rings,
            per_ring,
            radius,
            height_extent: grid.heights as f64 * d_min,
            d_min,
            wavelength,
            pattern,
            grid_override: Some(grid),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(FclaError::InvalidConfig(msg));
        if self.rings == 0 || self.per_ring == 0 {
            return invalid(format!(
                "need at least one ring and one antenna per ring, got M={} N={}",
                self.rings, self.per_ring
            ));
        }
        for (name, v) in [
            ("radius", self.radius),
            ("height_extent", self.height_extent),
            ("d_min", self.d_min),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        self.pattern.validate()?;
        min_revolve_angle(self.d_min, self.radius)?;
        let size = self.grid_size()?;
        if size.heights < self.rings {
            return Err(FclaError::InfeasibleGrid(format!(
                "{} height slots cannot host {} rings",
                size.heights, self.rings
            )));
        }
        if size.angles < self.per_ring {
            return Err(FclaError::InfeasibleGrid(format!(
                "{} angle slots cannot host {} antennas per ring",
                size.angles, self.per_ring
            )));
        }
        Ok(())
    }

    /// Minimum angular separation between two elements of one ring.
    pub fn psi_min(&self) -> Result<f64> {
        min_revolve_angle(self.d_min, self.radius)
    }

    pub fn grid_size(&self) -> Result<GridSize> {
        if let Some(size) = self.grid_override {
            return Ok(size);
        }
        let psi_min = self.psi_min()?;
        Ok(GridSize {
            angles: (2.0 * PI / psi_min).floor() as usize,
            heights: (self.height_extent / self.d_min).floor() as usize,
        })
    }
}

/// `2·arcsin(d_min / 2R)`: the angle subtending a chord of length `d_min`.
pub fn min_revolve_angle(d_min: f64, radius: f64) -> Result<f64> {
    if !(d_min > 0.0) || !(radius > 0.0) {
        return Err(FclaError::InvalidConfig(format!(
            "d_min and radius must be positive (d_min={d_min}, R={radius})"
        )));
    }
    let ratio = d_min / (2.0 * radius);
    if ratio > 1.0 {
        return Err(FclaError::InvalidConfig(format!(
            "d_min={d_min} exceeds the ring diameter {}",
            2.0 * radius
        )));
    }
    Ok(2.0 * ratio.asin())
}

/// Candidate revolving angles and heights.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionGrid {
    pub psi: Vec<f64>,
    pub z: Vec<f64>,
    pub psi_min: f64,
    pub d_min: f64,
}

impl PositionGrid {
    pub fn angle_count(&self) -> usize {
        self.psi.len()
    }

    pub fn height_count(&self) -> usize {
        self.z.len()
    }
}

pub fn build_grid(config: &FclaConfig) -> Result<PositionGrid> {
    config.validate()?;
    let size = config.grid_size()?;
    let step = 2.0 * PI / size.angles as f64;
    Ok(PositionGrid {
        psi: (0..size.angles).map(|g| g as f64 * step).collect(),
        z: (0..size.heights).map(|g| g as f64 * config.d_min).collect(),
        psi_min: config.psi_min()?,
        d_min: config.d_min,
    })
}

/// An antenna location on the cylinder: revolving angle and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub psi: f64,
    pub z: f64,
}

/// Cartesian coordinates of an element at revolving angle `psi`, height `z`.
pub fn position_of(psi: f64, z: f64, radius: f64) -> [f64; 3] {
    [radius * psi.cos(), radius * psi.sin(), z]
}

/// Angular distance on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Checks that elements sharing a height are at least `ψ_min` apart and that
/// distinct heights are at least `d_min` apart.
pub fn check_spacing(positions: &[Position], config: &FclaConfig) -> Result<()> {
    let psi_min = config.psi_min()?;
    for (i, a) in positions.iter().enumerate() {
        for (j, b) in positions.iter().enumerate().skip(i + 1) {
            if a.z == b.z {
                let sep = circular_distance(a.psi, b.psi);
                if sep < psi_min * (1.0 - SPACING_SLACK) {
                    return Err(FclaError::SpacingViolation(format!(
                        "elements {i} and {j} share height {} but are {sep:.6} rad apart (min {psi_min:.6})",
                        a.z
                    )));
                }
            } else {
                let sep = (a.z - b.z).abs();
                if sep < config.d_min * (1.0 - SPACING_SLACK) {
                    return Err(FclaError::SpacingViolation(format!(
                        "heights {} and {} are {sep:.6} m apart (min {})",
                        a.z, b.z, config.d_min
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Full feasibility check: spacing plus exactly `M` distinct heights with `N`
/// elements each.
pub fn check_feasible(positions: &[Position], config: &FclaConfig) -> Result<()> {
    check_spacing(positions, config)?;
    let mut heights: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for p in positions {
        match heights.iter().position(|&z| z == p.z) {
            Some(i) => counts[i] += 1,
            None => {
                heights.push(p.z);
                counts.push(1);
            }
        }
    }
    if heights.len() != config.rings || counts.iter().any(|&c| c != config.per_ring) {
        return Err(FclaError::Infeasible(format!(
            "expected {} rings of {} elements, found ring sizes {:?}",
            config.rings, config.per_ring, counts
        )));
    }
    Ok(())
}
