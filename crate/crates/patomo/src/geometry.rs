//! Discrete scene geometry: the image grid, detector locations, scan
//! rotations and time sampling that fix the shape of the inverse problem.

use serde::{Deserialize, Serialize};

use crate::error::{PatError, Result};

/// Pixel positions on the image plane refer to pixel centers:
/// `world_of(i, j) = origin + (j*h, i*h)` with `i` the row (y) and `j`
/// the column (x) index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub nx: usize,
    pub ny: usize,
    /// Pixel pitch in meters.
    pub h: f64,
    /// World coordinate of the center of pixel (0, 0), meters.
    pub origin: [f64; 2],
}

impl ImageGrid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Result<Self> {
        if nx < 1 || ny < 1 {
            return Err(PatError::InvalidGeometry(format!(
                "grid must have at least one pixel per side, got {nx}x{ny}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(PatError::InvalidGeometry(format!(
                "pixel pitch must be positive and finite, got {h}"
            )));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(PatError::InvalidGeometry("grid origin must be finite".into()));
        }
        Ok(ImageGrid { nx, ny, h, origin })
    }

    /// Grid centered on the world origin: pixel centers span the square
    /// `[-n*h/2 + h/2, n*h/2 - h/2]` per axis, so the covered field is
    /// `n*h` wide regardless of resolution.
    pub fn centered(nx: usize, ny: usize, h: f64) -> Result<Self> {
        let ox = -(nx as f64) * h / 2.0 + h / 2.0;
        let oy = -(ny as f64) * h / 2.0 + h / 2.0;
        ImageGrid::new(nx, ny, h, [ox, oy])
    }

    pub fn n_pixels(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn world_of(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + j as f64 * self.h,
            self.origin[1] + i as f64 * self.h,
        ]
    }

    /// Inverse of `world_of` by nearest-pixel lookup; `None` outside the grid.
    pub fn index_of(&self, world: [f64; 2]) -> Option<(usize, usize)> {
        let j = ((world[0] - self.origin[0]) / self.h).round();
        let i = ((world[1] - self.origin[1]) / self.h).round();
        if i < 0.0 || j < 0.0 || i as usize >= self.ny || j as usize >= self.nx {
            None
        } else {
            Some((i as usize, j as usize))
        }
    }

    /// Physical extent `[x_lo, x_hi, y_lo, y_hi]` covered by pixel cells.
    pub fn cell_bounds(&self) -> [f64; 4] {
        [
            self.origin[0] - self.h / 2.0,
            self.origin[0] + (self.nx as f64 - 0.5) * self.h,
            self.origin[1] - self.h / 2.0,
            self.origin[1] + (self.ny as f64 - 0.5) * self.h,
        ]
    }
}

/// Uniform time sampling of the detector traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSampling {
    /// First sample time, seconds.
    pub t0: f64,
    /// Sample interval, seconds.
    pub dt: f64,
    /// Sample count.
    pub nt: usize,
}

impl TimeSampling {
    pub fn new(t0: f64, dt: f64, nt: usize) -> Result<Self> {
        if !(t0 >= 0.0) || !(dt > 0.0) || nt < 1 {
            return Err(PatError::InvalidGeometry(format!(
                "time sampling requires t0 >= 0, dt > 0, nt >= 1; got t0={t0}, dt={dt}, nt={nt}"
            )));
        }
        Ok(TimeSampling { t0, dt, nt })
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.nt - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcousticConfig {
    /// Homogeneous speed of sound, m/s.
    pub c0: f64,
}

impl AcousticConfig {
    pub fn new(c0: f64) -> Result<Self> {
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(PatError::InvalidGeometry(format!(
                "speed of sound must be positive, got {c0}"
            )));
        }
        Ok(AcousticConfig { c0 })
    }
}

/// How a detector set was constructed; kept for rotation schedules and
/// provenance records next to outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcProvenance {
    pub center: [f64; 2],
    pub radius: f64,
    pub span_deg: f64,
    pub count: usize,
    pub n_rotations: usize,
    pub rotation_step_deg: f64,
}

/// Ordered point detectors on the scan plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSet {
    pub positions: Vec<[f64; 2]>,
    pub provenance: Option<ArcProvenance>,
}

impl DetectorSet {
    pub fn from_positions(positions: Vec<[f64; 2]>) -> Result<Self> {
        check_distinct(&positions)?;
        Ok(DetectorSet {
            positions,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

const DISTINCT_TOL: f64 = 1e-12;

fn check_distinct(positions: &[[f64; 2]]) -> Result<()> {
    for a in 0..positions.len() {
        for b in (a + 1)..positions.len() {
            let dx = positions[a][0] - positions[b][0];
            let dy = positions[a][1] - positions[b][1];
            if (dx * dx + dy * dy).sqrt() < DISTINCT_TOL {
                return Err(PatError::InvalidGeometry(format!(
                    "detectors {a} and {b} coincide within {DISTINCT_TOL} m"
                )));
            }
        }
    }
    Ok(())
}

/// Place `count` detectors on a circular arc. Angles are measured
/// counterclockwise from the +x axis; the arc is centered on the +x axis.
/// A full 360-degree span is sampled periodically (no duplicate endpoint),
/// a partial span includes both endpoints.
pub fn build_arc_detectors(
    center: [f64; 2],
    radius: f64,
    span_deg: f64,
    count: usize,
) -> Result<DetectorSet> {
    if count < 1 {
        return Err(PatError::InvalidGeometry(format!(
            "detector count must be >= 1, got {count}"
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(PatError::InvalidGeometry(format!(
            "arc radius must be positive, got {radius}"
        )));
    }
    if !(span_deg > 0.0 && span_deg <= 360.0) {
        return Err(PatError::InvalidGeometry(format!(
            "angular span must lie in (0, 360] degrees, got {span_deg}"
        )));
    }

    let full_circle = (span_deg - 360.0).abs() < 1e-12;
    let mut angles: Vec<f64> = if count == 1 {
        vec![0.0]
    } else if full_circle {
        (0..count).map(|k| k as f64 * 360.0 / count as f64).collect()
    } else {
        (0..count)
            .map(|k| -span_deg / 2.0 + k as f64 * span_deg / (count as f64 - 1.0))
            .collect()
    };
    // deterministic ordering by increasing angle in [0, 360)
    for a in &mut angles {
        *a = a.rem_euclid(360.0);
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let positions = angles
        .iter()
        .map(|a| {
            let rad = a.to_radians();
            [center[0] + radius * rad.cos(), center[1] + radius * rad.sin()]
        })
        .collect::<Vec<_>>();
    check_distinct(&positions)?;

    Ok(DetectorSet {
        positions,
        provenance: Some(ArcProvenance {
            center,
            radius,
            span_deg,
            count,
            n_rotations: 1,
            rotation_step_deg: 0.0,
        }),
    })
}

/// Union of `base` rotated by `k * step_deg` about the arc center for
/// `k = 0..n_rot-1`. Points are ordered rotation-major, matching the
/// acquisition order of a rotating scan.
pub fn apply_rotation_schedule(
    base: &DetectorSet,
    n_rot: usize,
    step_deg: f64,
) -> Result<DetectorSet> {
    if n_rot < 1 {
        return Err(PatError::InvalidGeometry(format!(
            "rotation count must be >= 1, got {n_rot}"
        )));
    }
    let center = base
        .provenance
        .as_ref()
        .map(|p| p.center)
        .unwrap_or([0.0, 0.0]);

    let mut positions = Vec::with_capacity(base.len() * n_rot);
    for k in 0..n_rot {
        let rad = (k as f64 * step_deg).to_radians();
        let (s, c) = rad.sin_cos();
        for p in &base.positions {
            let dx = p[0] - center[0];
            let dy = p[1] - center[1];
            positions.push([center[0] + c * dx - s * dy, center[1] + s * dx + c * dy]);
        }
    }
    check_distinct(&positions)?;

    let provenance = base.provenance.clone().map(|p| ArcProvenance {
        n_rotations: n_rot,
        rotation_step_deg: step_deg,
        ..p
    });
    Ok(DetectorSet {
        positions,
        provenance,
    })
}
