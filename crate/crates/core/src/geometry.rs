//! Antenna array geometry.
//!
//! Arrays are uniform linear arrays on the x-axis, centered on `centroid_x`.
//! Element `n` (1-based) sits at `centroid_x + (n - (N + 1) / 2) * d`, which
//! makes the first moment of the element offsets vanish and the second equal
//! `N (N^2 - 1) d^2 / 12`. A general constructor ([`ArrayGeometry::from_elements`])
//! exists for rotated or irregular layouts used in invariance tests.

use crate::error::{degenerate, invalid, Result};

/// A point in the 2D scene plane, meters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Rotation about the origin by `angle` radians (counter-clockwise).
    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayGeometry {
    spacing: f64,
    centroid: Point,
    positions: Vec<Point>,
}

impl ArrayGeometry {
    /// Centered uniform linear array along the x-axis.
    pub fn ula(count: usize, spacing: f64, centroid_x: f64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("array element count must be at least 1"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(invalid(format!("element spacing must be positive, got {spacing}")));
        }
        if !centroid_x.is_finite() {
            return Err(invalid("array centroid must be finite"));
        }
        let half = (count as f64 + 1.0) / 2.0;
        let positions = (1..=count)
            .map(|n| Point::new(centroid_x + (n as f64 - half) * spacing, 0.0))
            .collect();
        Ok(ArrayGeometry {
            spacing,
            centroid: Point::new(centroid_x, 0.0),
            positions,
        })
    }

    /// Arbitrary element layout. The centroid is the element mean and the
    /// spacing is the distance between the first two elements (0 for a single
    /// element). Closed-form approximations assume a ULA and should not be fed
    /// geometries built this way.
    pub fn from_elements(positions: Vec<Point>) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("array needs at least one element"));
        }
        if positions.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(invalid("element coordinates must be finite"));
        }
        for (i, a) in positions.iter().enumerate() {
            if positions[i + 1..].iter().any(|b| a.distance(*b) == 0.0) {
                return Err(degenerate("two array elements share a position"));
            }
        }
        let n = positions.len() as f64;
        let centroid = Point::new(
            positions.iter().map(|p| p.x).sum::<f64>() / n,
            positions.iter().map(|p| p.y).sum::<f64>() / n,
        );
        let spacing = if positions.len() > 1 {
            positions[0].distance(positions[1])
        } else {
            0.0
        };
        Ok(ArrayGeometry {
            spacing,
            centroid,
            positions,
        })
    }

    /// The same array rotated about the scene origin.
    pub fn rotated(&self, angle: f64) -> Self {
        ArrayGeometry {
            spacing: self.spacing,
            centroid: self.centroid.rotated(angle),
            positions: self.positions.iter().map(|p| p.rotated(angle)).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    pub fn centroid_x(&self) -> f64 {
        self.centroid.x
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// `(N - 1) d`.
    pub fn aperture(&self) -> f64 {
        (self.count() as f64 - 1.0) * self.spacing
    }

    /// Reactive near-field and Fraunhofer boundaries, `0.62 sqrt(D^3 / λ)` and
    /// `2 D^2 / λ`. Both are zero for a single element.
    pub fn region_boundaries(&self, wavelength: f64) -> Result<(f64, f64)> {
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        let d = self.aperture();
        Ok((0.62 * (d.powi(3) / wavelength).sqrt(), 2.0 * d * d / wavelength))
    }

    /// Classifies a range against [`ArrayGeometry::region_boundaries`].
    pub fn region_of(&self, range: f64, wavelength: f64) -> Result<Region> {
        let (reactive, fraunhofer) = self.region_boundaries(wavelength)?;
        Ok(if range < reactive {
            Region::Reactive
        } else if range < fraunhofer {
            Region::Fresnel
        } else {
            Region::Fraunhofer
        })
    }

    /// First and second moments of the element offsets from the centroid,
    /// measured along the array axis, by direct summation.
    pub fn moment_sums(&self) -> (f64, f64) {
        let axis = self.axis();
        let offsets = self.positions.iter().map(|p| {
            (p.x - self.centroid.x) * axis.x + (p.y - self.centroid.y) * axis.y
        });
        offsets.fold((0.0, 0.0), |(s1, s2), o| (s1 + o, s2 + o * o))
    }

    /// `N (N^2 - 1) d^2 / 12`, the closed form of the second moment for a ULA.
    pub fn second_moment_closed_form(&self) -> f64 {
        let n = self.count() as f64;
        n * (n * n - 1.0) * self.spacing * self.spacing / 12.0
    }

    fn axis(&self) -> Point {
        match (self.positions.first(), self.positions.last()) {
            (Some(a), Some(b)) if self.positions.len() > 1 => {
                let len = a.distance(*b);
                Point::new((b.x - a.x) / len, (b.y - a.y) / len)
            }
            _ => Point::new(1.0, 0.0),
        }
    }
}

/// Radiation region of a target range relative to one array.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Reactive,
    Fresnel,
    Fraunhofer,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Reactive => "reactive",
            Region::Fresnel => "fresnel",
            Region::Fraunhofer => "fraunhofer",
        }
    }
}
