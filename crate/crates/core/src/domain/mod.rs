//! Unit-area planar domains and their Cartesian discretization.

mod grid;
mod shape;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{Grid, Link, Node, DIRECTIONS};
pub use shape::{Point, Shape};

/// Smallest resolution accepted in a spec.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Disk,
    #[serde(alias = "square")]
    Rectangle,
    Polygon,
}

/// Serializable description of a domain before normalization.
///
/// A rectangle is `aspect × 1`; a disk has `radius` (default 1). The JSON form is
/// `{"shape": "disk"|"rectangle"|"square"|"polygon", "aspect"?, "vertices"?, "radius"?, "n"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: ShapeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Cells per unit length; zero means "use the resolution supplied elsewhere".
    #[serde(default)]
    pub n: usize,
}

impl DomainSpec {
    pub fn disk(n: usize) -> Self {
        Self { shape: ShapeKind::Disk, aspect: None, vertices: None, radius: None, n }
    }

    pub fn square(n: usize) -> Self {
        Self::rectangle(1.0, n)
    }

    pub fn rectangle(aspect: f64, n: usize) -> Self {
        Self { shape: ShapeKind::Rectangle, aspect: Some(aspect), vertices: None, radius: None, n }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>, n: usize) -> Self {
        Self { shape: ShapeKind::Polygon, aspect: None, vertices: Some(vertices), radius: None, n }
    }

    pub fn with_resolution(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    /// Short label used in file names and report rows.
    pub fn tag(&self) -> String {
        match self.shape {
            ShapeKind::Disk => "disk".into(),
            ShapeKind::Rectangle => match self.aspect.unwrap_or(1.0) {
                1.0 => "square".into(),
                a => format!("rectangle-{}", trim_float(a)),
            },
            ShapeKind::Polygon => {
                format!("polygon-{}", self.vertices.as_ref().map_or(0, Vec::len))
            }
        }
    }

    /// Raw (unscaled) geometry described by the spec.
    pub fn raw_shape(&self) -> Result<Shape> {
        if self.n < MIN_RESOLUTION {
            return Err(Error::InvalidSpec(format!("resolution n = {} is below {MIN_RESOLUTION}", self.n)));
        }
        match self.shape {
            ShapeKind::Disk => {
                let radius = self.radius.unwrap_or(1.0);
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidSpec(format!("disk radius must be positive, got {radius}")));
                }
                Ok(Shape::Disk { center: [0.0, 0.0], radius })
            }
            ShapeKind::Rectangle => {
                let aspect = self.aspect.unwrap_or(1.0);
                if !(aspect.is_finite() && aspect > 0.0) {
                    return Err(Error::InvalidSpec(format!("rectangle aspect must be positive, got {aspect}")));
                }
                Ok(Shape::Rectangle { center: [0.0, 0.0], width: aspect, height: 1.0 })
            }
            ShapeKind::Polygon => {
                let raw = self
                    .vertices
                    .as_ref()
                    .ok_or_else(|| Error::InvalidSpec("polygon requires a vertex list".into()))?;
                Ok(Shape::Polygon { vertices: shape::clean_polygon(raw)? })
            }
        }
    }
}

fn trim_float(x: f64) -> String {
    let s = format!("{x}");
    s.replace('.', "p")
}

/// A domain rescaled to unit area, with analytic perimeter and its grid.
#[derive(Debug, Clone)]
pub struct Domain {
    spec: DomainSpec,
    shape: Shape,
    area: f64,
    perimeter: f64,
    ell: f64,
    centroid: Point,
    grid: Arc<Grid>,
}

impl Domain {
    /// Rescales the spec's shape about its centroid to unit area and builds the grid.
    pub fn normalize(spec: &DomainSpec) -> Result<Self> {
        let raw = spec.raw_shape()?;
        let raw_area = raw.area();
        if !(raw_area.is_finite() && raw_area > 0.0) {
            return Err(Error::Degenerate(format!("raw area {raw_area:e}")));
        }
        let s = 1.0 / raw_area.sqrt();
        let shape = raw.scaled_about_centroid(s);
        let area = shape.area();
        let perimeter = shape.perimeter();
        let ell = perimeter * perimeter / (2.0 * PI) - 1.0;
        let centroid = shape.centroid();
        let normalized_spec = match &shape {
            Shape::Disk { radius, .. } => DomainSpec { radius: Some(*radius), ..spec.clone() },
            Shape::Rectangle { .. } => spec.clone(),
            Shape::Polygon { vertices } => DomainSpec::polygon(vertices.clone(), spec.n),
        };
        let grid = Grid::build(&shape, centroid, spec.n)?;
        Ok(Self { spec: normalized_spec, shape, area, perimeter, ell, centroid, grid: Arc::new(grid) })
    }

    /// Spec of the normalized geometry; normalizing it again is a no-op.
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// `|∂Ω|²/(2π) − 1` from the analytic perimeter.
    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.shape, Shape::Disk { .. })
    }

    pub fn tag(&self) -> String {
        self.spec.tag()
    }

    /// Radius of the unit-area disk.
    pub fn disk_radius() -> f64 {
        1.0 / PI.sqrt()
    }
}

/// `|∂Ω|²/(2π) − 1` of a normalized domain.
pub fn ell(domain: &Domain) -> f64 {
    domain.ell()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_radius_two_normalizes() {
        let spec = DomainSpec { radius: Some(2.0), ..DomainSpec::disk(32) };
        let d = Domain::normalize(&spec).unwrap();
        match d.shape() {
            Shape::Disk { radius, .. } => assert!((radius - 0.5641895835477563).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!((d.perimeter() - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!((d.area() - 1.0).abs() < 1e-12);
        assert!((d.ell() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_and_square() {
        let r = Domain::normalize(&DomainSpec::rectangle(2.0, 32)).unwrap();
        match r.shape() {
            Shape::Rectangle { width, height, .. } => {
                assert!((width - 2f64.sqrt()).abs() < 1e-15);
                assert!((height - 0.5f64.sqrt()).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert!((r.perimeter() - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((r.ell() - (9.0 / PI - 1.0)).abs() < 1e-13);
        let s = Domain::normalize(&DomainSpec::square(32)).unwrap();
        assert_eq!(s.perimeter(), 4.0);
        assert!((s.ell() - (8.0 / PI - 1.0)).abs() < 1e-14);
        assert_eq!(s.tag(), "square");
        assert_eq!(r.tag(), "rectangle-2");
    }

    #[test]
    fn spec_json_roundtrip() {
        let json = r#"{"shape":"polygon","vertices":[[0,0],[2,0],[0,2]],"n":32}"#;
        let spec: DomainSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.shape, ShapeKind::Polygon);
        let back: DomainSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        assert_eq!(serde_json::to_string(&DomainSpec::disk(64)).unwrap(), r#"{"shape":"disk","n":64}"#);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(Domain::normalize(&DomainSpec::rectangle(-1.0, 32)), Err(Error::InvalidSpec(_))));
        assert!(matches!(Domain::normalize(&DomainSpec::square(8)), Err(Error::InvalidSpec(_))));
        let flat = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 32);
        assert!(Domain::normalize(&flat).is_err());
    }
}
