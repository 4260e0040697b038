use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::camera::{project, CameraModel, CameraPose};
use crate::error::{Error, Result};

/// A convex prism standing on the workspace plane.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneObject {
    vertices: Vec<[f64; 2]>,
    height: f64,
}

impl SceneObject {
    /// `vertices` must describe a convex polygon in counterclockwise order.
    pub fn new(vertices: Vec<[f64; 2]>, height: f64) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Config("an object needs at least 3 vertices".into()));
        }
        if !(height >= 0.0) {
            return Err(Error::Config("object height must be non-negative".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if !(cross > 0.0) {
                return Err(Error::Config(
                    "object vertices must form a convex counterclockwise polygon".into(),
                ));
            }
        }
        Ok(Self { vertices, height })
    }

    /// Regular `n`-gon with circumradius `radius`, first vertex at angle
    /// `rotation` from the world `x` axis.
    pub fn regular(n: usize, radius: f64, center: [f64; 2], rotation: f64, height: f64) -> Result<Self> {
        let vertices = (0..n)
            .map(|k| {
                let a = rotation + 2.0 * PI * k as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::new(vertices, height)
    }

    pub fn rectangle(size: [f64; 2], center: [f64; 2], rotation: f64, height: f64) -> Result<Self> {
        let (s, c) = rotation.sin_cos();
        let (hx, hy) = (size[0] / 2.0, size[1] / 2.0);
        let vertices = [[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]]
            .iter()
            .map(|p| [center[0] + c * p[0] - s * p[1], center[1] + s * p[0] + c * p[1]])
            .collect();
        Self::new(vertices, height)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Vertex average.
    pub fn true_centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(x, y), v| (x + v[0], y + v[1]));
        [sx / n, sy / n]
    }

    /// Corners of the top face in world coordinates.
    pub fn top_face(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.vertices.iter().map(move |v| [v[0], v[1], self.height])
    }

    /// Top-face outline on the image plane. The camera looks straight down,
    /// so the top face is the silhouette boundary the sensor reacts to.
    pub fn project(&self, camera: &CameraModel, pose: &CameraPose) -> Result<Vec<[f64; 2]>> {
        self.top_face().map(|p| project(camera, pose, p)).collect()
    }

    /// Image position of the true centroid on the top face.
    pub fn project_centroid(&self, camera: &CameraModel, pose: &CameraPose) -> Result<[f64; 2]> {
        let c = self.true_centroid();
        project(camera, pose, [c[0], c[1], self.height])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Triangle,
    Rectangle,
    Pentagon,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Triangle, Shape::Rectangle, Shape::Pentagon];

    pub fn vertex_count(self) -> usize {
        match self {
            Shape::Triangle => 3,
            Shape::Rectangle => 4,
            Shape::Pentagon => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Triangle => "triangle",
            Shape::Rectangle => "rectangle",
            Shape::Pentagon => "pentagon",
        }
    }

    /// Builds the prism. `size` is the circumradius; the rectangle keeps a
    /// 3:2 aspect ratio inside that circle.
    pub fn build(self, size: f64, center: [f64; 2], rotation: f64, height: f64) -> Result<SceneObject> {
        match self {
            Shape::Triangle => SceneObject::regular(3, size, center, rotation, height),
            Shape::Pentagon => SceneObject::regular(5, size, center, rotation, height),
            Shape::Rectangle => {
                let half_diag = (3.0f64).atan2(2.0);
                let w = 2.0 * size * half_diag.sin();
                let h = 2.0 * size * half_diag.cos();
                SceneObject::rectangle([w, h], center, rotation, height)
            }
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
