//! Container descriptions as TOML:
//!
//! ```toml
//! shape = "frustum"        # cylinder | frustum | bottleneck
//! height_m = 0.2
//! radius_base_m = 0.02
//! radius_top_m = 0.04      # optional; defaults to radius_base_m
//!
//! [neck]                   # bottleneck only
//! length_m = 0.03
//! radius_m = 0.01
//! ```

use std::path::Path;

use pourpitch_core::{ContainerSpec, Neck, Shape};
use serde::{Deserialize, Serialize};

use super::atomic::write_atomic;
use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerFile {
    pub shape: Shape,
    pub height_m: f64,
    pub radius_base_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_top_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neck: Option<NeckFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeckFile {
    pub length_m: f64,
    pub radius_m: f64,
}

impl ContainerFile {
    pub fn to_spec(&self) -> pourpitch_core::Result<ContainerSpec> {
        let spec = ContainerSpec {
            shape: self.shape,
            height: self.height_m,
            radius_base: self.radius_base_m,
            radius_top: self.radius_top_m.unwrap_or(self.radius_base_m),
            neck: self.neck.map(|n| Neck {
                length: n.length_m,
                radius: n.radius_m,
            }),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ContainerSpec) -> Self {
        Self {
            shape: spec.shape,
            height_m: spec.height,
            radius_base_m: spec.radius_base,
            radius_top_m: (spec.shape == Shape::Frustum).then_some(spec.radius_top),
            neck: spec.neck.map(|n| NeckFile {
                length_m: n.length,
                radius_m: n.radius,
            }),
        }
    }
}

pub fn parse_container(text: &str, path: &Path) -> AppResult<ContainerSpec> {
    let file: ContainerFile = toml::from_str(text).map_err(|e| AppError::format(path, e.message()))?;
    file.to_spec().map_err(|e| AppError::format(path, e))
}

pub fn read_container(path: &Path) -> AppResult<ContainerSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_container(&text, path)
}

pub fn write_container(path: &Path, spec: &ContainerSpec) -> AppResult<()> {
    let text = toml::to_string(&ContainerFile::from_spec(spec)).map_err(|e| AppError::format(path, e))?;
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_shape() {
        let p = Path::new("c.toml");
        let cyl = parse_container("shape = \"cylinder\"\nheight_m = 0.2\nradius_base_m = 0.03\n", p).unwrap();
        assert_eq!(cyl, ContainerSpec::cylinder(0.2, 0.03).unwrap());
        let fru = parse_container(
            "shape = \"frustum\"\nheight_m = 0.2\nradius_base_m = 0.02\nradius_top_m = 0.04\n",
            p,
        )
        .unwrap();
        assert_eq!(fru.radius_top, 0.04);
        let bot = parse_container(
            "shape = \"bottleneck\"\nheight_m = 0.2\nradius_base_m = 0.04\n[neck]\nlength_m = 0.03\nradius_m = 0.01\n",
            p,
        )
        .unwrap();
        assert_eq!(bot.neck.unwrap().radius, 0.01);
    }

    #[test]
    fn rejects_bad_documents() {
        let p = Path::new("c.toml");
        assert!(parse_container("shape = \"sphere\"\nheight_m = 0.2\nradius_base_m = 0.03\n", p).is_err());
        assert!(parse_container("shape = \"cylinder\"\nheight_m = -0.2\nradius_base_m = 0.03\n", p).is_err());
        assert!(parse_container("shape = \"cylinder\"\nheight_m = 0.2\n", p).is_err());
        assert!(parse_container("shape = \"cylinder\"\nheight_m = 0.2\nradius_base_m = 0.03\ncolor = 1\n", p).is_err());
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        let spec = ContainerSpec::frustum(0.15, 0.02, 0.035).unwrap();
        write_container(&path, &spec).unwrap();
        assert_eq!(read_container(&path).unwrap(), spec);
    }
}
