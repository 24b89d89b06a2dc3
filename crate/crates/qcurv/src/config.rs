//! Structured configuration files (JSON or TOML) for manifolds and
//! experiments. The parsed source text is carried along so reports can
//! echo it bit-exactly.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{SectorBasis, SectorLabel};
use crate::geometry::{FactorSpec, ProductManifold};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorConfig {
    Sphere2 {
        radius: f64,
        /// Spectral truncation: maximum harmonic degree.
        max_degree: usize,
    },
    FlatTorus2 {
        periods: [f64; 2],
        /// Spectral truncation: maximum Fourier index per axis.
        max_index: usize,
    },
    AbstractHyperbolic2 {
        curvature_scale: f64,
        genus: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectrum: Option<Vec<f64>>,
    },
}

impl FactorConfig {
    pub fn spec(&self) -> FactorSpec {
        match self {
            FactorConfig::Sphere2 { radius, .. } => FactorSpec::Sphere2 { radius: *radius },
            FactorConfig::FlatTorus2 { periods, .. } => FactorSpec::FlatTorus2 {
                periods: *periods,
            },
            FactorConfig::AbstractHyperbolic2 {
                curvature_scale,
                genus,
                spectrum,
            } => FactorSpec::AbstractHyperbolic2 {
                curvature_scale: *curvature_scale,
                genus: *genus,
                spectrum: spectrum.clone(),
            },
        }
    }

    pub fn resolution(&self) -> usize {
        match self {
            FactorConfig::Sphere2 { max_degree, .. } => *max_degree,
            FactorConfig::FlatTorus2 { max_index, .. } => *max_index,
            FactorConfig::AbstractHyperbolic2 { spectrum, .. } => {
                spectrum.as_ref().map_or(1, |s| s.len().max(1))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub factor1: FactorConfig,
    pub factor2: FactorConfig,
}

impl ManifoldConfig {
    pub fn build(&self) -> Result<Arc<ProductManifold>> {
        Ok(Arc::new(ProductManifold::new(
            self.factor1.spec(),
            self.factor2.spec(),
            [self.factor1.resolution(), self.factor2.resolution()],
        )?))
    }

    pub fn build_sector(&self, label: SectorLabel) -> Result<Arc<SectorBasis>> {
        self.build()?.sector(label)
    }

    /// The sector used when none is requested explicitly: the full
    /// product when both factors carry grids, otherwise factor-1 only.
    pub fn default_sector_label(&self) -> SectorLabel {
        match (&self.factor1, &self.factor2) {
            (_, FactorConfig::AbstractHyperbolic2 { .. }) => SectorLabel::Factor1Only,
            _ => SectorLabel::FullProduct,
        }
    }
}

/// A parsed manifold config together with its verbatim source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub manifold: ManifoldConfig,
    pub source: String,
    pub path: String,
}

/// Read a manifold config from a JSON or TOML file. The syntax is
/// chosen by extension, falling back to trying both.
pub fn load_manifold(path: &Path) -> Result<LoadedConfig> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let ext = path
        .extension()
        .and_then(|s| s.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let manifold = match ext.as_str() {
        "json" => parse_json(&source)?,
        "toml" => parse_toml(&source)?,
        _ => parse_json(&source).or_else(|_| parse_toml(&source))?,
    };
    Ok(LoadedConfig {
        manifold,
        source,
        path: path.display().to_string(),
    })
}

fn parse_json(source: &str) -> Result<ManifoldConfig> {
    serde_json::from_str(source).map_err(|e| {
        Error::Config(format!(
            "JSON parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

fn parse_toml(source: &str) -> Result<ManifoldConfig> {
    toml::from_str(source).map_err(|e| Error::Config(format!("TOML parse error: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSON_EXAMPLE: &str = r#"{
  "factor1": { "kind": "sphere2", "radius": 1.0, "max_degree": 8 },
  "factor2": { "kind": "abstract_hyperbolic2", "curvature_scale": 1.0, "genus": 2 }
}"#;

    const TOML_EXAMPLE: &str = r#"
[factor1]
kind = "sphere2"
radius = 1.0
max_degree = 8

[factor2]
kind = "flat_torus2"
periods = [6.283185307179586, 6.283185307179586]
max_index = 4
"#;

    #[test]
    fn parses_json_and_builds() {
        let cfg: ManifoldConfig = parse_json(JSON_EXAMPLE).unwrap();
        assert_eq!(cfg.default_sector_label(), SectorLabel::Factor1Only);
        let m = cfg.build().unwrap();
        assert_eq!(m.euler_characteristic(), -4);
    }

    #[test]
    fn parses_toml_and_builds() {
        let cfg: ManifoldConfig = parse_toml(TOML_EXAMPLE).unwrap();
        assert_eq!(cfg.default_sector_label(), SectorLabel::FullProduct);
        let m = cfg.build().unwrap();
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn unknown_fields_are_rejected_with_location() {
        let bad = r#"{ "factor1": { "kind": "sphere2", "radius": 1.0, "max_degree": 4, "typo": 3 },
  "factor2": { "kind": "sphere2", "radius": 1.0, "max_degree": 4 } }"#;
        match parse_json(bad) {
            Err(Error::Config(msg)) => assert!(msg.contains("line"), "message: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn config_roundtrips_through_serde() {
        let cfg: ManifoldConfig = parse_json(JSON_EXAMPLE).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ManifoldConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
