//! Configurations shipped with the binary, one per published R-vs-Δ curve
//! plus homogeneous-field and collective-reservoir runs.

use crate::config::{ConfigError, RunConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("asym8-config1", include_str!("../presets/asym8-config1.toml")),
    ("asym8-config2", include_str!("../presets/asym8-config2.toml")),
    ("asym8-homogeneous", include_str!("../presets/asym8-homogeneous.toml")),
    ("sym10-config1", include_str!("../presets/sym10-config1.toml")),
    ("sym10-config2", include_str!("../presets/sym10-config2.toml")),
    ("sym10-homogeneous", include_str!("../presets/sym10-homogeneous.toml")),
    ("sym9-config1", include_str!("../presets/sym9-config1.toml")),
    ("sym9-config2", include_str!("../presets/sym9-config2.toml")),
    ("sym9-homogeneous", include_str!("../presets/sym9-homogeneous.toml")),
    ("triangular10-collective-phased", include_str!("../presets/triangular10-collective-phased.toml")),
    ("triangular10-collective-uniform", include_str!("../presets/triangular10-collective-uniform.toml")),
    ("triangular10-config1", include_str!("../presets/triangular10-config1.toml")),
    ("triangular10-config2", include_str!("../presets/triangular10-config2.toml")),
    ("triangular10-homogeneous", include_str!("../presets/triangular10-homogeneous.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn load(name: &str) -> Result<RunConfig, ConfigError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| ConfigError::Invalid {
        field: "--preset".into(),
        message: format!("unknown preset `{name}` (see --list-presets)"),
    })?;
    RunConfig::parse(text)
}
