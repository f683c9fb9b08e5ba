//! Run configuration: the TOML schema and its translation into solver types.
//!
//! Site numbers in custom geometries are 1-based, column by column, top to
//! bottom, the way lattices are usually drawn.

use serde::{Deserialize, Serialize};
use xxz_rectify::lattice::{
    assign_field, build_geometry, CustomGeometry, FieldAssignment, FieldProfile, GeometryKind, LatticeSpec,
};
use xxz_rectify::operators::{Direction, DriveMode, DriveSpec, ModelParams};
use xxz_rectify::steady::{GmresOptions, PropagationOptions};
use xxz_rectify::transport::{delta_grid, SolveOptions, SolverKind, DEGENERACY_TOL, DIVERGENCE_TOL, HOMOGENEITY_TOL};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free-form label echoed in the summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Size of the worker pool; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub field: FieldConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    pub deltas: DeltaConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// `triangular10`, `asym8`, `sym10`, `sym9` or `custom`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_sizes: Option<Vec<usize>>,
    /// Pairs of 1-based site numbers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonds: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Vec<ReservoirConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<Vec<ReservoirConfig>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub site: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha: f64,
    /// Reservoir polarization.
    pub f: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { alpha: 1.0, f: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Homogeneous,
    /// `h0` on the leftmost column, `+step` per column to the right.
    LeftToRight,
    /// `h0` on the rightmost column, `+step` per column to the left.
    RightToLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
    pub h0: f64,
    #[serde(default)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveModeConfig {
    Separate,
    CollectiveUniform,
    CollectivePhased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionConfig {
    /// Left reservoir polarized up (f_L = +f).
    Forward,
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub mode: DriveModeConfig,
    /// Orientation of the `j_forward` column; `j_reverse` uses the flip.
    pub direction: DirectionConfig,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self { mode: DriveModeConfig::Separate, direction: DirectionConfig::Forward }
    }
}

/// Either `values` or all of `min`, `max`, `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Propagation,
    Preconditioned,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    /// ‖W ρ‖∞ at which a steady state is accepted (both iterative solvers).
    pub stationarity_tol: f64,
    pub t_final: f64,
    pub checkpoint_interval: f64,
    pub krylov_dim: usize,
    pub max_step: f64,
    pub krylov_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub gmres_max_outer: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = PropagationOptions::default();
        let g = GmresOptions::default();
        Self {
            method: Method::Preconditioned,
            stationarity_tol: p.stationarity_tol,
            t_final: p.t_final,
            checkpoint_interval: p.checkpoint_interval,
            krylov_dim: p.krylov_dim,
            max_step: p.max_step,
            krylov_tol: p.krylov_tol,
            gmres_restart: g.restart,
            gmres_max_iter: g.max_iter,
            gmres_max_outer: g.max_outer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Largest accepted spread of the column-summed currents.
    pub homogeneity: f64,
    /// Largest accepted net current out of an interior site.
    pub divergence: f64,
    /// Relative |J_f - J_r| below which R is reported as degenerate.
    pub degeneracy: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { homogeneity: HOMOGENEITY_TOL, divergence: DIVERGENCE_TOL, degeneracy: DEGENERACY_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// CSV destination; stdout when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Write measured wall times; `false` writes 0 so files are byte-identical
    /// across runs.
    pub timing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { path: None, timing: true }
    }
}

/// Everything a sweep needs, validated.
#[derive(Debug, Clone)]
pub struct Plan {
    pub spec: LatticeSpec,
    pub params: ModelParams,
    pub drive: DriveSpec,
    pub deltas: Vec<f64>,
    pub options: SolveOptions,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn plan(&self) -> Result<Plan, ConfigError> {
        let spec = self.geometry.build()?;
        let model = self.model;
        if !model.alpha.is_finite() {
            return Err(invalid("model.alpha", "must be finite"));
        }
        if !(model.f.abs() <= 1.0) {
            return Err(invalid("model.f", format!("{} is outside [-1, 1]", model.f)));
        }
        let field = self.field.assign(&spec)?;
        let params = ModelParams { alpha: model.alpha, delta: 0.0, field, f: model.f };
        let drive = DriveSpec {
            mode: match self.drive.mode {
                DriveModeConfig::Separate => DriveMode::Separate,
                DriveModeConfig::CollectiveUniform => DriveMode::CollectiveUniform,
                DriveModeConfig::CollectivePhased => DriveMode::CollectivePhased,
            },
            direction: match self.drive.direction {
                DirectionConfig::Forward => Direction::Forward,
                DirectionConfig::Reversed => Direction::Reversed,
            },
        };
        if drive.mode != DriveMode::Separate {
            let right = spec.right_reservoir();
            if right.iter().any(|r| r.gamma != right[0].gamma) {
                return Err(invalid("drive.mode", "collective drives need equal couplings on the right side"));
            }
        }
        let deltas = self.deltas.values()?;
        let options = self.options()?;
        Ok(Plan { spec, params, drive, deltas, options })
    }

    fn options(&self) -> Result<SolveOptions, ConfigError> {
        let s = &self.solver;
        let positive = [
            ("solver.stationarity_tol", s.stationarity_tol),
            ("solver.t_final", s.t_final),
            ("solver.checkpoint_interval", s.checkpoint_interval),
            ("solver.max_step", s.max_step),
            ("solver.krylov_tol", s.krylov_tol),
            ("tolerances.homogeneity", self.tolerances.homogeneity),
            ("tolerances.divergence", self.tolerances.divergence),
            ("tolerances.degeneracy", self.tolerances.degeneracy),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if s.checkpoint_interval > s.t_final {
            return Err(invalid("solver.checkpoint_interval", "exceeds solver.t_final"));
        }
        for (field, v, min) in [
            ("solver.krylov_dim", s.krylov_dim, 2),
            ("solver.gmres_restart", s.gmres_restart, 2),
            ("solver.gmres_max_iter", s.gmres_max_iter, 1),
            ("solver.gmres_max_outer", s.gmres_max_outer, 1),
        ] {
            if v < min {
                return Err(invalid(field, format!("must be at least {min}, got {v}")));
            }
        }
        Ok(SolveOptions {
            solver: match s.method {
                Method::Propagation => SolverKind::Propagation,
                Method::Preconditioned => SolverKind::Preconditioned,
                Method::Dense => SolverKind::Dense,
            },
            propagation: PropagationOptions {
                t_final: s.t_final,
                checkpoint_interval: s.checkpoint_interval,
                stationarity_tol: s.stationarity_tol,
                krylov_dim: s.krylov_dim,
                max_step: s.max_step,
                krylov_tol: s.krylov_tol,
            },
            gmres: GmresOptions {
                stationarity_tol: s.stationarity_tol,
                restart: s.gmres_restart,
                max_iter: s.gmres_max_iter,
                max_outer: s.gmres_max_outer,
            },
            homogeneity_tol: self.tolerances.homogeneity,
            divergence_tol: self.tolerances.divergence,
            degeneracy_tol: self.tolerances.degeneracy,
        })
    }
}

impl GeometryConfig {
    pub fn build(&self) -> Result<LatticeSpec, ConfigError> {
        let custom_fields = [
            ("column_sizes", self.column_sizes.is_some()),
            ("bonds", self.bonds.is_some()),
            ("left", self.left.is_some()),
            ("right", self.right.is_some()),
        ];
        let kind = if self.kind == "custom" {
            if let Some((name, _)) = custom_fields.iter().find(|(_, present)| !present) {
                return Err(invalid(&format!("geometry.{name}"), "required for a custom geometry"));
            }
            let column_sizes = self.column_sizes.clone().unwrap();
            let n: usize = column_sizes.iter().sum();
            let site = |field: &str, s: usize| {
                if s == 0 || s > n {
                    Err(invalid(field, format!("site {s} is not in 1..={n}")))
                } else {
                    Ok(s - 1)
                }
            };
            let mut bonds = Vec::new();
            for &[a, b] in self.bonds.as_ref().unwrap() {
                bonds.push((site("geometry.bonds", a)?, site("geometry.bonds", b)?));
            }
            let reservoirs = |field: &str, list: &[ReservoirConfig]| {
                list.iter()
                    .map(|r| {
                        if !(r.gamma.is_finite() && r.gamma > 0.0) {
                            return Err(invalid(field, format!("gamma must be positive, got {}", r.gamma)));
                        }
                        Ok((site(field, r.site)?, r.gamma))
                    })
                    .collect::<Result<Vec<_>, _>>()
            };
            GeometryKind::Custom(CustomGeometry {
                left: reservoirs("geometry.left", self.left.as_ref().unwrap())?,
                right: reservoirs("geometry.right", self.right.as_ref().unwrap())?,
                column_sizes,
                bonds,
            })
        } else {
            let kind = GeometryKind::from_name(&self.kind).ok_or_else(|| {
                invalid(
                    "geometry.kind",
                    format!("unknown geometry `{}` (expected triangular10, asym8, sym10, sym9 or custom)", self.kind),
                )
            })?;
            if let Some((name, _)) = custom_fields.iter().find(|(_, present)| *present) {
                return Err(invalid(&format!("geometry.{name}"), "only allowed with kind = \"custom\""));
            }
            kind
        };
        build_geometry(&kind).map_err(|e| invalid("geometry", e.to_string()))
    }
}

impl FieldConfig {
    pub fn assign(&self, spec: &LatticeSpec) -> Result<FieldAssignment, ConfigError> {
        if !self.h0.is_finite() {
            return Err(invalid("field.h0", "must be finite"));
        }
        if !self.step.is_finite() {
            return Err(invalid("field.step", "must be finite"));
        }
        let profile = match self.kind {
            FieldKind::Homogeneous => FieldProfile::Homogeneous(self.h0),
            FieldKind::LeftToRight => FieldProfile::AscendingLR { h0: self.h0, step: self.step },
            FieldKind::RightToLeft => FieldProfile::AscendingRL { h0: self.h0, step: self.step },
        };
        Ok(assign_field(spec, profile))
    }
}

impl DeltaConfig {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let range = [self.min, self.max, self.step];
        let deltas = match (&self.values, range) {
            (Some(_), r) if r.iter().any(Option::is_some) => {
                return Err(invalid("deltas", "give either `values` or `min`/`max`/`step`, not both"))
            }
            (Some(v), _) => v.clone(),
            (None, [Some(lo), Some(hi), Some(step)]) => {
                if !(step > 0.0) {
                    return Err(invalid("deltas.step", format!("must be positive, got {step}")));
                }
                if !(hi >= lo) {
                    return Err(invalid("deltas.max", format!("{hi} is below deltas.min = {lo}")));
                }
                delta_grid(lo, hi, step).map_err(|e| invalid("deltas", e.to_string()))?
            }
            (None, _) => return Err(invalid("deltas", "needs `values` or all of `min`, `max`, `step`")),
        };
        if deltas.is_empty() {
            return Err(invalid("deltas.values", "is empty"));
        }
        if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
            return Err(invalid("deltas.values", format!("{d} is not finite")));
        }
        Ok(deltas)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [geometry]
        kind = "asym8"
        [field]
        kind = "left-to-right"
        h0 = 1.0
        step = 1.0
        [deltas]
        min = -1.0
        max = 1.0
        step = 0.5
    "#;

    fn with(extra: &str) -> String {
        format!("{MINIMAL}\n{extra}")
    }

    fn field_of(err: ConfigError) -> String {
        match err {
            ConfigError::Invalid { field, .. } => field,
            other => panic!("expected a field error, got {other}"),
        }
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.deltas, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(plan.options, SolveOptions::default());
        assert_eq!(plan.params.field.values[7], 4.0);
        assert_eq!(plan.drive, DriveSpec::separate(Direction::Forward));
        assert!(cfg.output.timing);
    }

    #[test]
    fn round_trips() {
        let cfg = RunConfig::parse(&with("[solver]\nmethod = \"dense\"\nkrylov_dim = 12")).unwrap();
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.to_toml(), cfg.to_toml());
    }

    #[test]
    fn field_level_errors() {
        let bad = |extra: &str| field_of(RunConfig::parse(&with(extra)).unwrap().plan().unwrap_err());
        assert_eq!(bad("[model]\nalpha = 1.0\nf = 1.5"), "model.f");
        assert_eq!(bad("[solver]\nstationarity_tol = 0.0"), "solver.stationarity_tol");
        assert_eq!(bad("[solver]\nkrylov_dim = 1"), "solver.krylov_dim");
        assert_eq!(bad("[tolerances]\ndegeneracy = -1e-6"), "tolerances.degeneracy");

        let text = MINIMAL.replace("step = 0.5", "step = -0.5");
        assert_eq!(field_of(RunConfig::parse(&text).unwrap().plan().unwrap_err()), "deltas.step");
        let text = MINIMAL.replace("kind = \"asym8\"", "kind = \"hexagon\"");
        assert_eq!(field_of(RunConfig::parse(&text).unwrap().plan().unwrap_err()), "geometry.kind");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse(&with("[solver]\ntolerance = 1e-8")).unwrap_err();
        assert!(err.to_string().contains("tolerance"), "{err}");
    }

    #[test]
    fn custom_geometry_is_one_based() {
        let text = MINIMAL.replace(
            "kind = \"asym8\"",
            "kind = \"custom\"\ncolumn_sizes = [1, 2]\nbonds = [[1, 2], [1, 3], [2, 3]]\n\
             left = [{ site = 1, gamma = 1.0 }]\nright = [{ site = 2, gamma = 0.5 }, { site = 3, gamma = 0.5 }]",
        );
        let plan = RunConfig::parse(&text).unwrap().plan().unwrap();
        assert_eq!(plan.spec.n_sites(), 3);
        assert_eq!(plan.spec.bonds(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(plan.params.field.values, vec![1.0, 2.0, 2.0]);

        let missing = MINIMAL.replace("kind = \"asym8\"", "kind = \"custom\"\ncolumn_sizes = [1, 1]");
        assert_eq!(field_of(RunConfig::parse(&missing).unwrap().plan().unwrap_err()), "geometry.bonds");
        let out_of_range = text.replace("[[1, 2], [1, 3], [2, 3]]", "[[1, 2], [1, 4]]");
        assert_eq!(field_of(RunConfig::parse(&out_of_range).unwrap().plan().unwrap_err()), "geometry.bonds");
    }

    #[test]
    fn explicit_values_exclude_range() {
        let text = MINIMAL.replace("min = -1.0", "values = [0.0]\nmin = -1.0");
        assert_eq!(field_of(RunConfig::parse(&text).unwrap().plan().unwrap_err()), "deltas");
    }
}
