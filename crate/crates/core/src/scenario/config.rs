use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{MaterialProps, PlaneModel, CELSIUS_OFFSET};
use crate::error::{Error, Result};
use crate::mesh::{build_dof_map, generate_plate_mesh, BoundaryConditions, PlateGeometry};
use crate::reduction::ReductionMethod;
use crate::statespace::DEFAULT_DENSE_LIMIT;
use crate::transient::{ExcitationSpec, IntegratorOptions, Scheme, DEFAULT_ATOL, DEFAULT_RTOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Reserved; no numerical step is random.
    #[serde(default)]
    pub seed: u64,
    pub geometry: PlateGeometry,
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub boundary: BoundaryConditions,
    pub reduction: ReductionConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub excitation: ExcitationSpec,
    #[serde(default)]
    pub transient: TransientConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
}

/// Material with the reference temperature given in kelvin or Celsius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub thermal_expansion: f64,
    pub conductivity: f64,
    pub specific_heat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_temperature_celsius: Option<f64>,
    #[serde(default)]
    pub plane: PlaneModel,
}

impl MaterialConfig {
    pub fn props(&self) -> Result<MaterialProps> {
        let t0 = match (self.reference_temperature, self.reference_temperature_celsius) {
            (Some(k), None) => k,
            (None, Some(c)) => c + CELSIUS_OFFSET,
            _ => {
                return Err(Error::config(
                    "material.reference_temperature",
                    "give exactly one of reference_temperature (K) or reference_temperature_celsius",
                ))
            }
        };
        let props = MaterialProps {
            youngs_modulus: self.youngs_modulus,
            poisson_ratio: self.poisson_ratio,
            density: self.density,
            thermal_expansion: self.thermal_expansion,
            conductivity: self.conductivity,
            specific_heat: self.specific_heat,
            reference_temperature: t0,
            plane: self.plane,
        };
        props
            .validate()
            .map_err(|e| Error::config("material", strip_prefix(e)))?;
        Ok(props)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCounts {
    pub structural: usize,
    pub thermal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    /// Method names; see [`ReductionMethod::as_str`].
    pub methods: Vec<String>,
    /// Mode counts to sweep, in order.
    pub modes: Vec<ModeCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Starting purely-real tolerance for spectrum classification.
    #[serde(default = "default_real_tol")]
    pub real_tol: f64,
}

fn default_real_tol() -> f64 {
    crate::analysis::DEFAULT_REAL_TOL
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            real_tol: default_real_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientConfig {
    #[serde(default)]
    pub enabled: bool,
    /// End of the window starting at `t = 0` (s).
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Number of sample intervals on the window.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Classical RK4 with this step instead of adaptive Dormand-Prince.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
    /// Mode counts of the reduced models integrated; defaults to the first
    /// entry of `reduction.modes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<ModeCounts>,
    /// Times at which per-node fields are written (nearest sample).
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

fn default_t_end() -> f64 {
    0.01
}
fn default_samples() -> usize {
    20
}
fn default_rtol() -> f64 {
    DEFAULT_RTOL
}
fn default_atol() -> f64 {
    DEFAULT_ATOL
}

impl Default for TransientConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            t_end: default_t_end(),
            samples: default_samples(),
            rtol: default_rtol(),
            atol: default_atol(),
            fixed_step: None,
            modes: None,
            snapshots: Vec::new(),
        }
    }
}

impl TransientConfig {
    pub fn integrator(&self) -> IntegratorOptions {
        let mut opts = IntegratorOptions::with_tol(self.rtol, self.atol);
        if let Some(step) = self.fixed_step {
            opts.scheme = Scheme::Rk4 { step };
        }
        opts
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write reduced `A`, `B`, `T` as Matrix Market files.
    #[serde(default)]
    pub export_reduced: bool,
}

/// One validation finding, keyed by the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
    /// Free DOF counts, when the mesh and boundary conditions resolve.
    pub n_structural: Option<usize>,
    pub n_thermal: Option<usize>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// The first diagnostic as a config error.
    pub fn into_result(self) -> Result<(usize, usize)> {
        match self.diagnostics.into_iter().next() {
            Some(d) => Err(Error::Config {
                path: d.path,
                message: d.message,
            }),
            None => Ok((
                self.n_structural.expect("resolved when valid"),
                self.n_thermal.expect("resolved when valid"),
            )),
        }
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::InvalidInput(m) => m,
        other => other.to_string(),
    }
}

fn line_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let path = match e.span() {
                Some(span) => {
                    let (line, col) = line_of(text, span.start);
                    format!("line {line}, column {col}")
                }
                None => "config".to_string(),
            };
            Error::Config {
                path,
                message: e.message().to_string(),
            }
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            path: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text)?,
            _ => Self::from_toml_str(&text)?,
        };
        Ok((cfg, text))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parsed method list; unknown names are config errors.
    pub fn methods(&self) -> Result<Vec<ReductionMethod>> {
        parse_methods(&self.reduction.methods, "reduction.methods")
    }

    /// Mode counts of the transient reduced models.
    pub fn transient_modes(&self) -> Option<ModeCounts> {
        self.transient.modes.or_else(|| self.reduction.modes.first().copied())
    }

    /// Static checks that need no numerics beyond mesh generation and DOF
    /// numbering. Every problem found is reported.
    pub fn validate(&self) -> Validation {
        let mut diags = Vec::new();
        let mut push = |path: &str, message: String| {
            diags.push(Diagnostic {
                path: path.to_string(),
                message,
            })
        };

        if self.name.trim().is_empty() {
            push("name", "must not be empty".into());
        }
        if let Err(e) = self.geometry.validate() {
            push("geometry", strip_prefix(e));
        }
        if self.mesh.nx == 0 || self.mesh.ny == 0 {
            push("mesh", format!("nx and ny must be at least 1, got {}x{}", self.mesh.nx, self.mesh.ny));
        }
        if let Err(e) = self.material.props() {
            match e {
                Error::Config { path, message } => push(&path, message),
                other => push("material", other.to_string()),
            }
        }
        let methods = match self.methods() {
            Ok(m) => m,
            Err(Error::Config { path, message }) => {
                push(&path, message);
                Vec::new()
            }
            Err(e) => {
                push("reduction.methods", e.to_string());
                Vec::new()
            }
        };
        if self.reduction.methods.is_empty() {
            push("reduction.methods", "at least one method is required".into());
        }
        if self.reduction.modes.is_empty() {
            push("reduction.modes", "at least one mode count is required".into());
        }
        if !(self.analysis.real_tol > 0.0 && self.analysis.real_tol <= crate::analysis::MAX_REAL_TOL) {
            push(
                "analysis.real_tol",
                format!(
                    "must lie in (0, {:e}], got {:e}",
                    crate::analysis::MAX_REAL_TOL,
                    self.analysis.real_tol
                ),
            );
        }

        let tr = &self.transient;
        if tr.enabled {
            if !(tr.t_end > 0.0 && tr.t_end.is_finite()) {
                push("transient.t_end", format!("must be positive, got {}", tr.t_end));
            }
            if tr.samples == 0 {
                push("transient.samples", "must be at least 1".into());
            }
            if !(tr.rtol > 0.0 && tr.rtol.is_finite()) {
                push("transient.rtol", format!("must be positive, got {:e}", tr.rtol));
            }
            if !(tr.atol >= 0.0 && tr.atol.is_finite()) {
                push("transient.atol", format!("must be non-negative, got {:e}", tr.atol));
            }
            if let Some(h) = tr.fixed_step {
                if !(h > 0.0 && h.is_finite()) {
                    push("transient.fixed_step", format!("must be positive, got {h}"));
                }
            }
            for (i, &t) in tr.snapshots.iter().enumerate() {
                if !(0.0..=tr.t_end).contains(&t) {
                    push(
                        &format!("transient.snapshots[{i}]"),
                        format!("{t} lies outside [0, {}]", tr.t_end),
                    );
                }
            }
        }

        // Mesh-dependent checks.
        let (mut n_s, mut n_t) = (None, None);
        if self.geometry.validate().is_ok() && self.mesh.nx > 0 && self.mesh.ny > 0 {
            match generate_plate_mesh(&self.geometry, self.mesh.nx, self.mesh.ny) {
                Ok(mesh) => {
                    let mut sets_ok = true;
                    for (field, sets) in [
                        ("boundary.fixed_displacement", &self.boundary.fixed_displacement),
                        ("boundary.fixed_temperature", &self.boundary.fixed_temperature),
                    ] {
                        for (i, s) in sets.iter().enumerate() {
                            if mesh.node_set(s).is_err() {
                                push(&format!("{field}[{i}]"), unknown_set(s, &mesh));
                                sets_ok = false;
                            }
                        }
                    }
                    for (i, l) in self.excitation.structural.iter().enumerate() {
                        if mesh.node_set(&l.node_set).is_err() {
                            push(
                                &format!("excitation.structural[{i}].node_set"),
                                unknown_set(&l.node_set, &mesh),
                            );
                        }
                        if !l.amplitude.is_finite() || !l.omega.is_finite() {
                            push(&format!("excitation.structural[{i}]"), "amplitude and omega must be finite".into());
                        }
                    }
                    for (i, l) in self.excitation.thermal.iter().enumerate() {
                        if mesh.node_set(&l.node_set).is_err() {
                            push(
                                &format!("excitation.thermal[{i}].node_set"),
                                unknown_set(&l.node_set, &mesh),
                            );
                        }
                        if !l.amplitude.is_finite() || !l.omega.is_finite() {
                            push(&format!("excitation.thermal[{i}]"), "amplitude and omega must be finite".into());
                        }
                    }
                    if sets_ok {
                        if let Ok(dofs) = build_dof_map(&mesh, &self.boundary) {
                            n_s = Some(dofs.n_structural());
                            n_t = Some(dofs.n_thermal());
                        }
                    }
                }
                Err(e) => push("mesh", strip_prefix(e)),
            }
        }

        if let (Some(ns), Some(nt)) = (n_s, n_t) {
            if ns == 0 {
                push("boundary.fixed_displacement", "no free structural DOFs remain".into());
            }
            if nt == 0 {
                push("boundary.fixed_temperature", "no free thermal DOFs remain".into());
            }
            let mut check_counts = |path: String, m: &ModeCounts| {
                if m.structural == 0 || m.structural > ns {
                    push(
                        &format!("{path}.structural"),
                        format!("n_s = {} must lie in 1..={ns} (N_s = {ns})", m.structural),
                    );
                }
                if m.thermal == 0 || m.thermal > nt {
                    push(
                        &format!("{path}.thermal"),
                        format!("n_t = {} must lie in 1..={nt} (N_T = {nt})", m.thermal),
                    );
                }
            };
            for (i, m) in self.reduction.modes.iter().enumerate() {
                check_counts(format!("reduction.modes[{i}]"), m);
            }
            if let Some(m) = &tr.modes {
                check_counts("transient.modes".into(), m);
            }
            let dim = 2 * ns + nt;
            if dim > DEFAULT_DENSE_LIMIT {
                push(
                    "mesh",
                    format!(
                        "state dimension {dim} exceeds the dense eigensolver limit {DEFAULT_DENSE_LIMIT}"
                    ),
                );
            }
            if methods.contains(&ReductionMethod::Superposition) && ns == 0 {
                push("reduction.methods", "superposition needs structural DOFs".into());
            }
        }

        Validation {
            diagnostics: diags,
            n_structural: n_s,
            n_thermal: n_t,
        }
    }
}

fn unknown_set(name: &str, mesh: &crate::mesh::Mesh) -> String {
    let known: Vec<&str> = mesh.node_sets.keys().map(String::as_str).collect();
    format!("unknown node set '{name}' (known: {})", known.join(", "))
}

/// Parses method names, reporting the first unknown one by list position.
pub fn parse_methods(names: &[String], path: &str) -> Result<Vec<ReductionMethod>> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            ReductionMethod::parse(n).ok_or_else(|| {
                let known: Vec<&str> = ReductionMethod::ALL.iter().map(|m| m.as_str()).collect();
                Error::config(
                    format!("{path}[{i}]"),
                    format!("unknown method '{n}' (expected one of {})", known.join(", ")),
                )
            })
        })
        .collect()
}
