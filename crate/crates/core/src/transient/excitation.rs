use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Direction, DofMap, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadKind {
    #[default]
    Constant,
    /// `amplitude * sin(omega t)`
    Sinusoid,
}

/// Force applied to every node of a set (N per node).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralLoad {
    pub node_set: String,
    pub direction: Direction,
    pub amplitude: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub kind: LoadKind,
}

/// Heat input applied to every node of a set (W per node).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalLoad {
    pub node_set: String,
    pub amplitude: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub kind: LoadKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationSpec {
    #[serde(default)]
    pub structural: Vec<StructuralLoad>,
    #[serde(default)]
    pub thermal: Vec<ThermalLoad>,
}

impl ExcitationSpec {
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        for l in &self.structural {
            mesh.node_set(&l.node_set)?;
            check_finite(l.amplitude, l.omega)?;
        }
        for l in &self.thermal {
            mesh.node_set(&l.node_set)?;
            check_finite(l.amplitude, l.omega)?;
        }
        Ok(())
    }
}

fn check_finite(amplitude: f64, omega: f64) -> Result<()> {
    if !amplitude.is_finite() || !omega.is_finite() {
        return Err(Error::invalid("load amplitude and frequency must be finite"));
    }
    Ok(())
}

/// One nonzero slot of the state-space load vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadEntry {
    pub slot: usize,
    pub amplitude: f64,
    pub omega: f64,
    pub kind: LoadKind,
}

impl LoadEntry {
    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            LoadKind::Constant => self.amplitude,
            LoadKind::Sinusoid => self.amplitude * (self.omega * t).sin(),
        }
    }
}

/// An excitation resolved against a DOF map: forces go to the velocity rows
/// and `-Q / T0` to the thermal rows of `f = (0, f_s, -Q / T0)`.
///
/// Loads on constrained DOFs are carried by the support and dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadPattern {
    pub dim: usize,
    pub entries: Vec<LoadEntry>,
}

impl LoadPattern {
    pub fn new(
        spec: &ExcitationSpec,
        mesh: &Mesh,
        dofs: &DofMap,
        reference_temperature: f64,
    ) -> Result<Self> {
        spec.validate(mesh)?;
        let ns = dofs.n_structural();
        let nt = dofs.n_thermal();
        let mut entries = Vec::new();
        for l in &spec.structural {
            for &node in mesh.node_set(&l.node_set)? {
                if let Some(d) = dofs.structural_dof(node, l.direction) {
                    entries.push(LoadEntry {
                        slot: ns + d,
                        amplitude: l.amplitude,
                        omega: l.omega,
                        kind: l.kind,
                    });
                }
            }
        }
        for l in &spec.thermal {
            for &node in mesh.node_set(&l.node_set)? {
                if let Some(d) = dofs.thermal_dof(node) {
                    entries.push(LoadEntry {
                        slot: 2 * ns + d,
                        amplitude: -l.amplitude / reference_temperature,
                        omega: l.omega,
                        kind: l.kind,
                    });
                }
            }
        }
        Ok(Self {
            dim: 2 * ns + nt,
            entries,
        })
    }

    /// A pattern with no entries.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Overwrites `f` with the load at time `t`.
    pub fn eval_into(&self, t: f64, f: &mut [f64]) {
        f.fill(0.0);
        for e in &self.entries {
            f[e.slot] += e.value(t);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut f = vec![0.0; self.dim];
        self.eval_into(t, &mut f);
        f
    }
}

/// The full state-space load vector at time `t`.
pub fn sample_load(
    spec: &ExcitationSpec,
    mesh: &Mesh,
    dofs: &DofMap,
    reference_temperature: f64,
    t: f64,
) -> Result<Vec<f64>> {
    Ok(LoadPattern::new(spec, mesh, dofs, reference_temperature)?.eval(t))
}
