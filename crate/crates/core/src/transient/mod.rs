//! Time integration of `A d' + B d = f(t)` for full and reduced models.

mod excitation;
mod integrator;
mod rhs;

pub use excitation::{
    sample_load, ExcitationSpec, LoadEntry, LoadKind, LoadPattern, StructuralLoad, ThermalLoad,
};
pub use integrator::{
    check_samples, solve, IntegratorOptions, IntegratorStats, Rhs, Scheme, Trajectory,
    DEFAULT_ATOL, DEFAULT_RTOL,
};
pub use rhs::{DenseRhs, FullRhs};

use faer::Mat;

use crate::error::{Error, Result};
use crate::mesh::DofMap;
use crate::reduction::{split_state, ReducedStateSpaceModel};
use crate::statespace::SymStateSpaceModel;

#[derive(Debug, Clone)]
pub struct TransientResult {
    pub times: Vec<f64>,
    /// States in the integrated coordinates (full or reduced).
    pub states: Vec<Vec<f64>>,
    /// Largest `|theta|` over the thermal DOFs at each sample (K).
    pub max_theta: Vec<f64>,
    /// Largest nodal displacement magnitude at each sample (m).
    pub max_u: Vec<f64>,
    pub stats: IntegratorStats,
    pub reduced: bool,
}

/// `n + 1` evenly spaced times on `[0, t_end]`.
pub fn uniform_samples(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

/// Largest nodal displacement magnitude. Without a DOF map each DOF counts
/// as its own node.
pub fn max_displacement(u: &[f64], dofs: Option<&DofMap>) -> f64 {
    match dofs {
        Some(dofs) if dofs.n_structural() == u.len() => nodal_magnitudes(u, dofs)
            .into_iter()
            .fold(0.0, f64::max),
        _ => u.iter().fold(0.0f64, |m, x| m.max(x.abs())),
    }
}

fn nodal_magnitudes(u: &[f64], dofs: &DofMap) -> Vec<f64> {
    let mut sq = vec![0.0; dofs.n_nodes()];
    for (i, &x) in u.iter().enumerate() {
        sq[dofs.structural_node(i).0] += x * x;
    }
    sq.into_iter().map(f64::sqrt).collect()
}

fn summarize(full_states: &[Vec<f64>], ns: usize, dofs: Option<&DofMap>) -> (Vec<f64>, Vec<f64>) {
    full_states
        .iter()
        .map(|d| {
            let (u, _, theta) = split_state(d, ns);
            (
                theta.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                max_displacement(u, dofs),
            )
        })
        .unzip()
}

/// Integrates the full model with its block-structured right-hand side.
pub fn integrate_full(
    ssm: &SymStateSpaceModel,
    load: &LoadPattern,
    d0: &[f64],
    samples: &[f64],
    opts: &IntegratorOptions,
) -> Result<TransientResult> {
    let mut rhs = FullRhs::new(ssm, load)?;
    let tr = solve(&mut rhs, d0, samples, opts)?;
    let (max_theta, max_u) = summarize(&tr.states, ssm.n_structural(), ssm.model().dofs.as_ref());
    Ok(TransientResult {
        times: tr.times,
        states: tr.states,
        max_theta,
        max_u,
        stats: tr.stats,
        reduced: false,
    })
}

/// Integrates a reduced model driven by the full load through `T^T f`.
/// Field maxima are taken on the reconstructed states.
pub fn integrate_reduced(
    r: &ReducedStateSpaceModel,
    load: &LoadPattern,
    d0: &[f64],
    samples: &[f64],
    opts: &IntegratorOptions,
    dofs: Option<&DofMap>,
) -> Result<TransientResult> {
    let mut rhs = DenseRhs::reduced(r, load)?;
    let tr = solve(&mut rhs, d0, samples, opts)?;
    let full = r.reconstruct_trajectory(&tr.states)?;
    let (max_theta, max_u) = summarize(&full, r.n_structural, dofs);
    Ok(TransientResult {
        times: tr.times,
        states: tr.states,
        max_theta,
        max_u,
        stats: tr.stats,
        reduced: true,
    })
}

/// Integrates a dense pencil `A d' + B d = f(t)` whose load is given in the
/// pencil's own coordinates. Field maxima treat the state as `(u, u', theta)`
/// with `n_structural` displacement DOFs.
pub fn integrate(
    a: &Mat<f64>,
    b: &Mat<f64>,
    load: &LoadPattern,
    d0: &[f64],
    samples: &[f64],
    opts: &IntegratorOptions,
    n_structural: usize,
) -> Result<TransientResult> {
    if 2 * n_structural > a.nrows() {
        return Err(Error::invalid("structural count exceeds the state size"));
    }
    let mut rhs = DenseRhs::new(a, b, load)?;
    let tr = solve(&mut rhs, d0, samples, opts)?;
    let (max_theta, max_u) = summarize(&tr.states, n_structural, None);
    Ok(TransientResult {
        times: tr.times,
        states: tr.states,
        max_theta,
        max_u,
        stats: tr.stats,
        reduced: false,
    })
}

/// Absolute differences between a full trajectory and a reconstructed
/// reduced one.
#[derive(Debug, Clone)]
pub struct FieldDifference {
    pub times: Vec<f64>,
    /// `|d theta|` per thermal DOF per sample.
    pub theta: Vec<Vec<f64>>,
    /// `|d u|` per structural DOF per sample.
    pub u: Vec<Vec<f64>>,
    /// Largest `|d theta|` per sample.
    pub max_theta: Vec<f64>,
    /// Largest nodal `|d u|` magnitude per sample.
    pub max_u: Vec<f64>,
}

impl FieldDifference {
    pub fn peak_theta(&self) -> f64 {
        self.max_theta.iter().copied().fold(0.0, f64::max)
    }

    pub fn peak_u(&self) -> f64 {
        self.max_u.iter().copied().fold(0.0, f64::max)
    }
}

pub fn field_difference(
    full: &TransientResult,
    reduced: &TransientResult,
    r: &ReducedStateSpaceModel,
    dofs: Option<&DofMap>,
) -> Result<FieldDifference> {
    if full.times != reduced.times {
        return Err(Error::invalid("full and reduced sample grids differ"));
    }
    let ns = r.n_structural;
    let mut out = FieldDifference {
        times: full.times.clone(),
        theta: Vec::with_capacity(full.times.len()),
        u: Vec::with_capacity(full.times.len()),
        max_theta: Vec::with_capacity(full.times.len()),
        max_u: Vec::with_capacity(full.times.len()),
    };
    for (df, dr) in full.states.iter().zip(&reduced.states) {
        if df.len() != r.full_dim() {
            return Err(Error::DimensionMismatch {
                expected: r.full_dim(),
                found: df.len(),
            });
        }
        let rec = r.reconstruct(dr)?;
        let diff: Vec<f64> = df.iter().zip(&rec).map(|(a, b)| a - b).collect();
        let (du, _, dtheta) = split_state(&diff, ns);
        out.max_theta
            .push(dtheta.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        out.max_u.push(max_displacement(du, dofs));
        out.theta.push(dtheta.iter().map(|x| x.abs()).collect());
        out.u.push(du.iter().map(|x| x.abs()).collect());
    }
    Ok(out)
}
