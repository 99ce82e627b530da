//! Projection of the coupled state-space model onto modal bases.
//!
//! Uncoupled and two-step reductions both use the block projection
//! `T = blockdiag(Phi, Phi, Xi)` and share
//! `A_r = diag(-Lambda, I, -I)` exactly; they differ only in the thermal
//! basis. Neither calls the coupled dense eigensolver.

mod second_order;
mod superposition;

pub use second_order::reduce_two_step_second_order;
pub use superposition::reduce_mode_superposition;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::assembly::CoupledSecondOrderModel;
use crate::eigensolve::{sym_gen_eig, Metric, ModalBasis};
use crate::error::{Error, Result};
use crate::sparse;
use crate::statespace::SymStateSpaceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionMethod {
    Uncoupled,
    TwoStep,
    /// Two-step model built along the second-order path.
    TwoStepSecondOrder,
    Superposition,
}

impl ReductionMethod {
    pub const ALL: [ReductionMethod; 4] = [
        ReductionMethod::Uncoupled,
        ReductionMethod::TwoStep,
        ReductionMethod::TwoStepSecondOrder,
        ReductionMethod::Superposition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReductionMethod::Uncoupled => "uncoupled",
            ReductionMethod::TwoStep => "two-step",
            ReductionMethod::TwoStepSecondOrder => "two-step-second-order",
            ReductionMethod::Superposition => "superposition",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl std::fmt::Display for ReductionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Psi_TT = K_Ts (K_ss^-1 - Phi Lambda^-1 Phi^T) K_sT`, dense symmetric.
#[derive(Debug, Clone)]
pub struct ResidualFlexibilityProduct {
    pub psi: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct ReducedStateSpaceModel {
    pub method: ReductionMethod,
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    /// Projection from reduced to full state coordinates.
    pub t: Mat<f64>,
    /// Retained structural modes (pairs, for superposition).
    pub n_structural_modes: usize,
    /// Retained thermal modes.
    pub n_thermal_modes: usize,
    pub n_structural: usize,
    pub n_thermal: usize,
    pub structural_basis: Option<ModalBasis>,
    pub thermal_basis: Option<ModalBasis>,
    /// Updated thermal metric `D_TT / T0 + Psi_TT` (two-step only).
    pub updated_capacity: Option<Mat<f64>>,
}

impl ReducedStateSpaceModel {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn full_dim(&self) -> usize {
        self.t.nrows()
    }

    /// `f_r = T^T f`
    pub fn load(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.full_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.full_dim(),
                found: f.len(),
            });
        }
        let r = self.dim();
        let mut out = vec![0.0; r];
        for (j, o) in out.iter_mut().enumerate() {
            let col = self.t.col(j);
            *o = f.iter().enumerate().map(|(i, &x)| col[i] * x).sum();
        }
        Ok(out)
    }

    /// `d = T d_r`
    pub fn reconstruct(&self, d_r: &[f64]) -> Result<Vec<f64>> {
        if d_r.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d_r.len(),
            });
        }
        let mut d = vec![0.0; self.full_dim()];
        for (j, &x) in d_r.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let col = self.t.col(j);
            for (i, di) in d.iter_mut().enumerate() {
                *di += col[i] * x;
            }
        }
        Ok(d)
    }

    /// Reconstructs every sample of a reduced trajectory.
    pub fn reconstruct_trajectory(&self, states: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        states.iter().map(|s| self.reconstruct(s)).collect()
    }
}

/// Builds the reduced model of `method` with `n_s` structural modes (pairs,
/// for superposition) and `n_t` thermal modes.
pub fn reduce(
    method: ReductionMethod,
    ssm: &SymStateSpaceModel,
    n_s: usize,
    n_t: usize,
) -> Result<ReducedStateSpaceModel> {
    match method {
        ReductionMethod::Uncoupled => reduce_uncoupled(ssm.model(), n_s, n_t),
        ReductionMethod::TwoStep => reduce_two_step(ssm.model(), n_s, n_t),
        ReductionMethod::TwoStepSecondOrder => reduce_two_step_second_order(ssm.model(), n_s, n_t),
        ReductionMethod::Superposition => reduce_mode_superposition(ssm, n_s, n_t),
    }
}

/// Splits a full state into `(u, u', theta)`.
pub fn split_state(d: &[f64], n_structural: usize) -> (&[f64], &[f64], &[f64]) {
    let (u, rest) = d.split_at(n_structural);
    let (v, theta) = rest.split_at(n_structural);
    (u, v, theta)
}

fn check_counts(model: &CoupledSecondOrderModel, n_s: usize, n_t: usize) -> Result<()> {
    let (ns, nt) = (model.n_structural(), model.n_thermal());
    if n_s == 0 || n_s > ns {
        return Err(Error::invalid(format!(
            "structural mode count {n_s} must be in 1..={ns}"
        )));
    }
    if n_t == 0 || n_t > nt {
        return Err(Error::invalid(format!(
            "thermal mode count {n_t} must be in 1..={nt}"
        )));
    }
    Ok(())
}

pub(crate) fn structural_modes(model: &CoupledSecondOrderModel, n_s: usize) -> Result<ModalBasis> {
    sym_gen_eig(
        sparse::to_dense(&model.stiffness).as_ref(),
        sparse::to_dense(&model.mass).as_ref(),
        n_s,
        Metric::Mass,
    )
}

/// Projection onto independent structural and thermal eigenbases.
pub fn reduce_uncoupled(
    model: &CoupledSecondOrderModel,
    n_s: usize,
    n_t: usize,
) -> Result<ReducedStateSpaceModel> {
    check_counts(model, n_s, n_t)?;
    let phi = structural_modes(model, n_s)?;
    let xi = sym_gen_eig(
        sparse::to_dense(&model.conductivity).as_ref(),
        sparse::to_dense(&model.capacity).as_ref(),
        n_t,
        Metric::Capacity,
    )?;
    Ok(assemble_block_model(model, ReductionMethod::Uncoupled, phi, xi, None))
}

/// `Psi_TT` via one sparse Cholesky solve `K_ss X = K_sT` minus the
/// retained-mode part `(Phi^T K_sT)^T Lambda^-1 (Phi^T K_sT)`.
///
/// An empty basis gives the static-correction limit `K_Ts K_ss^-1 K_sT`.
pub fn residual_flexibility_coupling(
    model: &CoupledSecondOrderModel,
    structural: &ModalBasis,
) -> Result<ResidualFlexibilityProduct> {
    let (ns, nt) = (model.n_structural(), model.n_thermal());
    if structural.dim() != ns {
        return Err(Error::DimensionMismatch {
            expected: ns,
            found: structural.dim(),
        });
    }
    if let Some((i, l)) = structural
        .eigenvalues
        .iter()
        .enumerate()
        .find(|(_, l)| !(**l > 0.0 && l.is_finite()))
    {
        return Err(Error::InvalidBasis(format!(
            "structural eigenvalue {i} is {l}; residual flexibility needs positive eigenvalues"
        )));
    }
    let factor = model.factor_stiffness()?;
    let kst = sparse::to_dense(&model.coupling);
    let mut x = kst.clone();
    factor.solve_in_place(&mut x);
    let mut psi = kst.transpose() * &x;

    let k = structural.len();
    if k > 0 {
        let g = structural.vectors.transpose() * &kst;
        let scaled = Mat::from_fn(k, nt, |i, j| g[(i, j)] / structural.eigenvalues[i]);
        psi -= g.transpose() * &scaled;
    }
    symmetrize(&mut psi);
    Ok(ResidualFlexibilityProduct { psi })
}

/// Two-step reduction: structural modes, residual-flexibility update of the
/// thermal metric, then thermal modes of `(K_TT / T0, D_TT / T0 + Psi_TT)`.
pub fn reduce_two_step(
    model: &CoupledSecondOrderModel,
    n_s: usize,
    n_t: usize,
) -> Result<ReducedStateSpaceModel> {
    check_counts(model, n_s, n_t)?;
    let phi = structural_modes(model, n_s)?;
    let rf = residual_flexibility_coupling(model, &phi)?;
    let mut d_bar = sparse::to_dense(&model.capacity);
    d_bar += &rf.psi;
    let xi_bar = sym_gen_eig(
        sparse::to_dense(&model.conductivity).as_ref(),
        d_bar.as_ref(),
        n_t,
        Metric::UpdatedCapacity,
    )?;
    Ok(assemble_block_model(
        model,
        ReductionMethod::TwoStep,
        phi,
        xi_bar,
        Some(d_bar),
    ))
}

pub(crate) fn symmetrize(m: &mut Mat<f64>) {
    for j in 0..m.ncols() {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// ```text
/// A_r = [ -Lambda  0  0  ]    B_r = [ 0        Lambda  0      ]
///       [  0       I  0  ]          [ Lambda   0      -C      ]
///       [  0       0 -I  ]          [ 0       -C^T    -Theta  ]
/// ```
/// with `C = Phi^T K_sT Xi`.
fn assemble_block_model(
    model: &CoupledSecondOrderModel,
    method: ReductionMethod,
    phi: ModalBasis,
    xi: ModalBasis,
    updated_capacity: Option<Mat<f64>>,
) -> ReducedStateSpaceModel {
    let (ns, nt) = (model.n_structural(), model.n_thermal());
    let (ks, kt) = (phi.len(), xi.len());
    let r = 2 * ks + kt;
    let kst = sparse::to_dense(&model.coupling);
    let c = phi.vectors.transpose() * (&kst * &xi.vectors);

    let mut a = Mat::<f64>::zeros(r, r);
    let mut b = Mat::<f64>::zeros(r, r);
    for i in 0..ks {
        let l = phi.eigenvalues[i];
        a[(i, i)] = -l;
        a[(ks + i, ks + i)] = 1.0;
        b[(i, ks + i)] = l;
        b[(ks + i, i)] = l;
    }
    for i in 0..kt {
        a[(2 * ks + i, 2 * ks + i)] = -1.0;
        b[(2 * ks + i, 2 * ks + i)] = -xi.eigenvalues[i];
    }
    for i in 0..ks {
        for j in 0..kt {
            b[(ks + i, 2 * ks + j)] = -c[(i, j)];
            b[(2 * ks + j, ks + i)] = -c[(i, j)];
        }
    }

    let mut t = Mat::<f64>::zeros(2 * ns + nt, r);
    for j in 0..ks {
        for i in 0..ns {
            t[(i, j)] = phi.vectors[(i, j)];
            t[(ns + i, ks + j)] = phi.vectors[(i, j)];
        }
    }
    for j in 0..kt {
        for i in 0..nt {
            t[(2 * ns + i, 2 * ks + j)] = xi.vectors[(i, j)];
        }
    }

    ReducedStateSpaceModel {
        method,
        a,
        b,
        t,
        n_structural_modes: ks,
        n_thermal_modes: kt,
        n_structural: ns,
        n_thermal: nt,
        structural_basis: Some(phi),
        thermal_basis: Some(xi),
        updated_capacity,
    }
}
