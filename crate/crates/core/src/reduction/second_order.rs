use faer::Mat;

use crate::assembly::CoupledSecondOrderModel;
use crate::eigensolve::{sym_gen_eig, Metric, ModalBasis};
use crate::error::Result;
use crate::sparse;

use super::{check_counts, structural_modes, symmetrize, ReducedStateSpaceModel, ReductionMethod};

/// Reduced second-order system
///
/// ```text
/// [M_qq 0] [q'']   [0     0   ] [q']   [K_qq  -K_qe] [q]   [Phi^T f_s  ]
/// [0    0] [e'' ] + [C_eq  C_ee] [e' ] + [0      K_ee] [e] = [Xi^T Q / T0]
/// ```
/// in modal structural coordinates `q` and thermal coordinates `e`.
struct SecondOrderReduced {
    m_qq: Mat<f64>,
    k_qq: Mat<f64>,
    k_qe: Mat<f64>,
    c_eq: Mat<f64>,
    c_ee: Mat<f64>,
    k_ee: Mat<f64>,
}

/// The two-step model derived without the state-space projection: the
/// structural displacement is split into retained modes and a quasi-static
/// residual, the residual is eliminated from the heat equation, and the
/// resulting second-order system is converted to symmetric first-order form.
pub fn reduce_two_step_second_order(
    model: &CoupledSecondOrderModel,
    n_s: usize,
    n_t: usize,
) -> Result<ReducedStateSpaceModel> {
    check_counts(model, n_s, n_t)?;
    let (ns, nt) = (model.n_structural(), model.n_thermal());

    // u = Phi q + u_res
    let phi = structural_modes(model, n_s)?;

    // u_res = (K^-1 - Phi Lambda^-1 Phi^T) K_sT theta = U_res theta
    let kst = sparse::to_dense(&model.coupling);
    let mut u_res = kst.clone();
    model.factor_stiffness()?.solve_in_place(&mut u_res);
    let g = phi.vectors.transpose() * &kst;
    for i in 0..phi.len() {
        let inv = 1.0 / phi.eigenvalues[i];
        for j in 0..nt {
            let s = g[(i, j)] * inv;
            for r in 0..ns {
                u_res[(r, j)] -= phi.vectors[(r, i)] * s;
            }
        }
    }

    // Heat equation with u' = Phi q' + U_res theta':
    // (D + K_Ts U_res) theta' + K_Ts Phi q' + K theta = Q
    let kts = sparse::to_dense(model.coupling_t());
    let mut d_bar = sparse::to_dense(&model.capacity);
    d_bar += &kts * &u_res;
    symmetrize(&mut d_bar);

    let k_tt = sparse::to_dense(&model.conductivity);
    let xi = sym_gen_eig(k_tt.as_ref(), d_bar.as_ref(), n_t, Metric::UpdatedCapacity)?;

    let m = sparse::to_dense(&model.mass);
    let k = sparse::to_dense(&model.stiffness);
    let red = SecondOrderReduced {
        m_qq: phi.vectors.transpose() * &m * &phi.vectors,
        k_qq: phi.vectors.transpose() * &k * &phi.vectors,
        k_qe: phi.vectors.transpose() * &kst * &xi.vectors,
        c_eq: xi.vectors.transpose() * &kts * &phi.vectors,
        c_ee: xi.vectors.transpose() * &d_bar * &xi.vectors,
        k_ee: xi.vectors.transpose() * &k_tt * &xi.vectors,
    };
    Ok(to_state_space(model, red, phi, xi, d_bar))
}

/// Symmetric first-order form of the reduced second-order system with
/// state `(q, q', e)`, using modal orthonormality to replace the metric
/// blocks by identities.
fn to_state_space(
    model: &CoupledSecondOrderModel,
    red: SecondOrderReduced,
    phi: ModalBasis,
    xi: ModalBasis,
    d_bar: Mat<f64>,
) -> ReducedStateSpaceModel {
    let (ns, nt) = (model.n_structural(), model.n_thermal());
    let (ks, kt) = (phi.len(), xi.len());
    let r = 2 * ks + kt;
    let (s0, s1, s2) = (0, ks, 2 * ks);

    // Orthonormality holds only to rounding; the diagonal carries the modal
    // values and the off-diagonal rounding is dropped.
    let mut a = Mat::<f64>::zeros(r, r);
    let mut b = Mat::<f64>::zeros(r, r);
    for i in 0..ks {
        let lam = red.k_qq[(i, i)] / red.m_qq[(i, i)];
        a[(s0 + i, s0 + i)] = -lam;
        a[(s1 + i, s1 + i)] = 1.0;
        b[(s0 + i, s1 + i)] = lam;
        b[(s1 + i, s0 + i)] = lam;
    }
    for j in 0..kt {
        a[(s2 + j, s2 + j)] = -1.0;
        b[(s2 + j, s2 + j)] = -red.k_ee[(j, j)] / red.c_ee[(j, j)];
    }
    // K_qe and C_eq^T agree in exact arithmetic; their mean keeps B symmetric.
    for i in 0..ks {
        for j in 0..kt {
            let c = 0.5 * (red.k_qe[(i, j)] + red.c_eq[(j, i)]);
            b[(s1 + i, s2 + j)] = -c;
            b[(s2 + j, s1 + i)] = -c;
        }
    }

    let mut t = Mat::<f64>::zeros(2 * ns + nt, r);
    for j in 0..ks {
        for i in 0..ns {
            t[(i, s0 + j)] = phi.vectors[(i, j)];
            t[(ns + i, s1 + j)] = phi.vectors[(i, j)];
        }
    }
    for j in 0..kt {
        for i in 0..nt {
            t[(2 * ns + i, s2 + j)] = xi.vectors[(i, j)];
        }
    }

    ReducedStateSpaceModel {
        method: ReductionMethod::TwoStepSecondOrder,
        a,
        b,
        t,
        n_structural_modes: ks,
        n_thermal_modes: kt,
        n_structural: ns,
        n_thermal: nt,
        structural_basis: Some(phi),
        thermal_basis: Some(xi),
        updated_capacity: Some(d_bar),
    }
}
