use faer::{c64, Mat};

use crate::analysis::classify;
use crate::error::{Error, Result};
use crate::statespace::{full_eigensolution, SymStateSpaceModel};

use super::{ReducedStateSpaceModel, ReductionMethod};

/// Projection onto coupled eigenvectors of the full pencil: the first `n_t`
/// thermal-class vectors and the first `n_s` structural conjugate pairs,
/// each pair entering as its real and imaginary parts. Every column is
/// scaled to unit length and the reduced matrices are the congruences
/// `T^T A T`, `T^T B T`.
pub fn reduce_mode_superposition(
    ssm: &SymStateSpaceModel,
    n_s: usize,
    n_t: usize,
) -> Result<ReducedStateSpaceModel> {
    let (ns, nt) = (ssm.n_structural(), ssm.n_thermal());
    if n_s > ns || n_t > nt || n_s + n_t == 0 {
        return Err(Error::invalid(format!(
            "superposition counts ({n_s}, {n_t}) must lie within ({ns}, {nt}) and not both be zero"
        )));
    }
    let eig = full_eigensolution(ssm, true)?;
    let spec = classify(&eig.values, nt)?;
    let vectors = eig.vectors.as_ref().expect("vectors requested");
    let n = ssm.dim();
    let r = 2 * n_s + n_t;

    // state order of the reduced coordinates: structural pairs first, then
    // thermal, mirroring the block reductions
    let mut t = Mat::<f64>::zeros(n, r);
    for (k, &idx) in spec.structural_index.iter().take(n_s).enumerate() {
        for i in 0..n {
            t[(i, 2 * k)] = vectors[(i, idx)].re;
            t[(i, 2 * k + 1)] = vectors[(i, idx)].im;
        }
    }
    for (k, &idx) in spec.thermal_index.iter().take(n_t).enumerate() {
        let phase = dominant_phase(vectors, idx);
        for i in 0..n {
            t[(i, 2 * n_s + k)] = (vectors[(i, idx)] * phase).re;
        }
    }
    for j in 0..r {
        let norm = (0..n).map(|i| t[(i, j)] * t[(i, j)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidBasis(format!("superposition column {j} vanishes")));
        }
        for i in 0..n {
            t[(i, j)] /= norm;
        }
    }

    let a = ssm.a_dense();
    let b = ssm.b_dense();
    let mut a_r = t.transpose() * (&a * &t);
    let mut b_r = t.transpose() * (&b * &t);
    super::symmetrize(&mut a_r);
    super::symmetrize(&mut b_r);

    Ok(ReducedStateSpaceModel {
        method: ReductionMethod::Superposition,
        a: a_r,
        b: b_r,
        t,
        n_structural_modes: n_s,
        n_thermal_modes: n_t,
        n_structural: ns,
        n_thermal: nt,
        structural_basis: None,
        thermal_basis: None,
        updated_capacity: None,
    })
}

/// Unit factor rotating the largest entry of column `j` onto the real axis,
/// so a real eigenvector returned with an arbitrary complex phase becomes
/// real.
fn dominant_phase(v: &Mat<c64>, j: usize) -> c64 {
    let mut best = c64::new(0.0, 0.0);
    for i in 0..v.nrows() {
        if v[(i, j)].norm() > best.norm() {
            best = v[(i, j)];
        }
    }
    if best.norm() == 0.0 {
        c64::new(1.0, 0.0)
    } else {
        best.conj() / best.norm()
    }
}
