//! Symmetric first-order form `A d' + B d = f` in the state
//! `d = (u, u', theta)` and its full coupled spectrum.

use std::cell::Cell;

use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};

use crate::assembly::CoupledSecondOrderModel;
use crate::error::{Error, Result};
use crate::sparse::{self, SpMat};

/// Largest state dimension the dense coupled eigensolver accepts by default.
pub const DEFAULT_DENSE_LIMIT: usize = 5000;

thread_local! {
    static COUPLED_SOLVES: Cell<usize> = const { Cell::new(0) };
}

/// Number of dense coupled eigensolves run on the current thread.
pub fn coupled_solve_count() -> usize {
    COUPLED_SOLVES.with(Cell::get)
}

/// Block form of
///
/// ```text
/// A = [ -K_ss   0     0    ]     B = [ 0      K_ss   0       ]
///     [  0      M_ss  0    ]         [ K_ss   0     -K_sT    ]
///     [  0      0    -D_TT ]         [ 0     -K_Ts  -K_TT    ]
/// ```
///
/// with the thermal blocks already divided by `T0`.
#[derive(Debug, Clone)]
pub struct SymStateSpaceModel {
    pub(crate) model: CoupledSecondOrderModel,
}

pub fn to_state_space(model: &CoupledSecondOrderModel) -> SymStateSpaceModel {
    SymStateSpaceModel {
        model: model.clone(),
    }
}

impl SymStateSpaceModel {
    pub fn model(&self) -> &CoupledSecondOrderModel {
        &self.model
    }

    pub fn n_structural(&self) -> usize {
        self.model.n_structural()
    }

    pub fn n_thermal(&self) -> usize {
        self.model.n_thermal()
    }

    pub fn dim(&self) -> usize {
        2 * self.n_structural() + self.n_thermal()
    }

    /// Stacks `(0, f_s, -Q_T / T0)`.
    pub fn load(&self, f_s: &[f64], q_t: &[f64]) -> Result<Vec<f64>> {
        let (ns, nt) = (self.n_structural(), self.n_thermal());
        if f_s.len() != ns {
            return Err(Error::DimensionMismatch {
                expected: ns,
                found: f_s.len(),
            });
        }
        if q_t.len() != nt {
            return Err(Error::DimensionMismatch {
                expected: nt,
                found: q_t.len(),
            });
        }
        let inv_t0 = 1.0 / self.model.reference_temperature;
        let mut f = vec![0.0; 2 * ns + nt];
        f[ns..2 * ns].copy_from_slice(f_s);
        for (dst, q) in f[2 * ns..].iter_mut().zip(q_t) {
            *dst = -q * inv_t0;
        }
        Ok(f)
    }

    pub fn a_sparse(&self) -> SpMat {
        let (ns, nt) = (self.n_structural(), self.n_thermal());
        let n = 2 * ns + nt;
        let mut b = sparse::TripletBuilder::new(n, n);
        for t in self.model.stiffness.as_ref().triplet_iter() {
            b.add(t.row, t.col, -*t.val);
        }
        for t in self.model.mass.as_ref().triplet_iter() {
            b.add(ns + t.row, ns + t.col, *t.val);
        }
        for t in self.model.capacity.as_ref().triplet_iter() {
            b.add(2 * ns + t.row, 2 * ns + t.col, -*t.val);
        }
        b.build()
    }

    pub fn b_sparse(&self) -> SpMat {
        let (ns, nt) = (self.n_structural(), self.n_thermal());
        let n = 2 * ns + nt;
        let mut b = sparse::TripletBuilder::new(n, n);
        for t in self.model.stiffness.as_ref().triplet_iter() {
            b.add(t.row, ns + t.col, *t.val);
            b.add(ns + t.row, t.col, *t.val);
        }
        for t in self.model.coupling.as_ref().triplet_iter() {
            b.add(ns + t.row, 2 * ns + t.col, -*t.val);
        }
        for t in self.model.coupling_t().as_ref().triplet_iter() {
            b.add(2 * ns + t.row, ns + t.col, -*t.val);
        }
        for t in self.model.conductivity.as_ref().triplet_iter() {
            b.add(2 * ns + t.row, 2 * ns + t.col, -*t.val);
        }
        b.build()
    }

    pub fn a_dense(&self) -> Mat<f64> {
        sparse::to_dense(&self.a_sparse())
    }

    pub fn b_dense(&self) -> Mat<f64> {
        sparse::to_dense(&self.b_sparse())
    }
}

/// Generalized eigenvalues of the state-space pencil.
///
/// Each `mu` is a time exponent: `d(t) = chi exp(mu t)` solves the free
/// system, so `(B + mu A) chi = 0`. Decaying thermal modes have `mu < 0`
/// and undamped structural modes `mu = +-i omega`.
#[derive(Debug, Clone)]
pub struct ComplexEigenSet {
    pub values: Vec<c64>,
    /// Unit 2-norm eigenvectors as columns, in the order of `values`.
    pub vectors: Option<Mat<c64>>,
}

impl ComplexEigenSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FullEigenOptions {
    pub want_vectors: bool,
    pub dense_limit: usize,
    /// Replace each eigenvalue by the symmetric-pencil Rayleigh quotient
    /// `-chi^T B chi / chi^T A chi` of its eigenvector.
    pub refine: bool,
}

impl Default for FullEigenOptions {
    fn default() -> Self {
        Self {
            want_vectors: false,
            dense_limit: DEFAULT_DENSE_LIMIT,
            refine: true,
        }
    }
}

/// All `2 N_s + N_T` eigenvalues of the full coupled pencil, sorted by
/// modulus and then by imaginary part.
pub fn full_eigensolution(ssm: &SymStateSpaceModel, want_vectors: bool) -> Result<ComplexEigenSet> {
    full_eigensolution_with(
        ssm,
        &FullEigenOptions {
            want_vectors,
            ..Default::default()
        },
    )
}

pub fn full_eigensolution_with(
    ssm: &SymStateSpaceModel,
    opts: &FullEigenOptions,
) -> Result<ComplexEigenSet> {
    let n = ssm.dim();
    if n > opts.dense_limit {
        return Err(Error::Capacity {
            dim: n,
            limit: opts.dense_limit,
        });
    }
    COUPLED_SOLVES.with(|c| c.set(c.get() + 1));
    let a = ssm.a_dense();
    let b = ssm.b_dense();
    let need_vectors = opts.want_vectors || opts.refine;
    let (mut values, vectors) = block_cholesky(ssm, &b)?;
    let mut vectors = if need_vectors { Some(vectors) } else { None };
    if let Some(v) = vectors.as_mut() {
        normalize_columns(v);
    }
    if opts.refine {
        let v = vectors.as_ref().expect("vectors computed for refinement");
        refine_values(&a, &b, v, &mut values);
        enforce_conjugate_pairs(&mut values);
    }
    let (values, vectors) = sort_pairs(values, vectors, opts.want_vectors);
    check_conjugate_closure(&values)?;
    Ok(ComplexEigenSet { values, vectors })
}

/// Same spectrum convention for an arbitrary dense pencil, e.g. a reduced
/// model. A diagonal `A` is scaled out symmetrically; otherwise `-A^-1 B`
/// goes through a pivoted LU.
pub fn pencil_eigenvalues(a: &Mat<f64>, b: &Mat<f64>) -> Result<Vec<c64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.nrows(),
        });
    }
    let diagonal = (0..n).all(|j| (0..n).all(|i| i == j || a[(i, j)] == 0.0));
    let h = if diagonal {
        if (0..n).any(|i| a[(i, i)] == 0.0) {
            return Err(Error::InvalidModel("A is singular".into()));
        }
        let sc: Vec<f64> = (0..n).map(|i| a[(i, i)].abs().sqrt().recip()).collect();
        let sg: Vec<f64> = (0..n).map(|i| a[(i, i)].signum()).collect();
        Mat::from_fn(n, n, |i, j| -sg[i] * sc[i] * b[(i, j)] * sc[j])
    } else {
        let lu = a.partial_piv_lu();
        let mut h = lu.solve(b);
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] = -h[(i, j)];
            }
        }
        if !(0..n).all(|j| (0..n).all(|i| h[(i, j)].is_finite())) {
            return Err(Error::InvalidModel("A is singular".into()));
        }
        h
    };
    let values = h
        .eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let (values, _) = sort_pairs(values, None, false);
    Ok(values)
}

fn block_cholesky(ssm: &SymStateSpaceModel, b: &Mat<f64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let (ns, nt) = (ssm.n_structural(), ssm.n_thermal());
    let n = 2 * ns + nt;
    let m = &ssm.model;
    let blocks = [
        (&m.stiffness, 0, "stiffness"),
        (&m.mass, ns, "mass"),
        (&m.capacity, 2 * ns, "capacity"),
    ];
    let mut l = Mat::<f64>::zeros(n, n);
    for (blk, off, name) in blocks {
        let dense = sparse::to_dense(blk);
        let llt = dense
            .llt(Side::Lower)
            .map_err(|e| Error::Metric(format!("{name}: {e:?}")))?;
        let lf = llt.L();
        for j in 0..lf.ncols() {
            for i in j..lf.nrows() {
                l[(off + i, off + j)] = lf[(i, j)];
            }
        }
    }
    let par = faer::get_global_parallelism();
    let mut x = b.to_owned();
    solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), par);
    let mut h = x.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), h.as_mut(), par);
    // h = L^-1 B L^-T; apply -J = diag(I, -I, I) on the left.
    for j in 0..n {
        for i in ns..2 * ns {
            h[(i, j)] = -h[(i, j)];
        }
    }
    let evd = h.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<c64> = (0..n).map(|i| s[i]).collect();

    // chi = L^-T y, real and imaginary parts separately
    let u = evd.U();
    let mut re = Mat::from_fn(n, n, |i, j| u[(i, j)].re);
    let mut im = Mat::from_fn(n, n, |i, j| u[(i, j)].im);
    solve_upper_triangular_in_place(l.transpose(), re.as_mut(), par);
    solve_upper_triangular_in_place(l.transpose(), im.as_mut(), par);
    let vectors = Mat::from_fn(n, n, |i, j| c64::new(re[(i, j)], im[(i, j)]));
    Ok((values, vectors))
}

fn normalize_columns(v: &mut Mat<c64>) {
    for j in 0..v.ncols() {
        let norm = (0..v.nrows()).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..v.nrows() {
                v[(i, j)] /= norm;
            }
        }
    }
}

/// For a symmetric pencil the left eigenvector is the (unconjugated) right
/// one, so `-chi^T B chi / chi^T A chi` is stationary at the eigenvector.
fn refine_values(a: &Mat<f64>, b: &Mat<f64>, v: &Mat<c64>, values: &mut [c64]) {
    let n = a.nrows();
    let re = Mat::from_fn(n, n, |i, j| v[(i, j)].re);
    let im = Mat::from_fn(n, n, |i, j| v[(i, j)].im);
    let (are, aim) = (a * &re, a * &im);
    let (bre, bim) = (b * &re, b * &im);
    for (j, mu) in values.iter_mut().enumerate() {
        let mut num = c64::new(0.0, 0.0);
        let mut den = c64::new(0.0, 0.0);
        for i in 0..n {
            let x = c64::new(re[(i, j)], im[(i, j)]);
            num += x * c64::new(bre[(i, j)], bim[(i, j)]);
            den += x * c64::new(are[(i, j)], aim[(i, j)]);
        }
        if den.norm() > 0.0 {
            let q = -num / den;
            if q.re.is_finite() && q.im.is_finite() {
                // real eigenvalues stay exactly real
                *mu = if mu.im == 0.0 { c64::new(q.re, 0.0) } else { q };
            }
        }
    }
}

fn enforce_conjugate_pairs(values: &mut [c64]) {
    // Eigensolvers emit conjugate pairs adjacently; keep them exact.
    let mut i = 0;
    while i + 1 < values.len() {
        let (a, b) = (values[i], values[i + 1]);
        if a.im != 0.0 && b.im != 0.0 && a.im.signum() != b.im.signum() {
            let re = 0.5 * (a.re + b.re);
            let im = 0.5 * (a.im.abs() + b.im.abs());
            values[i] = c64::new(re, im * a.im.signum());
            values[i + 1] = c64::new(re, im * b.im.signum());
            i += 2;
        } else {
            i += 1;
        }
    }
}

fn sort_pairs(
    values: Vec<c64>,
    vectors: Option<Mat<c64>>,
    keep_vectors: bool,
) -> (Vec<c64>, Option<Mat<c64>>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (values[i], values[j]);
        a.norm()
            .total_cmp(&b.norm())
            .then(a.im.total_cmp(&b.im))
            .then(a.re.total_cmp(&b.re))
    });
    let sorted: Vec<c64> = order.iter().map(|&i| values[i]).collect();
    let vecs = match (vectors, keep_vectors) {
        (Some(v), true) => Some(Mat::from_fn(v.nrows(), order.len(), |i, j| v[(i, order[j])])),
        _ => None,
    };
    (sorted, vecs)
}

fn check_conjugate_closure(values: &[c64]) -> Result<()> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let tol = 1e-8 * scale.max(f64::MIN_POSITIVE);
    let pos = values.iter().filter(|v| v.im > tol).count();
    let neg = values.iter().filter(|v| v.im < -tol).count();
    if pos != neg {
        return Err(Error::Eigen(format!(
            "spectrum is not closed under conjugation ({pos} vs {neg})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn scalar(v: f64) -> SpMat {
        let mut b = TripletBuilder::new(1, 1);
        b.add(0, 0, v);
        b.build()
    }

    fn toy(m: f64, k: f64, d: f64, kc: f64, kt: f64) -> SymStateSpaceModel {
        let model =
            CoupledSecondOrderModel::from_blocks(scalar(m), scalar(k), scalar(d), scalar(kt), scalar(kc))
                .unwrap();
        to_state_space(&model)
    }

    #[test]
    fn toy_block_pattern() {
        let s = toy(2.0, 3.0, 5.0, 7.0, 11.0);
        let a = s.a_dense();
        let b = s.b_dense();
        let ea = [[-3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, -5.0]];
        let eb = [[0.0, 3.0, 0.0], [3.0, 0.0, -7.0], [0.0, -7.0, -11.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], ea[i][j]);
                assert_eq!(b[(i, j)], eb[i][j]);
            }
        }
    }

    #[test]
    fn toy_decoupled_spectrum() {
        let (m, k, d, kt) = (2.0, 8.0, 0.5, 3.0);
        let s = toy(m, k, d, 0.0, kt);
        for refine in [false, true] {
            let opts = FullEigenOptions {
                refine,
                ..Default::default()
            };
            let e = full_eigensolution_with(&s, &opts).unwrap();
            let w = (k / m).sqrt();
            let expect = [c64::new(0.0, -w), c64::new(0.0, w), c64::new(-kt / d, 0.0)];
            let mut got = e.values.clone();
            got.sort_by(|a, b| a.im.total_cmp(&b.im));
            let mut exp = expect.to_vec();
            exp.sort_by(|a, b| a.im.total_cmp(&b.im));
            for (g, x) in got.iter().zip(&exp) {
                assert!((g - x).norm() < 1e-12 * x.norm(), "refine={refine}: {g} vs {x}");
            }
        }
    }

    #[test]
    fn load_layout() {
        let s = toy(1.0, 1.0, 1.0, 0.0, 1.0);
        let f = s.load(&[2.0], &[3.0]).unwrap();
        assert_eq!(f, vec![0.0, 2.0, -3.0]);
        assert!(s.load(&[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn capacity_limit() {
        let s = toy(1.0, 1.0, 1.0, 0.0, 1.0);
        let opts = FullEigenOptions {
            dense_limit: 2,
            ..Default::default()
        };
        assert!(matches!(
            full_eigensolution_with(&s, &opts),
            Err(Error::Capacity { dim: 3, limit: 2 })
        ));
    }

    #[test]
    fn counter_tracks_solves() {
        let s = toy(1.0, 1.0, 1.0, 0.1, 1.0);
        let before = coupled_solve_count();
        full_eigensolution(&s, false).unwrap();
        assert_eq!(coupled_solve_count(), before + 1);
    }

    fn small_plate(alpha: f64) -> CoupledSecondOrderModel {
        use crate::assembly::{assemble_system, MaterialProps};
        use crate::mesh::{build_dof_map, generate_plate_mesh, BoundaryConditions, PlateGeometry};
        let geom = PlateGeometry::new(0.042, 0.140, 0.001).unwrap();
        let mesh = generate_plate_mesh(&geom, 6, 2).unwrap();
        let bc = BoundaryConditions {
            fixed_displacement: vec!["left_edge".into()],
            fixed_temperature: vec!["left_edge".into()],
        };
        let dofs = build_dof_map(&mesh, &bc).unwrap();
        let mut mat = MaterialProps::silicon();
        mat.thermal_expansion = alpha;
        assemble_system(&mesh, &mat, 0.001, &dofs).unwrap()
    }

    #[test]
    fn decoupled_plate_matches_single_field_spectra() {
        use crate::eigensolve::{sym_gen_eig, Metric};
        let m = small_plate(0.0);
        let (ns, nt) = (m.n_structural(), m.n_thermal());
        let s = sym_gen_eig(
            sparse::to_dense(&m.stiffness).as_ref(),
            sparse::to_dense(&m.mass).as_ref(),
            ns,
            Metric::Mass,
        )
        .unwrap();
        let t = sym_gen_eig(
            sparse::to_dense(&m.conductivity).as_ref(),
            sparse::to_dense(&m.capacity).as_ref(),
            nt,
            Metric::Capacity,
        )
        .unwrap();
        let e = full_eigensolution(&to_state_space(&m), false).unwrap();
        let mut real: Vec<f64> = e.values.iter().filter(|v| v.im == 0.0).map(|v| -v.re).collect();
        real.sort_by(f64::total_cmp);
        let mut omega: Vec<f64> = e.values.iter().filter(|v| v.im > 0.0).map(|v| v.im).collect();
        omega.sort_by(f64::total_cmp);
        assert_eq!((real.len(), omega.len()), (nt, ns));
        for (g, x) in real.iter().zip(&t.eigenvalues) {
            assert!((g - x).abs() <= 1e-9 * x, "{g} vs {x}");
        }
        for (g, x) in omega.iter().zip(&s.eigenvalues) {
            let w = x.sqrt();
            assert!((g - w).abs() <= 1e-9 * w, "{g} vs {w}");
        }
    }

    #[test]
    fn eigenpair_residuals() {
        let m = small_plate(2.54e-6);
        let ssm = to_state_space(&m);
        let e = full_eigensolution(&ssm, true).unwrap();
        let a = ssm.a_dense();
        let b = ssm.b_dense();
        let norm = |x: &Mat<f64>| {
            let mut s = 0.0;
            for j in 0..x.ncols() {
                for i in 0..x.nrows() {
                    s += x[(i, j)] * x[(i, j)];
                }
            }
            f64::sqrt(s)
        };
        let (na, nb) = (norm(&a), norm(&b));
        let v = e.vectors.as_ref().unwrap();
        let n = ssm.dim();
        for (k, mu) in e.values.iter().enumerate() {
            let re = Mat::from_fn(n, 1, |i, _| v[(i, k)].re);
            let im = Mat::from_fn(n, 1, |i, _| v[(i, k)].im);
            let (br, bi, ar, ai) = (&b * &re, &b * &im, &a * &re, &a * &im);
            let mut r = 0.0;
            for i in 0..n {
                let bx = c64::new(br[(i, 0)], bi[(i, 0)]);
                let ax = c64::new(ar[(i, 0)], ai[(i, 0)]);
                r += (bx + mu * ax).norm_sqr();
            }
            assert!(r.sqrt() <= 1e-8 * (nb + mu.norm() * na), "pair {k}: {}", r.sqrt());
        }
    }

    #[test]
    fn reduced_pencil_paths_agree() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { [-4.0, 1.0, -2.0][i] } else { 0.0 });
        let b = Mat::from_fn(3, 3, |i, j| [[0.0, 4.0, 0.0], [4.0, 0.0, -0.3], [0.0, -0.3, -1.0]][i][j]);
        let diag = pencil_eigenvalues(&a, &b).unwrap();
        // a congruence keeps the spectrum but makes A dense
        let q = Mat::from_fn(3, 3, |i, j| [[1.0, 0.2, 0.0], [0.0, 1.0, 0.1], [0.3, 0.0, 1.0]][i][j]);
        let aq = q.transpose() * &a * &q;
        let bq = q.transpose() * &b * &q;
        let dense = pencil_eigenvalues(&aq, &bq).unwrap();
        for (x, y) in diag.iter().zip(&dense) {
            assert!((x - y).norm() < 1e-12 * x.norm(), "{x} vs {y}");
        }
        let full = full_eigensolution(&toy(1.0, 4.0, 2.0, 0.3, 1.0), false).unwrap();
        for (x, y) in diag.iter().zip(&full.values) {
            assert!((x - y).norm() < 1e-12 * x.norm(), "{x} vs {y}");
        }
    }
}
