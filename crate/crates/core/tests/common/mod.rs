#![allow(dead_code)]

use std::path::PathBuf;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tmor::assembly::{assemble_system, CoupledSecondOrderModel, MaterialProps};
use tmor::mesh::{build_dof_map, generate_plate_mesh, BoundaryConditions, DofMap, Mesh, PlateGeometry};
use tmor::sparse::{SpMat, TripletBuilder};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub struct Plate {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub model: CoupledSecondOrderModel,
}

/// Silicon plate clamped and held at `T0` on the left edge.
pub fn plate_with(h: f64, l: f64, t: f64, nx: usize, ny: usize, mat: &MaterialProps) -> Plate {
    let geom = PlateGeometry::new(h, l, t).unwrap();
    let mesh = generate_plate_mesh(&geom, nx, ny).unwrap();
    let bc = BoundaryConditions {
        fixed_displacement: vec!["left_edge".into()],
        fixed_temperature: vec!["left_edge".into()],
    };
    let dofs = build_dof_map(&mesh, &bc).unwrap();
    let mut model = assemble_system(&mesh, mat, t, &dofs).unwrap();
    model.dofs = Some(dofs.clone());
    Plate { mesh, dofs, model }
}

pub fn plate(h: f64, l: f64, t: f64, nx: usize, ny: usize) -> Plate {
    plate_with(h, l, t, nx, ny, &MaterialProps::silicon())
}

/// 140 mm x 42 mm x 1 mm on a 20 x 6 grid: `N_s = 280`, `N_T = 140`.
pub fn macro_plate() -> Plate {
    plate(0.042, 0.14, 0.001, 20, 6)
}

/// 20 um x 4 um x 0.1 um on the same grid.
pub fn micro_plate() -> Plate {
    plate(4e-6, 20e-6, 1e-7, 20, 6)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `R^T R + shift I` with `R` uniform in `[-1, 1]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Mat<f64> {
    let r = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut a = r.transpose() * &r;
    for i in 0..n {
        a[(i, i)] += shift;
    }
    symmetrized(&a)
}

pub fn symmetrized(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn to_sparse(a: &Mat<f64>) -> SpMat {
    let mut t = TripletBuilder::new(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != 0.0 {
                t.add(i, j, a[(i, j)]);
            }
        }
    }
    t.build()
}

/// Random coupled model with unit-scale blocks and coupling of size `alpha`.
pub fn random_model(seed: u64, ns: usize, nt: usize, alpha: f64) -> CoupledSecondOrderModel {
    let mut r = rng(seed);
    let m = random_spd(&mut r, ns, 1.0);
    let k = random_spd(&mut r, ns, 0.5);
    let d = random_spd(&mut r, nt, 1.0);
    let kt = random_spd(&mut r, nt, 0.5);
    let c = Mat::from_fn(ns, nt, |_, _| alpha * r.random_range(-1.0..1.0));
    CoupledSecondOrderModel::from_blocks(
        to_sparse(&m),
        to_sparse(&k),
        to_sparse(&d),
        to_sparse(&kt),
        to_sparse(&c),
    )
    .unwrap()
}

pub fn dense(a: &SpMat) -> Mat<f64> {
    tmor::sparse::to_dense(a)
}

pub fn frobenius(a: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

pub fn rel_frobenius(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    frobenius(&(a - b)) / frobenius(b)
}

pub fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

pub fn max_dev_from_identity(a: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let e = if i == j { 1.0 } else { 0.0 };
            m = m.max((a[(i, j)] - e).abs());
        }
    }
    m
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues
/// ascending and the matching orthonormal eigenvectors as columns.
pub fn jacobi_eigen(a: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let n = a.nrows();
    let mut a = symmetrized(a);
    let mut v = Mat::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                } else {
                    diag += a[(i, i)] * a[(i, i)];
                }
            }
        }
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Lower Cholesky factor by the textbook column recurrence.
pub fn cholesky(a: &Mat<f64>) -> Mat<f64> {
    let n = a.nrows();
    let mut l = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        assert!(d > 0.0, "matrix is not positive definite");
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    l
}

/// Inverse of a lower triangular matrix by forward substitution.
pub fn lower_inverse(l: &Mat<f64>) -> Mat<f64> {
    let n = l.nrows();
    let mut x = Mat::<f64>::zeros(n, n);
    for c in 0..n {
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// All eigenpairs of `K x = lambda M x`, vectors `M`-orthonormal, by
/// Cholesky of `M` and Jacobi on `L^-1 K L^-T`.
pub fn gen_eigen_oracle(k: &Mat<f64>, m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let l = cholesky(m);
    let li = lower_inverse(&l);
    let c = &li * k * li.transpose();
    let (values, y) = jacobi_eigen(&c);
    let x = li.transpose() * &y;
    (values, x)
}

/// `K_Ts (sum over discarded pairs of phi phi^T / lambda) K_sT` from an
/// independent full eigendecomposition.
pub fn psi_from_discarded(model: &tmor::assembly::CoupledSecondOrderModel, n_s: usize) -> Mat<f64> {
    let k = dense(&model.stiffness);
    let m = dense(&model.mass);
    let c = dense(&model.coupling);
    let (values, vectors) = gen_eigen_oracle(&k, &m);
    let ns = k.nrows();
    let mut flex = Mat::<f64>::zeros(ns, ns);
    for e in n_s..ns {
        let phi = vectors.col(e);
        for j in 0..ns {
            for i in 0..ns {
                flex[(i, j)] += phi[i] * phi[j] / values[e];
            }
        }
    }
    c.transpose() * flex * &c
}
