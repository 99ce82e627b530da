use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::reduction::ReducedStateSpaceModel;
use crate::sparse::{self, EnvelopeCholesky, SpMat};
use crate::statespace::SymStateSpaceModel;

use super::excitation::LoadPattern;
use super::integrator::Rhs;

/// The full model `d' = A^-1 (f - B d)` written per block:
///
/// ```text
/// u'     = v
/// M v'   = f_s - K u + K_sT theta
/// D theta' = -f_T - K_Ts v - K_TT theta
/// ```
/// with one envelope Cholesky factor each of `M` and `D`.
pub struct FullRhs<'a> {
    ssm: &'a SymStateSpaceModel,
    load: &'a LoadPattern,
    mass: EnvelopeCholesky,
    capacity: EnvelopeCholesky,
    f: Vec<f64>,
}

impl<'a> FullRhs<'a> {
    pub fn new(ssm: &'a SymStateSpaceModel, load: &'a LoadPattern) -> Result<Self> {
        if load.dim != ssm.dim() {
            return Err(Error::DimensionMismatch {
                expected: ssm.dim(),
                found: load.dim,
            });
        }
        let m = ssm.model();
        let factor = |a: &SpMat, name: &str| {
            EnvelopeCholesky::new(a)
                .ok_or_else(|| Error::InvalidModel(format!("{name} block of A is not definite")))
        };
        Ok(Self {
            ssm,
            load,
            mass: factor(&m.mass, "mass")?,
            capacity: factor(&m.capacity, "capacity")?,
            f: vec![0.0; ssm.dim()],
        })
    }
}

impl Rhs for FullRhs<'_> {
    fn dim(&self) -> usize {
        self.ssm.dim()
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let m = self.ssm.model();
        let ns = self.ssm.n_structural();
        let (u, rest) = y.split_at(ns);
        let (v, theta) = rest.split_at(ns);
        self.load.eval_into(t, &mut self.f);

        dy[..ns].copy_from_slice(v);

        let (_, rest) = dy.split_at_mut(ns);
        let (w, wt) = rest.split_at_mut(ns);
        w.copy_from_slice(&self.f[ns..2 * ns]);
        sparse::mul_add(&m.stiffness, u, -1.0, w);
        sparse::mul_add(&m.coupling, theta, 1.0, w);
        self.mass.solve_in_place(w);

        for (wi, fi) in wt.iter_mut().zip(&self.f[2 * ns..]) {
            *wi = -fi;
        }
        sparse::mul_add(m.coupling_t(), v, -1.0, wt);
        sparse::mul_add(&m.conductivity, theta, -1.0, wt);
        self.capacity.solve_in_place(wt);
    }
}

/// Dense `d' = P f(t) - G d` with `G = A^-1 B` and `P = A^-1 T^T` formed once.
/// Only the columns of `P` hit by nonzero load entries are touched per call.
pub struct DenseRhs<'a> {
    g: Mat<f64>,
    p: Mat<f64>,
    load: &'a LoadPattern,
    f: Vec<f64>,
}

impl<'a> DenseRhs<'a> {
    /// `A d' + B d = f(t)` with `f` given directly in the pencil coordinates.
    pub fn new(a: &Mat<f64>, b: &Mat<f64>, load: &'a LoadPattern) -> Result<Self> {
        let n = a.nrows();
        if load.dim != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: load.dim,
            });
        }
        Self::with_projection(a, b, &Mat::<f64>::identity(n, n), load)
    }

    /// A reduced model driven by the full load `f(t)` through `f_r = T^T f`.
    pub fn reduced(r: &ReducedStateSpaceModel, load: &'a LoadPattern) -> Result<Self> {
        if load.dim != r.full_dim() {
            return Err(Error::DimensionMismatch {
                expected: r.full_dim(),
                found: load.dim,
            });
        }
        Self::with_projection(&r.a, &r.b, &r.t.transpose().to_owned(), load)
    }

    fn with_projection(
        a: &Mat<f64>,
        b: &Mat<f64>,
        tt: &Mat<f64>,
        load: &'a LoadPattern,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n || tt.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.nrows(),
            });
        }
        let (g, p) = if is_diagonal(a) {
            let mut g = b.clone();
            let mut p = tt.clone();
            for i in 0..n {
                let d = a[(i, i)];
                if d == 0.0 || !d.is_finite() {
                    return Err(Error::InvalidModel(format!("A has a zero pivot at {i}")));
                }
                for j in 0..n {
                    g[(i, j)] /= d;
                }
                for j in 0..p.ncols() {
                    p[(i, j)] /= d;
                }
            }
            (g, p)
        } else {
            let lu = a.partial_piv_lu();
            let g = lu.solve(b);
            let p = lu.solve(tt);
            if g.col_iter().any(|c| c.iter().any(|x| !x.is_finite())) {
                return Err(Error::InvalidModel("A is singular".into()));
            }
            (g, p)
        };
        Ok(Self {
            g,
            p,
            load,
            f: vec![0.0; load.dim],
        })
    }
}

fn is_diagonal(a: &Mat<f64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| i == j || a[(i, j)] == 0.0))
}

impl Rhs for DenseRhs<'_> {
    fn dim(&self) -> usize {
        self.g.nrows()
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.g.nrows();
        dy.fill(0.0);
        for (j, &yj) in y.iter().enumerate() {
            if yj == 0.0 {
                continue;
            }
            let col = self.g.col(j);
            for i in 0..n {
                dy[i] -= col[i] * yj;
            }
        }
        self.load.eval_into(t, &mut self.f);
        for e in &self.load.entries {
            let fk = self.f[e.slot];
            if fk == 0.0 {
                continue;
            }
            let col = self.p.col(e.slot);
            for i in 0..n {
                dy[i] += col[i] * fk;
            }
            // a slot listed twice must only be applied once
            self.f[e.slot] = 0.0;
        }
    }
}
