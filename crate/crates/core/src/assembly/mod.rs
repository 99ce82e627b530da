//! Global thermoelastic matrices with Dirichlet conditions eliminated.

mod element;
mod material;

pub use element::{element_matrices, ElementMatrices};
pub use material::{MaterialProps, PlaneModel, CELSIUS_OFFSET};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::mesh::{DofMap, Mesh};
use crate::sparse::{self, SpMat, TripletBuilder};

/// The five blocks of the coupled second-order system, thermal blocks
/// already divided by the reference temperature.
#[derive(Debug, Clone)]
pub struct CoupledSecondOrderModel {
    /// `M_ss`
    pub mass: SpMat,
    /// `K_ss`
    pub stiffness: SpMat,
    /// `D_TT / T0`
    pub capacity: SpMat,
    /// `K_TT / T0`
    pub conductivity: SpMat,
    /// `K_sT`, structural rows by thermal columns.
    pub coupling: SpMat,
    coupling_t: SpMat,
    /// Equilibrium temperature `T0` (K); divides thermal loads.
    pub reference_temperature: f64,
    pub dofs: Option<DofMap>,
    pub material: Option<MaterialProps>,
}

impl CoupledSecondOrderModel {
    /// Builds a model from explicit blocks. Square blocks must be
    /// symmetric; `coupling` is `N_s x N_T`.
    pub fn from_blocks(
        mass: SpMat,
        stiffness: SpMat,
        capacity: SpMat,
        conductivity: SpMat,
        coupling: SpMat,
    ) -> Result<Self> {
        let ns = mass.nrows();
        let nt = capacity.nrows();
        if ns == 0 || nt == 0 {
            return Err(Error::InvalidModel(format!(
                "both fields need free DOFs (N_s = {ns}, N_T = {nt})"
            )));
        }
        for (name, m, n) in [
            ("mass", &mass, ns),
            ("stiffness", &stiffness, ns),
            ("capacity", &capacity, nt),
            ("conductivity", &conductivity, nt),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidModel(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let asym = sparse::max_asymmetry(m);
            if asym > 1e-12 * sparse::max_abs(m) {
                return Err(Error::InvalidModel(format!("{name} is not symmetric ({asym:e})")));
            }
        }
        if coupling.nrows() != ns || coupling.ncols() != nt {
            return Err(Error::InvalidModel(format!(
                "coupling is {}x{}, expected {ns}x{nt}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        let coupling_t = sparse::transpose(&coupling);
        Ok(Self {
            mass,
            stiffness,
            capacity,
            conductivity,
            coupling,
            coupling_t,
            reference_temperature: 1.0,
            dofs: None,
            material: None,
        })
    }

    pub fn n_structural(&self) -> usize {
        self.mass.nrows()
    }

    pub fn n_thermal(&self) -> usize {
        self.capacity.nrows()
    }

    /// `K_Ts = K_sT^T`, stored as an exact transpose.
    pub fn coupling_t(&self) -> &SpMat {
        &self.coupling_t
    }

    /// Sparse Cholesky factor of `K_ss`.
    ///
    /// Rounding can let a singular stiffness through the factorization with
    /// tiny pivots, so the factor is also probed with one solve: a condition
    /// estimate above `1e13` is treated as an unremoved rigid-body mode.
    pub fn factor_stiffness(&self) -> Result<StiffnessFactor> {
        let llt = self
            .stiffness
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::RigidBodyMode(format!("{e:?}")))?;
        let n = self.n_structural();
        let b = Mat::from_fn(n, 1, |i, _| 1.0 + ((i * 7919) % 17) as f64 / 17.0);
        let mut x = b.clone();
        llt.solve_in_place(x.as_mut());
        let xmax = (0..n).fold(0.0f64, |m, i| m.max(x[(i, 0)].abs()));
        let cond = sparse::max_abs(&self.stiffness) * xmax / 2.0;
        if !cond.is_finite() || cond > 1e13 {
            return Err(Error::RigidBodyMode(format!("condition estimate {cond:e}")));
        }
        Ok(StiffnessFactor { llt })
    }
}

/// Reusable `K_ss^{-1}` application.
pub struct StiffnessFactor {
    llt: Llt<usize, f64>,
}

impl StiffnessFactor {
    pub fn solve_in_place(&self, rhs: &mut Mat<f64>) {
        self.llt.solve_in_place(rhs.as_mut());
    }
}

/// Assembles the global blocks and verifies that `K_ss` is nonsingular.
pub fn assemble_system(
    mesh: &Mesh,
    mat: &MaterialProps,
    thickness: f64,
    dofs: &DofMap,
) -> Result<CoupledSecondOrderModel> {
    let model = assemble_blocks(mesh, mat, thickness, dofs)?;
    model.factor_stiffness()?;
    Ok(model)
}

/// Scatter-adds element blocks in element order over the free DOFs without
/// requiring the structure to be restrained.
pub fn assemble_blocks(
    mesh: &Mesh,
    mat: &MaterialProps,
    thickness: f64,
    dofs: &DofMap,
) -> Result<CoupledSecondOrderModel> {
    mat.validate()?;
    if !(thickness.is_finite() && thickness > 0.0) {
        return Err(Error::invalid(format!("thickness must be positive, got {thickness}")));
    }
    if dofs.n_nodes() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            found: dofs.n_nodes(),
        });
    }
    let ns = dofs.n_structural();
    let nt = dofs.n_thermal();
    if ns == 0 || nt == 0 {
        return Err(Error::InvalidModel(format!(
            "both fields need free DOFs (N_s = {ns}, N_T = {nt})"
        )));
    }
    let inv_t0 = 1.0 / mat.reference_temperature;

    let mut m = TripletBuilder::new(ns, ns);
    let mut k = TripletBuilder::new(ns, ns);
    let mut d = TripletBuilder::new(nt, nt);
    let mut kt = TripletBuilder::new(nt, nt);
    let mut c = TripletBuilder::new(ns, nt);

    for (e, conn) in mesh.elements.iter().enumerate() {
        let em = element_matrices(&mesh.element_coords(e), mat, thickness, e)?;
        let sd = dofs.element_structural(conn);
        let td = dofs.element_thermal(conn);
        for (p, gp) in sd.iter().enumerate() {
            let Some(gp) = *gp else { continue };
            for (q, gq) in sd.iter().enumerate() {
                if let Some(gq) = *gq {
                    m.add(gp, gq, em.mass[p][q]);
                    k.add(gp, gq, em.stiffness[p][q]);
                }
            }
            for (a, ga) in td.iter().enumerate() {
                if let Some(ga) = *ga {
                    c.add(gp, ga, em.coupling[p][a]);
                }
            }
        }
        for (a, ga) in td.iter().enumerate() {
            let Some(ga) = *ga else { continue };
            for (b, gb) in td.iter().enumerate() {
                if let Some(gb) = *gb {
                    d.add(ga, gb, em.capacity[a][b] * inv_t0);
                    kt.add(ga, gb, em.conductivity[a][b] * inv_t0);
                }
            }
        }
    }

    let mut model =
        CoupledSecondOrderModel::from_blocks(m.build(), k.build(), d.build(), kt.build(), c.build())?;
    model.reference_temperature = mat.reference_temperature;
    model.dofs = Some(dofs.clone());
    model.material = Some(*mat);
    Ok(model)
}
