use crate::error::{Error, Result};
use crate::mesh::{gauss_points_2x2, jacobian, shape};

use super::MaterialProps;

/// Element blocks of a bilinear thermoelastic quad. Structural rows use the
/// interleaved order `[u0x, u0y, u1x, u1y, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub mass: [[f64; 8]; 8],
    pub stiffness: [[f64; 8]; 8],
    /// Heat capacity (unscaled by the reference temperature).
    pub capacity: [[f64; 4]; 4],
    pub conductivity: [[f64; 4]; 4],
    /// Thermal stress coupling `int B^T beta m N dV`.
    pub coupling: [[f64; 4]; 8],
}

/// Integrates all five element blocks with the 2x2 Gauss rule.
///
/// `index` only labels the error when the element is degenerate.
pub fn element_matrices(
    xy: &[[f64; 2]; 4],
    mat: &MaterialProps,
    thickness: f64,
    index: usize,
) -> Result<ElementMatrices> {
    let d = mat.elasticity_matrix();
    let beta = mat.beta_plane();
    let rho = mat.density;
    let ce = mat.heat_capacity();
    let kappa = mat.conductivity;

    let mut out = ElementMatrices {
        mass: [[0.0; 8]; 8],
        stiffness: [[0.0; 8]; 8],
        capacity: [[0.0; 4]; 4],
        conductivity: [[0.0; 4]; 4],
        coupling: [[0.0; 4]; 8],
    };

    for (xi, eta) in gauss_points_2x2() {
        let (n, dn) = shape(xi, eta);
        let (j, det) = jacobian(xy, xi, eta);
        if !(det > 0.0) {
            return Err(Error::Assembly {
                element: index,
                reason: format!("non-positive Jacobian {det:e}"),
            });
        }
        let w = det * thickness;
        let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        let mut dx = [0.0; 4];
        let mut dy = [0.0; 4];
        for a in 0..4 {
            dx[a] = inv[0][0] * dn[0][a] + inv[0][1] * dn[1][a];
            dy[a] = inv[1][0] * dn[0][a] + inv[1][1] * dn[1][a];
        }

        let mut b = [[0.0; 8]; 3];
        for a in 0..4 {
            b[0][2 * a] = dx[a];
            b[1][2 * a + 1] = dy[a];
            b[2][2 * a] = dy[a];
            b[2][2 * a + 1] = dx[a];
        }
        let mut db = [[0.0; 8]; 3];
        for r in 0..3 {
            for c in 0..8 {
                db[r][c] = d[r][0] * b[0][c] + d[r][1] * b[1][c] + d[r][2] * b[2][c];
            }
        }

        for p in 0..8 {
            for q in p..8 {
                let k = b[0][p] * db[0][q] + b[1][p] * db[1][q] + b[2][p] * db[2][q];
                out.stiffness[p][q] += w * k;
            }
        }
        for a in 0..4 {
            for c in a..4 {
                let nn = n[a] * n[c];
                out.mass[2 * a][2 * c] += w * rho * nn;
                out.capacity[a][c] += w * ce * nn;
                out.conductivity[a][c] += w * kappa * (dx[a] * dx[c] + dy[a] * dy[c]);
            }
        }
        // m^T B picks the volumetric strain.
        for p in 0..8 {
            let vol = b[0][p] + b[1][p];
            for c in 0..4 {
                out.coupling[p][c] += w * beta * vol * n[c];
            }
        }
    }

    // Mirror the upper triangles so each block is exactly symmetric.
    for p in 0..8 {
        for q in 0..p {
            out.stiffness[p][q] = out.stiffness[q][p];
        }
    }
    for a in 0..4 {
        for c in 0..a {
            out.capacity[a][c] = out.capacity[c][a];
            out.conductivity[a][c] = out.conductivity[c][a];
            out.mass[2 * a][2 * c] = out.mass[2 * c][2 * a];
        }
    }
    for a in 0..4 {
        for c in 0..4 {
            out.mass[2 * a + 1][2 * c + 1] = out.mass[2 * a][2 * c];
        }
    }
    Ok(out)
}
