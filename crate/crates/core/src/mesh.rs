//! Structured quadrilateral meshes for rectangular plates and the mapping
//! from boundary conditions to free degrees of freedom.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss abscissa for the 2-point rule on [-1, 1].
pub(crate) const GAUSS_2: f64 = 0.577_350_269_189_625_8;

/// Rectangular plate occupying `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateGeometry {
    pub height: f64,
    pub width: f64,
    pub thickness: f64,
}

impl PlateGeometry {
    pub fn new(height: f64, width: f64, thickness: f64) -> Result<Self> {
        let geom = Self {
            height,
            width,
            thickness,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("height", self.height),
            ("width", self.width),
            ("thickness", self.thickness),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("plate {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise 4-node connectivity.
    pub elements: Vec<[usize; 4]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("unknown node set '{name}'")))
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        self.elements[e].map(|n| self.nodes[n])
    }

    /// Checks connectivity and that the bilinear map is orientation
    /// preserving at every 2x2 Gauss point.
    pub fn check(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, conn) in self.elements.iter().enumerate() {
            let distinct: BTreeSet<_> = conn.iter().collect();
            if distinct.len() != 4 || conn.iter().any(|&i| i >= n) {
                return Err(Error::Assembly {
                    element: e,
                    reason: format!("invalid connectivity {conn:?}"),
                });
            }
            let xy = self.element_coords(e);
            for (xi, eta) in gauss_points_2x2() {
                let det = jacobian(&xy, xi, eta).1;
                if !(det > 0.0) {
                    return Err(Error::Assembly {
                        element: e,
                        reason: format!("non-positive Jacobian {det:e} at ({xi}, {eta})"),
                    });
                }
            }
        }
        for (name, set) in &self.node_sets {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::invalid(format!("node set '{name}' references node {bad}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn gauss_points_2x2() -> [(f64, f64); 4] {
    let g = GAUSS_2;
    [(-g, -g), (g, -g), (g, g), (-g, g)]
}

/// Bilinear shape functions and their natural derivatives at `(xi, eta)`.
pub(crate) fn shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 4]; 2]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dxi = [
        -0.25 * (1.0 - eta),
        0.25 * (1.0 - eta),
        0.25 * (1.0 + eta),
        -0.25 * (1.0 + eta),
    ];
    let deta = [
        -0.25 * (1.0 - xi),
        -0.25 * (1.0 + xi),
        0.25 * (1.0 + xi),
        0.25 * (1.0 - xi),
    ];
    (n, [dxi, deta])
}

/// Returns the Jacobian `[[dx/dxi, dy/dxi], [dx/deta, dy/deta]]` and its determinant.
pub(crate) fn jacobian(xy: &[[f64; 2]; 4], xi: f64, eta: f64) -> ([[f64; 2]; 2], f64) {
    let (_, dn) = shape(xi, eta);
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        for r in 0..2 {
            j[r][0] += dn[r][a] * xy[a][0];
            j[r][1] += dn[r][a] * xy[a][1];
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    (j, det)
}

/// Uniform `nx` by `ny` grid of bilinear quads over the plate.
///
/// Nodes are numbered row by row starting at the origin. Besides the four
/// edge sets, the corner nodes are exposed as `bottom_left`, `bottom_right`,
/// `top_right` and `top_left`, and `all` holds every node.
pub fn generate_plate_mesh(geom: &PlateGeometry, nx: usize, ny: usize) -> Result<Mesh> {
    geom.validate()?;
    if nx == 0 || ny == 0 {
        return Err(Error::invalid(format!(
            "element counts must be at least 1, got nx={nx}, ny={ny}"
        )));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let dx = geom.width / nx as f64;
    let dy = geom.height / ny as f64;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Pin the far edges to the exact extents.
            let x = if i == nx { geom.width } else { i as f64 * dx };
            let y = if j == ny { geom.height } else { j as f64 * dy };
            nodes.push([x, y]);
        }
    }

    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }

    let mut node_sets = BTreeMap::new();
    node_sets.insert("left_edge".into(), (0..=ny).map(|j| id(0, j)).collect());
    node_sets.insert("right_edge".into(), (0..=ny).map(|j| id(nx, j)).collect());
    node_sets.insert("bottom_edge".into(), (0..=nx).map(|i| id(i, 0)).collect());
    node_sets.insert("top_edge".into(), (0..=nx).map(|i| id(i, ny)).collect());
    node_sets.insert("bottom_left".into(), vec![id(0, 0)]);
    node_sets.insert("bottom_right".into(), vec![id(nx, 0)]);
    node_sets.insert("top_right".into(), vec![id(nx, ny)]);
    node_sets.insert("top_left".into(), vec![id(0, ny)]);
    node_sets.insert("all".into(), (0..nodes.len()).collect());

    let mesh = Mesh {
        nodes,
        elements,
        node_sets,
    };
    mesh.check()?;
    Ok(mesh)
}

/// Named node sets whose degrees of freedom are held at zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    #[serde(default)]
    pub fixed_displacement: Vec<String>,
    #[serde(default)]
    pub fixed_temperature: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub fn index(self) -> usize {
        match self {
            Direction::X => 0,
            Direction::Y => 1,
        }
    }
}

/// Free-DOF numbering for both fields. Constrained DOFs have no number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    structural_of_node: Vec<[Option<usize>; 2]>,
    thermal_of_node: Vec<Option<usize>>,
    structural_dofs: Vec<(usize, Direction)>,
    thermal_dofs: Vec<usize>,
}

impl DofMap {
    pub fn n_structural(&self) -> usize {
        self.structural_dofs.len()
    }

    pub fn n_thermal(&self) -> usize {
        self.thermal_dofs.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.thermal_of_node.len()
    }

    pub fn structural_dof(&self, node: usize, dir: Direction) -> Option<usize> {
        self.structural_of_node[node][dir.index()]
    }

    pub fn thermal_dof(&self, node: usize) -> Option<usize> {
        self.thermal_of_node[node]
    }

    pub fn structural_node(&self, dof: usize) -> (usize, Direction) {
        self.structural_dofs[dof]
    }

    pub fn thermal_node(&self, dof: usize) -> usize {
        self.thermal_dofs[dof]
    }

    /// Global structural DOFs of an element in `[u0x, u0y, u1x, ...]` order.
    pub(crate) fn element_structural(&self, conn: &[usize; 4]) -> [Option<usize>; 8] {
        let mut out = [None; 8];
        for (a, &n) in conn.iter().enumerate() {
            out[2 * a] = self.structural_of_node[n][0];
            out[2 * a + 1] = self.structural_of_node[n][1];
        }
        out
    }

    pub(crate) fn element_thermal(&self, conn: &[usize; 4]) -> [Option<usize>; 4] {
        conn.map(|n| self.thermal_of_node[n])
    }
}

pub fn build_dof_map(mesh: &Mesh, bc: &BoundaryConditions) -> Result<DofMap> {
    let n = mesh.n_nodes();
    let mut fixed_s = vec![false; n];
    let mut fixed_t = vec![false; n];
    for name in &bc.fixed_displacement {
        for &i in mesh.node_set(name)? {
            fixed_s[i] = true;
        }
    }
    for name in &bc.fixed_temperature {
        for &i in mesh.node_set(name)? {
            fixed_t[i] = true;
        }
    }

    let mut structural_of_node = vec![[None; 2]; n];
    let mut thermal_of_node = vec![None; n];
    let mut structural_dofs = Vec::new();
    let mut thermal_dofs = Vec::new();
    for node in 0..n {
        if !fixed_s[node] {
            for dir in [Direction::X, Direction::Y] {
                structural_of_node[node][dir.index()] = Some(structural_dofs.len());
                structural_dofs.push((node, dir));
            }
        }
        if !fixed_t[node] {
            thermal_of_node[node] = Some(thermal_dofs.len());
            thermal_dofs.push(node);
        }
    }
    Ok(DofMap {
        structural_of_node,
        thermal_of_node,
        structural_dofs,
        thermal_dofs,
    })
}
