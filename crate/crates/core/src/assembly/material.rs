use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-dimensional idealization of the plate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneModel {
    #[default]
    PlaneStress,
    PlaneStrain,
}

/// Isotropic linear thermoelastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    /// Young's modulus (Pa).
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Density (kg/m^3).
    pub density: f64,
    /// Linear thermal expansion coefficient (1/K).
    pub thermal_expansion: f64,
    /// Thermal conductivity (W/(m K)).
    pub conductivity: f64,
    /// Specific heat per unit mass (J/(K kg)).
    pub specific_heat: f64,
    /// Equilibrium temperature (K).
    pub reference_temperature: f64,
    #[serde(default)]
    pub plane: PlaneModel,
}

pub const CELSIUS_OFFSET: f64 = 273.15;

impl MaterialProps {
    /// Single-crystal silicon at 25 °C.
    pub fn silicon() -> Self {
        Self {
            youngs_modulus: 162.4e9,
            poisson_ratio: 0.28,
            density: 2330.0,
            thermal_expansion: 2.54e-6,
            conductivity: 145.0,
            specific_heat: 711.0,
            reference_temperature: 25.0 + CELSIUS_OFFSET,
            plane: PlaneModel::PlaneStress,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("youngs_modulus", self.youngs_modulus),
            ("density", self.density),
            ("conductivity", self.conductivity),
            ("specific_heat", self.specific_heat),
            ("reference_temperature", self.reference_temperature),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("material {name} must be positive, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(Error::invalid(format!(
                "material poisson_ratio must lie in [0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !self.thermal_expansion.is_finite() {
            return Err(Error::invalid("material thermal_expansion must be finite"));
        }
        Ok(())
    }

    pub fn lame_lambda(&self) -> f64 {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    }

    pub fn lame_mu(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Three-dimensional thermal stress modulus `alpha (3 lambda + 2 mu)`.
    pub fn beta(&self) -> f64 {
        self.thermal_expansion * (3.0 * self.lame_lambda() + 2.0 * self.lame_mu())
    }

    /// Thermal stress modulus of the chosen plane model.
    pub fn beta_plane(&self) -> f64 {
        let (a, e, nu) = (self.thermal_expansion, self.youngs_modulus, self.poisson_ratio);
        match self.plane {
            PlaneModel::PlaneStress => a * e / (1.0 - nu),
            PlaneModel::PlaneStrain => a * e / (1.0 - 2.0 * nu),
        }
    }

    /// Heat capacity per unit volume `c_E = rho * c`.
    pub fn heat_capacity(&self) -> f64 {
        self.density * self.specific_heat
    }

    /// Constitutive matrix in Voigt order `(xx, yy, xy)` with engineering shear.
    pub fn elasticity_matrix(&self) -> [[f64; 3]; 3] {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        match self.plane {
            PlaneModel::PlaneStress => {
                let c = e / (1.0 - nu * nu);
                [
                    [c, c * nu, 0.0],
                    [c * nu, c, 0.0],
                    [0.0, 0.0, c * 0.5 * (1.0 - nu)],
                ]
            }
            PlaneModel::PlaneStrain => {
                let (l, m) = (self.lame_lambda(), self.lame_mu());
                [[l + 2.0 * m, l, 0.0], [l, l + 2.0 * m, 0.0], [0.0, 0.0, m]]
            }
        }
    }
}
