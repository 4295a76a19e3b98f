//! Primal-dual search directions, registered by name.
//!
//! Every direction here linearizes complementarity as
//! `dX + sym(P dZ Q) = K`, so the Schur complement is
//! `M_ij = tr(A_i P A_j Q)` and the solver only needs the pair `(P, Q)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub trait SearchDirection: Send + Sync {
    fn name(&self) -> &'static str;

    /// Scaling pair `(P, Q)` for the current iterate, or `None` if it cannot
    /// be formed (iterate lost definiteness).
    fn scaling(
        &self,
        x: &DMatrix<f64>,
        z: &DMatrix<f64>,
        z_inv: &DMatrix<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)>;
}

/// Helmberg-Rendl-Vanderbei-Wolkowicz / Kojima-Shindoh-Hara / Monteiro
/// direction, `P = X`, `Q = Z^-1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct HkmDirection;

impl SearchDirection for HkmDirection {
    fn name(&self) -> &'static str {
        "hkm"
    }

    fn scaling(
        &self,
        x: &DMatrix<f64>,
        _z: &DMatrix<f64>,
        z_inv: &DMatrix<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((x.clone(), z_inv.clone()))
    }
}

/// Nesterov-Todd direction, `P = Q = W` with `W Z W = X`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NtDirection;

fn sym_power(a: &DMatrix<f64>, p: f64) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new((a + a.transpose()) * 0.5);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let d = eig.eigenvalues.map(|l| l.powf(p));
    let v = &eig.eigenvectors;
    Some(v * DMatrix::from_diagonal(&d) * v.transpose())
}

impl SearchDirection for NtDirection {
    fn name(&self) -> &'static str {
        "nt"
    }

    fn scaling(
        &self,
        x: &DMatrix<f64>,
        z: &DMatrix<f64>,
        _z_inv: &DMatrix<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let z_half = sym_power(z, 0.5)?;
        let z_mhalf = sym_power(z, -0.5)?;
        let g = &z_half * x * &z_half;
        let g_half = sym_power(&g, 0.5)?;
        let w = &z_mhalf * g_half * &z_mhalf;
        let w = (&w + w.transpose()) * 0.5;
        Some((w.clone(), w))
    }
}

static DIRECTIONS: &[&dyn SearchDirection] = &[&HkmDirection, &NtDirection];

pub fn search_directions() -> Vec<&'static str> {
    DIRECTIONS.iter().map(|d| d.name()).collect()
}

pub fn search_direction(name: &str) -> Result<&'static dyn SearchDirection> {
    DIRECTIONS
        .iter()
        .copied()
        .find(|d| d.name() == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "search direction",
            name: name.to_string(),
            known: search_directions().join(", "),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_maps_z_to_x() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]);
        let z = DMatrix::from_row_slice(3, 3, &[1.0, -0.1, 0.0, -0.1, 0.7, 0.2, 0.0, 0.2, 3.0]);
        let zi = z.clone().try_inverse().unwrap();
        let (w, _) = NtDirection.scaling(&x, &z, &zi).unwrap();
        assert!((&w * &z * &w - &x).abs().max() < 1e-12);
    }

    #[test]
    fn registry() {
        assert_eq!(search_direction("hkm").unwrap().name(), "hkm");
        assert_eq!(search_direction("nt").unwrap().name(), "nt");
        assert!(search_direction("aho").is_err());
        assert_eq!(search_directions(), vec!["hkm", "nt"]);
    }
}
