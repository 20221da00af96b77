//! Scalar fields on the grid, the coupled model state, and trapezoid
//! quadrature.
//!
//! Every norm and inner product in the crate is the trapezoid rule on the
//! node values; boundary rows carry half weight. The discrete gradient norm
//! is the summation-by-parts Dirichlet form, which coincides with
//! `-<lap(f), f>` for both boundary-condition families.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Boundary-condition family a field belongs to.
///
/// `DirichletZero` fields vanish on the boundary (stream function and
/// vorticity); `NeumannZero` fields have zero normal derivative
/// (temperature, salinity, and the stationary noise process).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    DirichletZero,
    NeumannZero,
}

impl BcKind {
    /// Sign of the reflection ghost: odd across the boundary for Dirichlet,
    /// even for Neumann.
    pub fn ghost_sign(self) -> f64 {
        match self {
            BcKind::DirichletZero => -1.0,
            BcKind::NeumannZero => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Array2<f64>,
    bc: BcKind,
}

impl ScalarField {
    pub fn zeros(grid: &Grid, bc: BcKind) -> Self {
        ScalarField {
            values: Array2::zeros(grid.shape()),
            bc,
        }
    }

    pub fn from_fn(grid: &Grid, bc: BcKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Array2::zeros(grid.shape());
        for i in 0..grid.ny {
            for j in 0..grid.nz {
                values[(i, j)] = f(grid.y(i), grid.z(j));
            }
        }
        ScalarField { values, bc }
    }

    pub fn from_values(values: Array2<f64>, bc: BcKind) -> Self {
        ScalarField { values, bc }
    }

    pub fn bc(&self) -> BcKind {
        self.bc
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.shape() != grid.shape() {
            return Err(Error::DimensionMismatch {
                expected: grid.shape(),
                got: self.shape(),
            });
        }
        Ok(())
    }

    /// Reflection-extended access: indices one step outside the grid map to
    /// their mirror node with the field's ghost sign.
    #[inline]
    pub fn ghost(&self, i: isize, j: isize) -> f64 {
        let (ny, nz) = self.values.dim();
        let mut s = 1.0;
        let mut i = i;
        let mut j = j;
        if i < 0 {
            i = -i;
            s *= self.bc.ghost_sign();
        } else if i >= ny as isize {
            i = 2 * (ny as isize - 1) - i;
            s *= self.bc.ghost_sign();
        }
        if j < 0 {
            j = -j;
            s *= self.bc.ghost_sign();
        } else if j >= nz as isize {
            j = 2 * (nz as isize - 1) - j;
            s *= self.bc.ghost_sign();
        }
        s * self.values[(i as usize, j as usize)]
    }

    /// Overwrite boundary nodes with zero. Dirichlet fields call this after
    /// any update that may have touched the boundary.
    pub fn zero_boundary(&mut self) {
        let (ny, nz) = self.values.dim();
        for i in 0..ny {
            self.values[(i, 0)] = 0.0;
            self.values[(i, nz - 1)] = 0.0;
        }
        for j in 0..nz {
            self.values[(0, j)] = 0.0;
            self.values[(ny - 1, j)] = 0.0;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// a + c * b, keeping a's boundary-condition tag.
    pub fn add_scaled(&mut self, other: &ScalarField, c: f64) {
        self.values.zip_mut_with(other.values(), |a, b| *a += c * b);
    }

    pub fn scale(&mut self, c: f64) {
        self.values.mapv_inplace(|v| c * v);
    }
}

/// Trapezoid inner product over the domain.
pub fn inner(a: &ScalarField, b: &ScalarField, grid: &Grid) -> f64 {
    let mut acc = 0.0;
    for i in 0..grid.ny {
        let wy = grid.wy(i);
        for j in 0..grid.nz {
            acc += wy * grid.wz(j) * a.values[(i, j)] * b.values[(i, j)];
        }
    }
    acc * grid.dy * grid.dz
}

pub fn norm_sq(a: &ScalarField, grid: &Grid) -> f64 {
    inner(a, a, grid)
}

pub fn norm(a: &ScalarField, grid: &Grid) -> f64 {
    norm_sq(a, grid).sqrt()
}

/// Trapezoid integral of the field over the domain.
pub fn integral(a: &ScalarField, grid: &Grid) -> f64 {
    let mut acc = 0.0;
    for i in 0..grid.ny {
        let wy = grid.wy(i);
        for j in 0..grid.nz {
            acc += wy * grid.wz(j) * a.values[(i, j)];
        }
    }
    acc * grid.dy * grid.dz
}

/// Mean of the field over the domain.
pub fn mean(a: &ScalarField, grid: &Grid) -> f64 {
    integral(a, grid) / (2.0 * grid.l * grid.d)
}

/// Discrete Dirichlet form: sum over edges of the squared difference
/// quotient, with trapezoid weights along the transverse direction. Equals
/// `-<lap(f), f>` exactly for both boundary-condition families.
pub fn grad_norm_sq(f: &ScalarField, grid: &Grid) -> f64 {
    let v = f.values();
    let mut acc_y = 0.0;
    for j in 0..grid.nz {
        let wz = grid.wz(j) * grid.dz;
        for i in 0..grid.ny - 1 {
            let df = v[(i + 1, j)] - v[(i, j)];
            acc_y += wz * df * df / grid.dy;
        }
    }
    let mut acc_z = 0.0;
    for i in 0..grid.ny {
        let wy = grid.wy(i) * grid.dy;
        for j in 0..grid.nz - 1 {
            let df = v[(i, j + 1)] - v[(i, j)];
            acc_z += wy * df * df / grid.dz;
        }
    }
    acc_y + acc_z
}

/// Trapezoid inner product of the surface traces (z = d row).
pub fn surface_inner(a: &ScalarField, b: &ScalarField, grid: &Grid) -> f64 {
    let j = grid.surface_j();
    let mut acc = 0.0;
    for i in 0..grid.ny {
        acc += grid.wy(i) * a.values[(i, j)] * b.values[(i, j)];
    }
    acc * grid.dy
}

/// The four coupled fields plus the simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub psi: ScalarField,
    pub q: ScalarField,
    pub temp: ScalarField,
    pub salt: ScalarField,
    pub t: f64,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        State {
            psi: ScalarField::zeros(grid, BcKind::DirichletZero),
            q: ScalarField::zeros(grid, BcKind::DirichletZero),
            temp: ScalarField::zeros(grid, BcKind::NeumannZero),
            salt: ScalarField::zeros(grid, BcKind::NeumannZero),
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.q.is_finite() && self.temp.is_finite() && self.salt.is_finite()
    }

    /// L2 norm of (q, T, S) in the product phase space.
    pub fn norm_h(&self, grid: &Grid) -> f64 {
        (norm_sq(&self.q, grid) + norm_sq(&self.temp, grid) + norm_sq(&self.salt, grid)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn ghost_reflection_signs() {
        let g = make_grid(5, 4, 1.0, 1.0).unwrap();
        let mut f = ScalarField::zeros(&g, BcKind::NeumannZero);
        f.values_mut()[(1, 1)] = 3.0;
        assert_eq!(f.ghost(-1, 1), 3.0);
        let mut h = ScalarField::zeros(&g, BcKind::DirichletZero);
        h.values_mut()[(1, 1)] = 3.0;
        assert_eq!(h.ghost(-1, 1), -3.0);
        assert_eq!(h.ghost(-1, -1), 3.0); // double reflection
        assert_eq!(h.ghost(1, 1), 3.0);
    }

    #[test]
    fn quadrature_integrates_constants_exactly() {
        let g = make_grid(9, 7, 1.5, 2.0).unwrap();
        let one = ScalarField::from_fn(&g, BcKind::NeumannZero, |_, _| 1.0);
        let area = 2.0 * g.l * g.d;
        assert!((integral(&one, &g) - area).abs() < 1e-13);
        assert!((norm_sq(&one, &g) - area).abs() < 1e-13);
        assert!(grad_norm_sq(&one, &g).abs() < 1e-15);
    }

    #[test]
    fn surface_inner_is_top_row_quadrature() {
        let g = make_grid(5, 4, 1.0, 1.0).unwrap();
        let one = ScalarField::from_fn(&g, BcKind::NeumannZero, |_, _| 1.0);
        assert!((surface_inner(&one, &one, &g) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn grad_norm_matches_linear_field() {
        // f = y has |grad f|^2 = 1 over the area.
        let g = make_grid(17, 13, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, BcKind::NeumannZero, |y, _| y);
        let area = 2.0 * g.l * g.d;
        assert!((grad_norm_sq(&f, &g) - area).abs() < 1e-12);
    }
}
