//! Uniform node-centered grid on the rectangle [-l, l] x [0, d].
//!
//! Node (0, 0) sits at (-l, 0) and node (ny-1, nz-1) at (l, d). The first
//! index runs over y (latitude), the second over z (depth, surface at z = d).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub ny: usize,
    pub nz: usize,
    /// Half-width of the domain in y.
    pub l: f64,
    /// Depth of the domain in z.
    pub d: f64,
    pub dy: f64,
    pub dz: f64,
}

/// Build a grid, rejecting degenerate shapes. Stencils need two interior
/// rows, hence ny, nz >= 4.
pub fn make_grid(ny: usize, nz: usize, l: f64, d: f64) -> Result<Grid> {
    if ny < 4 || nz < 4 {
        return Err(Error::Grid(format!(
            "need ny, nz >= 4, got ny={ny}, nz={nz}"
        )));
    }
    if !(l.is_finite() && d.is_finite() && l > 0.0 && d > 0.0) {
        return Err(Error::Grid(format!(
            "domain extents must be finite and positive, got l={l}, d={d}"
        )));
    }
    Ok(Grid {
        ny,
        nz,
        l,
        d,
        dy: 2.0 * l / (ny - 1) as f64,
        dz: d / (nz - 1) as f64,
    })
}

impl Grid {
    pub fn y(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.dy
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.dz
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nz)
    }

    pub fn num_nodes(&self) -> usize {
        self.ny * self.nz
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.ny - 1 || j == self.nz - 1
    }

    /// Index of the surface row (z = d).
    pub fn surface_j(&self) -> usize {
        self.nz - 1
    }

    /// Trapezoid weight of node (i, j); boundary rows carry half weight,
    /// corners a quarter.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.wy(i) * self.wz(j)
    }

    pub fn wy(&self, i: usize) -> f64 {
        if i == 0 || i == self.ny - 1 {
            0.5
        } else {
            1.0
        }
    }

    pub fn wz(&self, j: usize) -> f64 {
        if j == 0 || j == self.nz - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Interior nodes, row-major over (i, j).
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |i| (1..self.nz - 1).map(move |j| (i, j)))
    }

    /// Boundary nodes, each exactly once.
    pub fn boundary(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (ny, nz) = (self.ny, self.nz);
        (0..ny)
            .flat_map(move |i| (0..nz).map(move |j| (i, j)))
            .filter(move |&(i, j)| i == 0 || j == 0 || i == ny - 1 || j == nz - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings_match_extents() {
        let g = make_grid(5, 5, 1.0, 1.0).unwrap();
        assert_eq!(g.dy, 0.5);
        assert_eq!(g.dz, 0.25);
        let g = make_grid(4, 4, 2.0, 1.0).unwrap();
        assert!((g.dy - 4.0 / 3.0).abs() < 1e-15);
        assert!((g.dz - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn corners_sit_on_domain_corners() {
        let g = make_grid(7, 9, 2.5, 1.5).unwrap();
        assert_eq!(g.y(0), -2.5);
        assert_eq!(g.z(0), 0.0);
        assert!((g.y(g.ny - 1) - 2.5).abs() < 1e-14);
        assert!((g.z(g.nz - 1) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(make_grid(3, 5, 1.0, 1.0).is_err());
        assert!(make_grid(5, 3, 1.0, 1.0).is_err());
        assert!(make_grid(5, 5, 0.0, 1.0).is_err());
        assert!(make_grid(5, 5, 1.0, -1.0).is_err());
        assert!(make_grid(5, 5, f64::NAN, 1.0).is_err());
        assert!(make_grid(5, 5, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn interior_and_boundary_partition_nodes() {
        let g = make_grid(6, 5, 1.0, 1.0).unwrap();
        let mut seen = vec![0usize; g.num_nodes()];
        for (i, j) in g.interior() {
            assert!(!g.is_boundary(i, j));
            seen[i * g.nz + j] += 1;
        }
        for (i, j) in g.boundary() {
            assert!(g.is_boundary(i, j));
            seen[i * g.nz + j] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}
