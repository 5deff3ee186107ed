//! Discrete Dirichlet Laplacian, Poisson solves, Green columns and Green constants.
//!
//! Grid functions are plain `Vec<f64>` indexed by the node order of [`Grid`], with an
//! implicit zero trace on the boundary. The Poisson problem `−Δ_h ψ = f` is solved in
//! the finite-volume form `K ψ = W f`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{Domain, Grid, Link, Point};
use crate::error::{Error, Result};
use crate::linalg::{apply_k, StencilSolver};
use crate::numerics::gauss_legendre;

/// Values at the interior nodes of a grid; zero on and outside the boundary.
pub type ScalarField = Vec<f64>;

/// Factorized inverse of the discrete Dirichlet Laplacian on one grid.
#[derive(Debug, Clone)]
pub struct GreenOperator {
    grid: Arc<Grid>,
    solver: StencilSolver,
}

impl GreenOperator {
    pub fn new(domain: &Domain) -> Result<Self> {
        Self::for_grid(domain.grid().clone())
    }

    pub fn for_grid(grid: Arc<Grid>) -> Result<Self> {
        let solver = StencilSolver::new(&grid)?;
        Ok(Self { grid, solver })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                f.len(),
                self.grid.len()
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field has non-finite values".into()));
        }
        Ok(())
    }

    /// `G[f]`: the solution of `−Δ_h ψ = f` with zero trace.
    pub fn apply(&self, f: &[f64]) -> Result<ScalarField> {
        self.check_len(f)?;
        let b: Vec<f64> = self.grid.weights().iter().zip(f).map(|(w, v)| w * v).collect();
        self.solver.solve(&self.grid, &b)
    }

    /// Solves `K ψ = b` for a right side already in integrated (weighted) form.
    pub fn solve_weighted(&self, b: &[f64]) -> Result<ScalarField> {
        self.check_len(b)?;
        self.solver.solve(&self.grid, b)
    }

    /// `−Δ_h ψ = W⁻¹ K ψ`.
    pub fn neg_laplacian(&self, psi: &[f64]) -> ScalarField {
        let mut y = vec![0.0; psi.len()];
        apply_k(&self.grid, psi, &mut y);
        y.iter().zip(self.grid.weights()).map(|(v, w)| v / w).collect()
    }

    /// Relative discrete-L² residual `‖W(−Δ_h ψ − f)‖ / ‖W f‖`.
    pub fn relative_residual(&self, psi: &[f64], f: &[f64]) -> f64 {
        let mut y = vec![0.0; psi.len()];
        apply_k(&self.grid, psi, &mut y);
        let w = self.grid.weights();
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..psi.len() {
            let b = w[k] * f[k];
            num += (y[k] - b).powi(2);
            den += b * b;
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

/// `ψ = G[f]`.
pub fn poisson_solve(g: &GreenOperator, f: &[f64]) -> Result<ScalarField> {
    g.apply(f)
}

/// `½ Σ w ψ f`, the integration-by-parts form of `½∫|∇ψ|²` when `−Δ_h ψ = f`.
pub fn dirichlet_energy(grid: &Grid, psi: &[f64], f: &[f64]) -> f64 {
    0.5 * grid.inner(psi, f)
}

/// Centered-difference gradients; next to the boundary the three-point formula on
/// the uneven stencil uses the zero trace at the crossing.
pub fn node_gradients(grid: &Grid, psi: &[f64]) -> Vec<[f64; 2]> {
    let h = grid.h();
    let side = |link: Link| match link {
        Link::Node(m) => (h, psi[m]),
        Link::Boundary(t) => (t * h, 0.0),
    };
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let mut grad = [0.0; 2];
            for (axis, g) in grad.iter_mut().enumerate() {
                let (b, up) = side(node.links[2 * axis]);
                let (a, um) = side(node.links[2 * axis + 1]);
                let u0 = psi[k];
                *g = -b / (a * (a + b)) * um + (b - a) / (a * b) * u0 + a / (b * (a + b)) * up;
            }
            grad
        })
        .collect()
}

/// `½ Σ w |∇_h ψ|²` from [`node_gradients`].
pub fn gradient_energy(grid: &Grid, psi: &[f64]) -> f64 {
    let grads = node_gradients(grid, psi);
    0.5 * grid
        .weights()
        .iter()
        .zip(&grads)
        .map(|(w, g)| w * (g[0] * g[0] + g[1] * g[1]))
        .sum::<f64>()
}

/// `ψ_0 = G[1]`.
pub fn torsion(g: &GreenOperator) -> Result<ScalarField> {
    g.apply(&vec![1.0; g.len()])
}

/// Green column for a unit-mass source at the node nearest `x0`; returns the node
/// index with the column.
pub fn green_point(g: &GreenOperator, x0: Point) -> Result<(usize, ScalarField)> {
    let a = g.grid().nearest_node(x0)?;
    Ok((a, green_column(g, a)?))
}

/// `K⁻¹ e_a`: the response to a source of total mass one concentrated at node `a`.
pub fn green_column(g: &GreenOperator, a: usize) -> Result<ScalarField> {
    let mut e = vec![0.0; g.len()];
    e[a] = 1.0;
    g.solve_weighted(&e)
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `∫ G^{p+1}(x0, y) dy` from a Green column with source node `a`.
///
/// The singular cell is integrated analytically as `(H − log r/(2π))^{p+1}`, where
/// `H` is the regular part recovered from the lattice Green function's diagonal.
pub fn green_power_integral(grid: &Grid, column: &[f64], a: usize, p: f64) -> f64 {
    let h = grid.h();
    let w = grid.weights();
    let far: f64 = column
        .iter()
        .zip(w)
        .enumerate()
        .filter(|(k, _)| *k != a)
        .map(|(_, (g, wk))| wk * g.max(0.0).powf(p + 1.0))
        .sum();
    let regular = column[a] + h.ln() / (2.0 * PI) - (EULER_GAMMA + 1.5 * 2f64.ln()) / (2.0 * PI);
    let near = singular_cell_integral(h, regular, p) * (w[a] / (h * h));
    far + near
}

/// `∫_{[-h/2,h/2]²} (H − log r/(2π))_+^{p+1}` by Gauss quadrature in polar form over
/// the eight congruent triangles of the cell; `r = r_max s²` tames the log.
fn singular_cell_integral(h: f64, regular: f64, p: f64) -> f64 {
    let (xs, ws) = gauss_legendre(24);
    let (xp, wp) = gauss_legendre(16);
    let quarter = PI / 4.0;
    let mut total = 0.0;
    for (xi, wi) in xp.iter().zip(&wp) {
        let phi = 0.5 * quarter * (xi + 1.0);
        let r_max = 0.5 * h / phi.cos();
        let mut inner = 0.0;
        for (sj, wj) in xs.iter().zip(&ws) {
            let s = 0.5 * (sj + 1.0);
            let r = r_max * s * s;
            let val = (regular - r.ln() / (2.0 * PI)).max(0.0).powf(p + 1.0);
            inner += 0.5 * wj * val * 2.0 * r_max * r_max * s.powi(3);
        }
        total += 0.5 * quarter * wi * inner;
    }
    8.0 * total
}

/// `k_p = (∫ G^{p+1}(x0, y) dy)^{1/(p+1)}` at the node nearest `x0`.
pub fn kp_constant(g: &GreenOperator, x0: Point, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    let (a, col) = green_point(g, x0)?;
    Ok(green_power_integral(g.grid(), &col, a, p).powf(1.0 / (p + 1.0)))
}

/// `4π · max_x ∫ G(x, y) dy`.
pub fn kappa(g: &GreenOperator) -> Result<f64> {
    let psi0 = torsion(g)?;
    Ok(4.0 * PI * psi0.iter().copied().fold(0.0, f64::max))
}

/// Index of the largest value.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;

    fn op(spec: DomainSpec) -> GreenOperator {
        GreenOperator::new(&Domain::normalize(&spec).unwrap()).unwrap()
    }

    /// Double-sine series of the torsion function at the center of the unit square.
    fn square_torsion_center() -> f64 {
        let mut s = 0.0;
        for m in (1..400).step_by(2) {
            for n in (1..400).step_by(2) {
                let (mf, nf) = (m as f64, n as f64);
                let sign = if ((m - 1) / 2 + (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * 16.0 / (PI.powi(4) * mf * nf * (mf * mf + nf * nf));
            }
        }
        s
    }

    #[test]
    fn disk_torsion_and_energy() {
        let g = op(DomainSpec::disk(128));
        let psi = torsion(&g).unwrap();
        let k = g.grid().nearest_node([0.0, 0.0]).unwrap();
        assert!((psi[k] * 4.0 * PI - 1.0).abs() < 1e-2, "{}", psi[k] * 4.0 * PI);
        let e = dirichlet_energy(g.grid(), &psi, &vec![1.0; g.len()]);
        assert!((e * 16.0 * PI - 1.0).abs() < 1e-2, "{}", e * 16.0 * PI);
        let ge = gradient_energy(g.grid(), &psi);
        assert!((ge - e).abs() < 2.0 * g.grid().h() * e, "{ge} {e}");
        assert!(g.relative_residual(&psi, &vec![1.0; g.len()]) < 1e-10);
    }

    #[test]
    fn square_torsion_matches_series() {
        let exact = square_torsion_center();
        assert!((exact - 0.07367135).abs() < 1e-7, "{exact}");
        let g = op(DomainSpec::square(128));
        let psi = torsion(&g).unwrap();
        let k = g.grid().nearest_node([0.0, 0.0]).unwrap();
        assert!((psi[k] / exact - 1.0).abs() < 5e-3);
        let e = dirichlet_energy(g.grid(), &psi, &vec![1.0; g.len()]);
        assert!(e < 1.0 / (16.0 * PI));
    }

    #[test]
    fn green_symmetry_and_mass() {
        let g = op(DomainSpec::disk(64));
        let (a, ga) = green_point(&g, [0.0, 0.0]).unwrap();
        let (b, gb) = green_point(&g, [0.13, -0.21]).unwrap();
        assert!((ga[b] - gb[a]).abs() < 1e-9 * ga[b].abs());
        let mass = g.grid().integrate(&ga);
        assert!((mass * 4.0 * PI - 1.0).abs() < 1e-2);
        assert!(green_point(&g, [2.0, 0.0]).is_err());
        let _ = a;
    }

    #[test]
    fn disk_green_constants() {
        let g = op(DomainSpec::disk(128));
        let k1 = kp_constant(&g, [0.0, 0.0], 1.0).unwrap();
        let exact = 2f64.sqrt() / (4.0 * PI);
        assert!((k1 / exact - 1.0).abs() < 2e-2, "{k1} vs {exact}");
        let (a, col) = green_point(&g, [0.0, 0.0]).unwrap();
        let i2 = green_power_integral(g.grid(), &col, a, 1.0);
        assert!((i2 / (2.0 / (16.0 * PI * PI)) - 1.0).abs() < 3e-2);
        let kap = kappa(&g).unwrap();
        assert!((kap - 1.0).abs() < 1e-2, "{kap}");
    }

    #[test]
    fn square_kappa_below_one() {
        let g = op(DomainSpec::square(64));
        assert!(kappa(&g).unwrap() < 1.0);
    }
}
