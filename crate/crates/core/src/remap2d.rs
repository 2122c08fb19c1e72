//! Two-dimensional remap on tensor-product subdomains.
//!
//! Nodal values of a subdomain are stored row-major in `(xi index, eta
//! index)`: entry `i * N + j` sits at `(xi_i, eta_j)`. The step follows the
//! same three phases as the 1D remap, with one interface value per edge node.

use rayon::prelude::*;

use crate::densela::{solve_least_squares, DenseMatrix, LuFactors};
use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};
use crate::remap1d::{flux_quadrature, is_upwind, resolve_interface, StepContext, StepOutcome, UPWIND_ZERO};
use crate::scalar::{Point, Real};
use crate::scheme::BoundaryMethod;
use crate::spectral::NodeBasis;
use crate::transport::{advect, containment_slack, trace_back, AdvectedState, DtRule, TimeOrder, VelocityModel};

/// Subdomain edge, numbered `b = 1..4` as left, right, bottom, top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    /// Direction normal to the edge.
    pub fn axis(self) -> usize {
        match self {
            Edge::Left | Edge::Right => 0,
            Edge::Bottom | Edge::Top => 1,
        }
    }

    /// True on the high side of its direction.
    pub fn upper(self) -> bool {
        matches!(self, Edge::Right | Edge::Top)
    }

    pub fn opposite(self) -> Edge {
        match self {
            Edge::Left => Edge::Right,
            Edge::Right => Edge::Left,
            Edge::Bottom => Edge::Top,
            Edge::Top => Edge::Bottom,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    fn reference_coordinate<T: Real>(self) -> T {
        if self.upper() {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Tensor interpolant evaluated at reference point `(xi, eta)`.
pub fn tensor_eval<T: Real>(basis: &NodeBasis<T>, values: &[T], xi: T, eta: T) -> T {
    let n = basis.len();
    let cx = basis.cardinals(xi);
    let cy = basis.cardinals(eta);
    let mut acc = T::zero();
    for (l, &hx) in cx.iter().enumerate() {
        let row = &values[l * n..(l + 1) * n];
        acc = acc + hx * row.iter().zip(&cy).map(|(&v, &hy)| v * hy).sum::<T>();
    }
    acc
}

/// The `N^2 x N^2` system `H c = phi*` with `H[p][(l, m)] = h_l(xi*_p) h_m(eta*_p)`.
#[derive(Debug, Clone)]
pub struct TensorInterpolantSystem<T> {
    pub matrix: DenseMatrix<T>,
    pub rhs: Vec<T>,
}

impl<T: Real> TensorInterpolantSystem<T> {
    /// Builds the system from advected reference positions and values.
    pub fn new(basis: &NodeBasis<T>, reference_positions: &[Point<T>], values: &[T]) -> Result<Self> {
        let n = basis.len();
        if reference_positions.len() != n * n || values.len() != n * n {
            return Err(Error::InvalidArgument(format!("expected {} particles", n * n)));
        }
        let mut entries = Vec::with_capacity(n.pow(4));
        for p in reference_positions {
            let cx = basis.cardinals(p[0]);
            let cy = basis.cardinals(p[1]);
            for &hx in &cx {
                entries.extend(cy.iter().map(|&hy| hx * hy));
            }
        }
        Ok(Self { matrix: DenseMatrix::from_row_major(n * n, n * n, entries)?, rhs: values.to_vec() })
    }

    pub fn solve(&self) -> Result<Vec<T>> {
        LuFactors::new(&self.matrix)?.solve(&self.rhs)
    }
}

/// Values of the advected tensor interpolant at the fixed Gauss nodes.
pub fn remap_2d_interior<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    state: &AdvectedState<T>,
    k: usize,
) -> Result<Vec<T>> {
    let cell = mesh.cell(k);
    let (ax, ay) = (mesh.axis(0), mesh.axis(1));
    let reference: Vec<Point<T>> =
        state.positions[k].iter().map(|p| [ax.to_reference(cell[0], p[0]), ay.to_reference(cell[1], p[1])]).collect();
    let system = TensorInterpolantSystem::new(basis, &reference, &state.values[k])?;
    system.solve().map_err(|e| match e {
        Error::SingularSystem(reason) => Error::ParticleCrossing { subdomain: k, reason },
        other => other,
    })
}

/// The `N` values of the interpolant along one edge.
///
/// Left/right edges run over the eta nodes, bottom/top over the xi nodes.
pub fn edge_values_2d<T: Real>(values: &[T], basis: &NodeBasis<T>, edge: Edge) -> Vec<T> {
    let n = basis.len();
    let h = basis.cardinals(edge.reference_coordinate());
    (0..n)
        .map(|s| match edge.axis() {
            0 => (0..n).map(|l| h[l] * values[l * n + s]).sum(),
            _ => (0..n).map(|m| h[m] * values[s * n + m]).sum(),
        })
        .collect()
}

/// Physical points of the edge nodes of subdomain `k`.
pub fn edge_points<T: Real>(mesh: &Mesh<T>, basis: &NodeBasis<T>, k: usize, edge: Edge) -> Vec<Point<T>> {
    let b = mesh.bounds(k);
    let fixed = match (edge.axis(), edge.upper()) {
        (0, false) => b[0].0,
        (0, true) => b[0].1,
        (_, false) => b[1].0,
        (_, true) => b[1].1,
    };
    let tangential = 1 - edge.axis();
    let (lo, hi) = b[tangential];
    basis
        .nodes()
        .iter()
        .map(|&s| {
            let mut p = [fixed, fixed];
            p[tangential] = lo + (hi - lo) * s;
            p
        })
        .collect()
}

fn to_reference<T: Real>(mesh: &Mesh<T>, k: usize, p: Point<T>) -> Point<T> {
    let c = mesh.cell(k);
    [mesh.axis(0).to_reference(c[0], p[0]), mesh.axis(1).to_reference(c[1], p[1])]
}

/// `M^n = w_x w_y sum_ij w_i w_j phi_ij` and the flux-updated target after `dt`.
///
/// Edge line integrals use the 1D quadrature weights; states after `t^n`
/// are traced back into the subdomain's own time-n interpolant.
pub fn mass_target_2d<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field_n: &Field<T>,
    k: usize,
    velocity: &VelocityModel<T>,
    dt: T,
    order: TimeOrder,
) -> (T, T) {
    let n = basis.len();
    let w = basis.quad_weights();
    let widths = [mesh.axis(0).width, mesh.axis(1).width];
    let values = field_n.subdomain(k);
    let mut current = T::zero();
    for i in 0..n {
        for j in 0..n {
            current = current + w[i] * w[j] * values[i * n + j];
        }
    }
    current = current * widths[0] * widths[1];
    let state_at = |p: Point<T>, tau: T| -> T {
        if tau == T::zero() {
            let r = to_reference(mesh, k, p);
            return tensor_eval(basis, values, r[0], r[1]);
        }
        let (origin, growth) = trace_back(velocity, p, tau, order);
        let r = to_reference(mesh, k, origin);
        growth * tensor_eval(basis, values, r[0], r[1])
    };
    let mut integral = T::zero();
    for (tau, wt) in flux_quadrature(order, dt) {
        let mut flux = T::zero();
        for edge in Edge::ALL {
            let d = edge.axis();
            let line = widths[1 - d];
            // inflow counts positive on the low edges, outflow negative on the high ones
            let sign = if edge.upper() { -T::one() } else { T::one() };
            for (s, p) in edge_points(mesh, basis, k, edge).into_iter().enumerate() {
                flux = flux + sign * line * w[s] * velocity.velocity(p)[d] * state_at(p, tau);
            }
        }
        integral = integral + wt * flux;
    }
    (current, current + integral)
}

/// Old solution evaluated at `p` in whichever subdomain holds it.
fn eval_global<T: Real>(mesh: &Mesh<T>, basis: &NodeBasis<T>, field: &Field<T>, p: Point<T>) -> Option<T> {
    let mut cell = [0usize; 2];
    let mut local = [T::zero(); 2];
    for d in 0..2 {
        let axis = mesh.axis(d);
        let x = axis.wrap(p[d]);
        let slack = containment_slack(axis.lo, axis.hi);
        if x < axis.lo - slack || x > axis.hi + slack {
            return None;
        }
        cell[d] = axis.locate(x);
        local[d] = axis.to_reference(cell[d], x);
    }
    let owner = mesh.linear_index(cell);
    Some(tensor_eval(basis, field.subdomain(owner), local[0], local[1]))
}

struct PhaseA<T> {
    intermediate: Vec<T>,
    /// Per edge, per edge node: the candidate when this side is upwind.
    candidates: [Vec<Option<T>>; 4],
}

/// Advances a 2D field from `t_n` to `t_n + dt`.
pub fn step_2d<T: Real>(ctx: &StepContext<'_, T>, field: &Field<T>, t_n: T, dt: T) -> Result<StepOutcome<T>> {
    let StepContext { mesh, basis, velocity, scheme, ghost } = *ctx;
    if mesh.dim() != 2 {
        return Err(Error::InvalidArgument("step_2d needs a 2D mesh".into()));
    }
    if scheme.constraints.has_energy() {
        return Err(Error::Config("the energy constraint is only available in 1D".into()));
    }
    let n = basis.len();
    let order = scheme.time_order;
    let strict = scheme.dt_rule == DtRule::Strict;
    let state = advect(mesh, basis, field, velocity, dt, order, strict)?;

    // phase A
    let phase_a: Vec<PhaseA<T>> = (0..mesh.subdomain_count())
        .into_par_iter()
        .map(|k| {
            let intermediate = remap_2d_interior(mesh, basis, &state, k)?;
            let mut candidates: [Vec<Option<T>>; 4] = Default::default();
            for edge in Edge::ALL {
                let points = edge_points(mesh, basis, k, edge);
                let interp = edge_values_2d(&intermediate, basis, edge);
                candidates[edge.index()] = points
                    .iter()
                    .zip(interp)
                    .map(|(&p, value)| {
                        if !is_upwind(velocity.velocity(p)[edge.axis()], edge.upper()) {
                            return Ok(None);
                        }
                        Ok(Some(match scheme.boundary {
                            BoundaryMethod::Interp => value,
                            BoundaryMethod::Backtrack => {
                                let (origin, growth) = trace_back(velocity, p, dt, order);
                                let v = eval_global(mesh, basis, field, origin).ok_or(Error::BacktrackRange {
                                    subdomain: k,
                                    origin: origin[edge.axis()].to_f64_lossy(),
                                })?;
                                growth * v
                            }
                        }))
                    })
                    .collect::<Result<_>>()?;
            }
            Ok(PhaseA { intermediate, candidates })
        })
        .collect::<Result<_>>()?;

    // phases B and C: resolve the four edges of each subdomain, then solve
    let t_next = t_n + dt;
    let (ex, ey) = (basis.cardinals(T::zero()), basis.cardinals(T::one()));
    let weights = basis.quad_weights();
    let jac = mesh.jacobian();
    let solved: Vec<Vec<T>> = (0..mesh.subdomain_count())
        .into_par_iter()
        .map(|k| {
            let mut a = DenseMatrix::identity(n * n);
            let mut b = phase_a[k].intermediate.clone();
            for edge in Edge::ALL {
                let d = edge.axis();
                let points = edge_points(mesh, basis, k, edge);
                let own = &phase_a[k].candidates[edge.index()];
                let neighbour = mesh.neighbor(k, d, edge.upper());
                let h = if edge.upper() { &ey } else { &ex };
                for (s, &p) in points.iter().enumerate() {
                    let other = match neighbour {
                        Some(nb) => phase_a[nb].candidates[edge.opposite().index()][s],
                        None => {
                            let g = ghost.ok_or_else(|| {
                                Error::InvalidArgument("Dirichlet boundary needs a ghost solution".into())
                            })?;
                            Some(g(p, t_next))
                        }
                    };
                    let (low, high) = if edge.upper() { (own[s], other) } else { (other, own[s]) };
                    let u = velocity.velocity(p)[d];
                    let missing = || Error::Numerical(format!("upwind candidate missing on subdomain {k}"));
                    let value = if u > T::lit(UPWIND_ZERO) {
                        low.ok_or_else(missing)?
                    } else if u < -T::lit(UPWIND_ZERO) {
                        high.ok_or_else(missing)?
                    } else {
                        resolve_interface(low.ok_or_else(missing)?, high.ok_or_else(missing)?, u)
                    };
                    let mut row = vec![T::zero(); n * n];
                    for (q, &hq) in h.iter().enumerate() {
                        let idx = if d == 0 { q * n + s } else { s * n + q };
                        row[idx] = hq;
                    }
                    a.push_row(&row);
                    b.push(value);
                }
            }
            if scheme.constraints.has_mass() {
                let row: Vec<T> = (0..n * n).map(|idx| jac * weights[idx / n] * weights[idx % n]).collect();
                a.push_row(&row);
                b.push(mass_target_2d(mesh, basis, field, k, velocity, dt, order).1);
            }
            solve_least_squares(&a, &b)
        })
        .collect::<Result<_>>()?;

    let field = Field::new(solved);
    if !field.is_finite() {
        return Err(Error::Numerical("non-finite solution after remap".into()));
    }
    Ok(StepOutcome { field, energy_iterations_max: 0, energy_unconverged: 0 })
}
