//! Uniform 1D/2D subdomain decomposition and nodal fields.

use crate::error::{Error, Result};
use crate::scalar::{Point, Real};
use crate::spectral::NodeBasis;

/// Boundary treatment along one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryCondition {
    #[default]
    Periodic,
    Dirichlet,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Self::Periodic),
            "dirichlet" => Ok(Self::Dirichlet),
            _ => Err(Error::Config(format!("unknown boundary condition `{s}`"))),
        }
    }
}

/// One tiled direction of the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
    pub count: usize,
    pub bc: BoundaryCondition,
    pub width: T,
}

impl<T: Real> Axis<T> {
    pub fn new(lo: T, hi: T, count: usize, bc: BoundaryCondition) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("subdomain count must be at least 1".into()));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid bounds [{lo}, {hi}]")));
        }
        let width = (hi - lo) / T::from_usize_lossy(count);
        Ok(Self { lo, hi, count, bc, width })
    }

    pub fn length(&self) -> T {
        self.hi - self.lo
    }

    /// Bounds of cell `i` along this axis.
    pub fn cell_bounds(&self, i: usize) -> (T, T) {
        let lo = self.lo + self.width * T::from_usize_lossy(i);
        let hi = if i + 1 == self.count { self.hi } else { self.lo + self.width * T::from_usize_lossy(i + 1) };
        (lo, hi)
    }

    /// Neighbour of cell `i` on the low side; `None` marks a ghost (Dirichlet) side.
    pub fn lower(&self, i: usize) -> Option<usize> {
        match (i, self.bc) {
            (0, BoundaryCondition::Periodic) => Some(self.count - 1),
            (0, BoundaryCondition::Dirichlet) => None,
            _ => Some(i - 1),
        }
    }

    pub fn upper(&self, i: usize) -> Option<usize> {
        match (i + 1 == self.count, self.bc) {
            (true, BoundaryCondition::Periodic) => Some(0),
            (true, BoundaryCondition::Dirichlet) => None,
            _ => Some(i + 1),
        }
    }

    /// Cell containing `x`; periodic axes wrap, others clamp to the end cells.
    pub fn locate(&self, x: T) -> usize {
        let mut s = (x - self.lo) / self.width;
        if self.bc == BoundaryCondition::Periodic {
            let n = T::from_usize_lossy(self.count);
            s = s - (s / n).floor() * n;
        }
        let i = s.floor().to_isize().unwrap_or(0);
        i.clamp(0, self.count as isize - 1) as usize
    }

    /// Maps `x` into `[lo, hi)` on a periodic axis; identity otherwise.
    pub fn wrap(&self, x: T) -> T {
        if self.bc != BoundaryCondition::Periodic {
            return x;
        }
        let l = self.length();
        let w = x - ((x - self.lo) / l).floor() * l;
        if w >= self.hi {
            w - l
        } else {
            w
        }
    }

    pub fn to_physical(&self, i: usize, xi: T) -> T {
        self.cell_bounds(i).0 + self.width * xi
    }

    pub fn to_reference(&self, i: usize, x: T) -> T {
        (x - self.cell_bounds(i).0) / self.width
    }
}

/// Uniform axis-aligned decomposition into `count` (1D) or `counts[0] x counts[1]` (2D) subdomains.
///
/// 2D subdomain `(i, j)` (with `i` along x) has linear index `i * counts[1] + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    axes: Vec<Axis<T>>,
}

impl<T: Real> Mesh<T> {
    pub fn new(axes: Vec<Axis<T>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidArgument(format!("mesh dimension {} unsupported", axes.len())));
        }
        Ok(Self { axes })
    }

    pub fn uniform_1d(lo: T, hi: T, count: usize, bc: BoundaryCondition) -> Result<Self> {
        Self::new(vec![Axis::new(lo, hi, count, bc)?])
    }

    pub fn uniform_2d(
        x: (T, T),
        y: (T, T),
        counts: (usize, usize),
        bc: (BoundaryCondition, BoundaryCondition),
    ) -> Result<Self> {
        Self::new(vec![Axis::new(x.0, x.1, counts.0, bc.0)?, Axis::new(y.0, y.1, counts.1, bc.1)?])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, d: usize) -> &Axis<T> {
        &self.axes[d]
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn subdomain_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Per-direction cell indices of a linear subdomain index.
    pub fn cell(&self, k: usize) -> [usize; 2] {
        match self.dim() {
            1 => [k, 0],
            _ => [k / self.axes[1].count, k % self.axes[1].count],
        }
    }

    pub fn linear_index(&self, cell: [usize; 2]) -> usize {
        match self.dim() {
            1 => cell[0],
            _ => cell[0] * self.axes[1].count + cell[1],
        }
    }

    /// Per-direction `(lo, hi)` of subdomain `k`.
    pub fn bounds(&self, k: usize) -> Vec<(T, T)> {
        let c = self.cell(k);
        self.axes.iter().enumerate().map(|(d, a)| a.cell_bounds(c[d])).collect()
    }

    /// Affine Jacobian determinant (product of widths).
    pub fn jacobian(&self) -> T {
        self.axes.iter().map(|a| a.width).fold(T::one(), |p, w| p * w)
    }

    /// Neighbour across direction `d` on the low (`upper = false`) or high side.
    pub fn neighbor(&self, k: usize, d: usize, upper: bool) -> Option<usize> {
        let mut c = self.cell(k);
        let a = &self.axes[d];
        c[d] = if upper { a.upper(c[d])? } else { a.lower(c[d])? };
        Some(self.linear_index(c))
    }

    /// Physical node coordinates of subdomain `k`; in 2D the tensor grid in
    /// `(xi index, eta index)` row-major order.
    pub fn physical_nodes(&self, basis: &NodeBasis<T>, k: usize) -> Vec<Point<T>> {
        let c = self.cell(k);
        let xs: Vec<T> = basis.nodes().iter().map(|&xi| self.axes[0].to_physical(c[0], xi)).collect();
        if self.dim() == 1 {
            return xs.into_iter().map(|x| [x, T::zero()]).collect();
        }
        let ys: Vec<T> = basis.nodes().iter().map(|&eta| self.axes[1].to_physical(c[1], eta)).collect();
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| [x, y])).collect()
    }

    pub fn nodes_per_subdomain(&self, basis: &NodeBasis<T>) -> usize {
        basis.len().pow(self.dim() as u32)
    }
}

/// Nodal values per subdomain (`N` in 1D, `N*N` in 2D).
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub values: Vec<Vec<T>>,
}

impl<T: Real> Field<T> {
    pub fn new(values: Vec<Vec<T>>) -> Self {
        Self { values }
    }

    pub fn subdomain(&self, k: usize) -> &[T] {
        &self.values[k]
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest nodal difference between two fields of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// Samples `f` at every physical node.
pub fn init_field<T: Real, F>(mesh: &Mesh<T>, basis: &NodeBasis<T>, f: F) -> Result<Field<T>>
where
    F: Fn(Point<T>) -> T,
{
    let mut values = Vec::with_capacity(mesh.subdomain_count());
    for k in 0..mesh.subdomain_count() {
        let nodes = mesh.physical_nodes(basis, k);
        let mut v = Vec::with_capacity(nodes.len());
        for p in nodes {
            let fx = f(p);
            if !fx.is_finite() {
                return Err(Error::Initialization(format!("({}, {})", p[0], p[1])));
            }
            v.push(fx);
        }
        values.push(v);
    }
    Ok(Field::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::NodeRule;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn build_examples() {
        let m = Mesh::uniform_1d(0.0, 1.0, 4, BoundaryCondition::Periodic).unwrap();
        assert_eq!(m.axis(0).width, 0.25);
        assert_eq!(m.neighbor(0, 0, false), Some(3));
        assert_eq!(m.neighbor(3, 0, true), Some(0));
        let d = Mesh::uniform_1d(0.0, 1.0, 4, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(d.neighbor(0, 0, false), None);
        assert_eq!(d.neighbor(3, 0, true), None);
        let m2 = Mesh::uniform_2d(
            (0.0, 1.0),
            (0.0, 1.0),
            (4, 4),
            (BoundaryCondition::Periodic, BoundaryCondition::Periodic),
        )
        .unwrap();
        let k = m2.linear_index([2, 3]);
        assert_eq!(m2.bounds(k), vec![(0.5, 0.75), (0.75, 1.0)]);
        assert_eq!(m2.cell(k), [2, 3]);
        assert_abs_diff_eq!(m2.jacobian(), 1.0 / 16.0);
    }

    #[test]
    fn build_errors() {
        assert!(Mesh::uniform_1d(0.0, 1.0, 0, BoundaryCondition::Periodic).is_err());
        assert!(Mesh::uniform_1d(1.0, 1.0, 2, BoundaryCondition::Periodic).is_err());
        assert!(Mesh::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn tiling_and_round_trip() {
        let m = Mesh::uniform_1d(0.0, 2.0 * PI, 7, BoundaryCondition::Periodic).unwrap();
        let a = m.axis(0);
        let total: f64 = (0..7)
            .map(|i| {
                let (l, h) = a.cell_bounds(i);
                h - l
            })
            .sum();
        assert_abs_diff_eq!(total, 2.0 * PI, epsilon = 1e-13);
        for i in 0..7 {
            assert_abs_diff_eq!(
                a.cell_bounds(i).1,
                a.cell_bounds((i + 1) % 7).0 + if i == 6 { 2.0 * PI } else { 0.0 },
                epsilon = 1e-14
            );
            for xi in [0.0, 0.13, 0.5, 0.999] {
                assert_abs_diff_eq!(a.to_reference(i, a.to_physical(i, xi)), xi, epsilon = 1e-14);
            }
            assert_eq!(m.neighbor(m.neighbor(i, 0, true).unwrap(), 0, false), Some(i));
        }
    }

    #[test]
    fn physical_node_examples() {
        let b = NodeBasis::<f64>::new(1, NodeRule::Standard).unwrap();
        let m = Mesh::uniform_1d(0.0, 1.0, 1, BoundaryCondition::Periodic).unwrap();
        assert_eq!(m.physical_nodes(&b, 0), vec![[0.5, 0.0]]);
        let m = Mesh::uniform_1d(0.0, 2.0 * PI, 4, BoundaryCondition::Periodic).unwrap();
        assert_abs_diff_eq!(m.physical_nodes(&b, 0)[0][0], PI / 4.0, epsilon = 1e-15);
        let m2 = Mesh::uniform_2d(
            (0.0, 1.0),
            (0.0, 1.0),
            (4, 4),
            (BoundaryCondition::Periodic, BoundaryCondition::Periodic),
        )
        .unwrap();
        assert_eq!(m2.physical_nodes(&b, 0), vec![[0.125, 0.125]]);
        let b3 = NodeBasis::<f64>::new(3, NodeRule::Standard).unwrap();
        let p = m2.physical_nodes(&b3, m2.linear_index([1, 2]));
        assert_eq!(p.len(), 9);
        assert_abs_diff_eq!(p[3 + 2][0], 0.25 + 0.25 * b3.nodes()[1]);
        assert_abs_diff_eq!(p[3 + 2][1], 0.5 + 0.25 * b3.nodes()[2]);
    }

    #[test]
    fn init_examples() {
        let b = NodeBasis::<f64>::new(1, NodeRule::Standard).unwrap();
        let m = Mesh::uniform_1d(0.0, 1.0, 2, BoundaryCondition::Periodic).unwrap();
        let f = init_field(&m, &b, |p| (2.0 * PI * p[0]).sin()).unwrap();
        assert_abs_diff_eq!(f.values[0][0], 1.0, epsilon = 1e-15);
        let c = init_field(&m, &b, |_| 3.5).unwrap();
        assert!(c.values.iter().flatten().all(|&v| v == 3.5));
        let m2 = Mesh::uniform_2d(
            (0.0, 1.0),
            (0.0, 1.0),
            (2, 2),
            (BoundaryCondition::Periodic, BoundaryCondition::Periodic),
        )
        .unwrap();
        let f2 = init_field(&m2, &b, |p| (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin()).unwrap();
        assert_abs_diff_eq!(f2.values[0][0], 1.0, epsilon = 1e-15);
        assert!(matches!(init_field(&m, &b, |p| 1.0 / (p[0] - 0.25)), Err(Error::Initialization(_))));
    }
}
