//! Chebyshev-Gauss nodes, barycentric Lagrange interpolation and
//! interpolatory quadrature on the reference interval `[0, 1]`.

use crate::densela::{solve_linear, DenseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which closed form generates the Gauss nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NodeRule {
    /// `xi_i = (1 - cos((2i+1) pi / 2n)) / 2`, symmetric about 1/2.
    #[default]
    Standard,
    /// `xi_i = (1 - cos((i + 1/2) pi / (n + 1))) / 2`, the form with an `n + 1`
    /// denominator. Not symmetric; kept for comparison runs.
    PaperVerbatim,
}

impl std::str::FromStr for NodeRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Self::Standard),
            "paper_verbatim" | "verbatim" => Ok(Self::PaperVerbatim),
            _ => Err(Error::Config(format!("unknown node rule `{s}`"))),
        }
    }
}

/// Gauss node positions in `(0, 1)`, strictly increasing.
pub fn gauss_nodes<T: Real>(n: usize, rule: NodeRule) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("node count must be at least 1".into()));
    }
    let half = T::lit(0.5);
    let pi = T::PI();
    let nn = T::from_usize_lossy(n);
    match rule {
        NodeRule::Standard => {
            // sin^2 form keeps relative accuracy near the edges; mirror for exact symmetry
            let mut x = vec![half; n];
            for i in 0..n / 2 {
                let i_f = T::from_usize_lossy(i);
                let s = ((i_f + i_f + T::one()) * pi / (nn * T::lit(4.0))).sin();
                x[i] = s * s;
                x[n - 1 - i] = T::one() - s * s;
            }
            Ok(x)
        }
        NodeRule::PaperVerbatim => Ok((0..n)
            .map(|i| {
                let theta = (T::from_usize_lossy(i) + half) / (nn + T::one()) * pi;
                let s = (theta * half).sin();
                s * s
            })
            .collect()),
    }
}

/// Barycentric weights `1 / prod_{m != j} (x_j - x_m)`.
///
/// Fails when two nodes coincide.
pub fn barycentric_weights<T: Real>(nodes: &[T]) -> Result<Vec<T>> {
    if nodes.is_empty() {
        return Err(Error::DegenerateBasis("empty node set".into()));
    }
    let mut w = Vec::with_capacity(nodes.len());
    for (j, &xj) in nodes.iter().enumerate() {
        let mut prod = T::one();
        for (m, &xm) in nodes.iter().enumerate() {
            if m != j {
                prod = prod * (xj - xm);
            }
        }
        if prod == T::zero() || !prod.is_finite() {
            return Err(Error::DegenerateBasis(format!("node {j} coincides with another node")));
        }
        w.push(prod.recip());
    }
    Ok(w)
}

/// Values `h_j(x)` of every cardinal polynomial at `x`.
pub fn cardinal_values<T: Real>(nodes: &[T], bary: &[T], x: T) -> Vec<T> {
    if let Some(k) = nodes.iter().position(|&n| n == x) {
        let mut e = vec![T::zero(); nodes.len()];
        e[k] = T::one();
        return e;
    }
    let terms: Vec<T> = nodes.iter().zip(bary).map(|(&n, &w)| w / (x - n)).collect();
    let denom: T = terms.iter().copied().sum();
    terms.into_iter().map(|t| t / denom).collect()
}

fn interp_nonnode<T: Real>(nodes: &[T], bary: &[T], values: &[T], x: T) -> T {
    let mut num = T::zero();
    let mut den = T::zero();
    for ((&n, &w), &v) in nodes.iter().zip(bary).zip(values) {
        let t = w / (x - n);
        num = num + t * v;
        den = den + t;
    }
    num / den
}

/// Evaluates the interpolant through `(nodes, values)` at `x` (second barycentric form).
pub fn barycentric_eval<T: Real>(nodes: &[T], bary: &[T], values: &[T], x: T) -> T {
    match nodes.iter().position(|&n| n == x) {
        Some(k) => values[k],
        None => interp_nonnode(nodes, bary, values, x),
    }
}

/// Derivative of the interpolant through `(nodes, values)` at `x`.
pub fn barycentric_deriv<T: Real>(nodes: &[T], bary: &[T], values: &[T], x: T) -> T {
    if let Some(i) = nodes.iter().position(|&n| n == x) {
        let mut d = T::zero();
        for j in 0..nodes.len() {
            if j != i {
                d = d + (bary[j] / bary[i]) * (values[j] - values[i]) / (nodes[i] - nodes[j]);
            }
        }
        return d;
    }
    let p = interp_nonnode(nodes, bary, values, x);
    let mut num = T::zero();
    let mut den = T::zero();
    for ((&n, &w), &v) in nodes.iter().zip(bary).zip(values) {
        let dx = x - n;
        let t = w / dx;
        num = num + t * (p - v) / dx;
        den = den + t;
    }
    num / den
}

fn check_pair<T: Real>(nodes: &[T], values: &[T]) -> Result<Vec<T>> {
    if nodes.len() != values.len() || nodes.is_empty() {
        return Err(Error::InvalidArgument(format!("{} nodes but {} values", nodes.len(), values.len())));
    }
    barycentric_weights(nodes)
}

/// One-shot interpolant evaluation; builds barycentric weights on the fly.
pub fn lagrange_eval<T: Real>(nodes: &[T], values: &[T], x: T) -> Result<T> {
    let bary = check_pair(nodes, values)?;
    Ok(barycentric_eval(nodes, &bary, values, x))
}

/// One-shot interpolant derivative.
pub fn lagrange_deriv<T: Real>(nodes: &[T], values: &[T], x: T) -> Result<T> {
    let bary = check_pair(nodes, values)?;
    Ok(barycentric_deriv(nodes, &bary, values, x))
}

/// Shifted Legendre polynomials `P_k(2x - 1)` for `k < n`.
fn shifted_legendre<T: Real>(n: usize, x: T) -> Vec<T> {
    let s = x + x - T::one();
    let mut p = Vec::with_capacity(n);
    if n > 0 {
        p.push(T::one());
    }
    if n > 1 {
        p.push(s);
    }
    for k in 2..n {
        let kf = T::from_usize_lossy(k);
        let next = ((kf + kf - T::one()) * s * p[k - 1] - (kf - T::one()) * p[k - 2]) / kf;
        p.push(next);
    }
    p
}

/// Interpolatory quadrature weights `w_j = int_0^1 h_j`.
///
/// Solves the moment system against shifted Legendre polynomials, whose
/// integrals over `[0, 1]` are `delta_k0`.
pub fn quad_weights<T: Real>(nodes: &[T]) -> Result<Vec<T>> {
    barycentric_weights(nodes)?;
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::DegenerateBasis("nodes must be strictly increasing".into()));
    }
    let n = nodes.len();
    let mut a = DenseMatrix::zeros(n, n);
    for (j, &x) in nodes.iter().enumerate() {
        for (k, p) in shifted_legendre(n, x).into_iter().enumerate() {
            a[(k, j)] = p;
        }
    }
    let mut rhs = vec![T::zero(); n];
    rhs[0] = T::one();
    solve_linear(&a, &rhs).map_err(|e| Error::DegenerateBasis(e.to_string()))
}

/// Per-direction node set with its barycentric and quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBasis<T> {
    nodes: Vec<T>,
    bary: Vec<T>,
    quad: Vec<T>,
    rule: NodeRule,
}

impl<T: Real> NodeBasis<T> {
    pub fn new(n: usize, rule: NodeRule) -> Result<Self> {
        let nodes = gauss_nodes(n, rule)?;
        let bary = barycentric_weights(&nodes)?;
        let quad = quad_weights(&nodes)?;
        Ok(Self { nodes, bary, quad, rule })
    }

    /// Basis for polynomial degree `p`, i.e. `p + 1` nodes.
    pub fn for_degree(p: usize, rule: NodeRule) -> Result<Self> {
        Self::new(p + 1, rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn bary_weights(&self) -> &[T] {
        &self.bary
    }

    pub fn quad_weights(&self) -> &[T] {
        &self.quad
    }

    pub fn rule(&self) -> NodeRule {
        self.rule
    }

    pub fn eval(&self, values: &[T], xi: T) -> T {
        barycentric_eval(&self.nodes, &self.bary, values, xi)
    }

    pub fn deriv(&self, values: &[T], xi: T) -> T {
        barycentric_deriv(&self.nodes, &self.bary, values, xi)
    }

    pub fn cardinals(&self, xi: T) -> Vec<T> {
        cardinal_values(&self.nodes, &self.bary, xi)
    }

    /// Quadrature of nodal values over the reference interval.
    pub fn integrate(&self, values: &[T]) -> T {
        self.quad.iter().zip(values).map(|(&w, &v)| w * v).sum()
    }

    /// Smallest gap between adjacent nodes.
    pub fn min_interior_gap(&self) -> Option<T> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(None, |m, g| Some(m.map_or(g, |m: T| m.min(g))))
    }

    /// Smallest gap from an edge node to its nearest reference boundary.
    pub fn min_edge_gap(&self) -> T {
        let first = self.nodes[0];
        let last = T::one() - self.nodes[self.nodes.len() - 1];
        first.min(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Fejer's first rule on [0,1]: closed-form weights of interpolatory
    /// quadrature at Chebyshev-Gauss nodes.
    fn fejer_weights(n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let theta = (2 * k + 1) as f64 * PI / (2 * n) as f64;
                let s: f64 = (1..=n / 2).map(|j| (2.0 * j as f64 * theta).cos() / (4.0 * (j * j) as f64 - 1.0)).sum();
                (1.0 - 2.0 * s) / n as f64
            })
            .collect()
    }

    #[test]
    fn node_examples() {
        assert_eq!(gauss_nodes::<f64>(1, NodeRule::Standard).unwrap(), vec![0.5]);
        let n2: Vec<f64> = gauss_nodes(2, NodeRule::Standard).unwrap();
        assert_abs_diff_eq!(n2[0], 0.5 * (1.0 - (PI / 4.0).cos()), epsilon = 1e-15);
        assert_abs_diff_eq!(n2[1], 0.5 * (1.0 - (3.0 * PI / 4.0).cos()), epsilon = 1e-15);
        assert_abs_diff_eq!(n2[0], 0.146447, epsilon = 1e-6);
        let v2: Vec<f64> = gauss_nodes(2, NodeRule::PaperVerbatim).unwrap();
        assert_abs_diff_eq!(v2[0], 0.066987, epsilon = 1e-6);
        assert_abs_diff_eq!(v2[1], 0.5, epsilon = 1e-15);
        assert!(gauss_nodes::<f64>(0, NodeRule::Standard).is_err());
    }

    #[test]
    fn weights_examples() {
        assert_eq!(quad_weights(&[0.5f64]).unwrap(), vec![1.0]);
        let n2: Vec<f64> = gauss_nodes(2, NodeRule::Standard).unwrap();
        let w = quad_weights(&n2).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-15);
        assert!(matches!(quad_weights(&[0.2, 0.2, 0.6]), Err(Error::DegenerateBasis(_))));
    }

    #[test]
    fn weights_match_fejer_closed_form() {
        for n in 1..=26 {
            let b = NodeBasis::<f64>::new(n, NodeRule::Standard).unwrap();
            for (a, e) in b.quad_weights().iter().zip(fejer_weights(n)) {
                assert_abs_diff_eq!(*a, e, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn basis_invariants() {
        for rule in [NodeRule::Standard, NodeRule::PaperVerbatim] {
            for n in 1..=26 {
                let b = NodeBasis::<f64>::new(n, rule).unwrap();
                let x = b.nodes();
                assert!(x.windows(2).all(|w| w[0] < w[1]));
                assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
                assert_abs_diff_eq!(b.quad_weights().iter().sum::<f64>(), 1.0, epsilon = 1e-13);
                for k in 0..n {
                    let moment = b.integrate(&x.iter().map(|v| v.powi(k as i32)).collect::<Vec<_>>());
                    let exact = 1.0 / (k + 1) as f64;
                    assert!((moment - exact).abs() <= 1e-12 * exact, "rule {rule:?} n {n} k {k}");
                }
                if rule == NodeRule::Standard {
                    let w = b.quad_weights();
                    for i in 0..n {
                        assert_abs_diff_eq!(x[i] + x[n - 1 - i], 1.0, epsilon = 1e-14);
                        assert_abs_diff_eq!(w[i], w[n - 1 - i], epsilon = 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn eval_examples() {
        let b = NodeBasis::<f64>::new(5, NodeRule::Standard).unwrap();
        let x = b.nodes().to_vec();
        for k in 0..5 {
            let mut e = vec![0.0; 5];
            e[k] = 1.0;
            for m in 0..5 {
                assert_eq!(lagrange_eval(&x, &e, x[m]).unwrap(), if m == k { 1.0 } else { 0.0 });
            }
        }
        assert_abs_diff_eq!(lagrange_eval(&x, &x, 0.3).unwrap(), 0.3, epsilon = 1e-15);
        let b3 = NodeBasis::<f64>::new(3, NodeRule::Standard).unwrap();
        let sq: Vec<f64> = b3.nodes().iter().map(|v| v * v).collect();
        assert_abs_diff_eq!(lagrange_eval(b3.nodes(), &sq, 0.3).unwrap(), 0.09, epsilon = 1e-15);
        assert!(lagrange_eval(&x, &x[..3], 0.3).is_err());
    }

    #[test]
    fn deriv_examples() {
        let b = NodeBasis::<f64>::new(4, NodeRule::Standard).unwrap();
        let x = b.nodes().to_vec();
        assert_abs_diff_eq!(lagrange_deriv(&x, &[2.5; 4], 0.37).unwrap(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(lagrange_deriv(&x, &x, 0.37).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(lagrange_deriv(&x, &x, x[2]).unwrap(), 1.0, epsilon = 1e-13);
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert_abs_diff_eq!(lagrange_deriv(&x, &sq, 0.5).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(lagrange_deriv(&x, &sq, x[1]).unwrap(), 2.0 * x[1], epsilon = 1e-13);
    }

    #[test]
    fn edge_and_interior_gaps() {
        let b = NodeBasis::<f64>::new(7, NodeRule::Standard).unwrap();
        assert_abs_diff_eq!(b.min_edge_gap(), 0.5 * (1.0 - (PI / 14.0).cos()), epsilon = 1e-15);
        assert!(b.min_interior_gap().unwrap() > b.min_edge_gap());
        assert!(NodeBasis::<f64>::new(1, NodeRule::Standard).unwrap().min_interior_gap().is_none());
    }

    #[test]
    fn f32_basis() {
        let b = NodeBasis::<f32>::new(6, NodeRule::Standard).unwrap();
        assert!((b.quad_weights().iter().sum::<f32>() - 1.0).abs() < 1e-6);
        assert!((b.eval(b.nodes(), 0.42) - 0.42).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn polynomial_reproduction(n in 1usize..=14, coeffs in prop::collection::vec(-3.0f64..3.0, 14), xs in prop::collection::vec(-0.1f64..1.1, 100)) {
            let b = NodeBasis::<f64>::new(n, NodeRule::Standard).unwrap();
            let c = &coeffs[..n];
            let p = |x: f64| c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
            let vals: Vec<f64> = b.nodes().iter().map(|&x| p(x)).collect();
            let scale = xs.iter().map(|&x| p(x).abs()).chain(vals.iter().map(|v| v.abs())).fold(1e-300, f64::max);
            for &x in &xs {
                prop_assert!((b.eval(&vals, x) - p(x)).abs() <= 1e-11 * scale);
            }
        }
    }
}
