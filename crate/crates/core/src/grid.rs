//! Periodic structured grids, tensor fields sampled on them, derivatives,
//! Levi-Civita machinery of a metric field, quadrature and the example catalog.
//!
//! Index conventions for flattened components (`d = m + 1`):
//!
//! - vectors and covectors: `[i]`
//! - `(0,2)` and `(1,1)` tensors: `[i*d + j]`; for `(1,1)` the operator acts as
//!   `v ↦ M[i][j] vʲ`
//! - Christoffel symbols `Γ^i_{jk}`: `[(i*d + j)*d + k]`
//! - Riemann `R^i_{jkl}`: `[((i*d + j)*d + k)*d + l]`, with
//!   `R(X,Y)Z = R^i_{jkl} Zʲ Xᵏ Yˡ = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z`.
//!
//! The shape operator of the leaves is `Ā(u) = −(∇̄_u N)^⊤` and is stored in a
//! per-node `a`-orthonormal frame of the leaf tangent space.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::{cos, exp, powf, sin, sqrt, tan};
use crate::linalg::{dot, Matrix};
use crate::randers::{self, RandersPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    sizes: Vec<usize>,
    periods: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(sizes: Vec<usize>, periods: Vec<f64>) -> Result<Self> {
        let d = sizes.len();
        if !(2..=3).contains(&d) {
            return Err(Error::Validation(format!("grid dimension {d} not in 2..=3")));
        }
        if periods.len() != d {
            return Err(Error::Shape {
                expected: d,
                found: periods.len(),
            });
        }
        if let Some(n) = sizes.iter().find(|&&n| n < 8) {
            return Err(Error::Validation(format!("grid size {n} is below 8")));
        }
        if periods.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Validation("periods must be positive".into()));
        }
        Ok(PeriodicGrid { sizes, periods })
    }

    pub fn uniform(dim: usize, n: usize, period: f64) -> Result<Self> {
        PeriodicGrid::new(vec![n; dim], vec![period; dim])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.sizes[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Distance between consecutive nodes along `axis` in flat index space.
    pub fn stride(&self, axis: usize) -> usize {
        self.sizes[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut node: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim()).rev() {
            out[a] = node % self.sizes[a];
            node /= self.sizes[a];
        }
        out
    }

    pub fn node(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&i, &n)| acc * n + (i % n))
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        let idx = self.multi_index(node);
        (0..self.dim())
            .map(|a| idx[a] as f64 * self.spacing(a))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Spectral,
    Central4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Spectral => "spectral",
            Scheme::Central4 => "central4",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "spectral" => Some(Scheme::Spectral),
            "central4" => Some(Scheme::Central4),
            _ => None,
        }
    }
}

/// Values of a tensor field at every node, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: PeriodicGrid,
    contra: usize,
    co: usize,
    values: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: &PeriodicGrid, contra: usize, co: usize) -> Self {
        let nc = grid.dim().pow((contra + co) as u32);
        TensorField {
            grid: grid.clone(),
            contra,
            co,
            values: vec![0.0; nc * grid.len()],
        }
    }

    /// Fills node by node; `f` receives the node index and writes the components.
    pub fn from_nodes(
        grid: &PeriodicGrid,
        contra: usize,
        co: usize,
        mut f: impl FnMut(usize, &mut [f64]),
    ) -> Self {
        let mut t = TensorField::zeros(grid, contra, co);
        let nc = t.ncomp();
        for (node, chunk) in t.values.chunks_mut(nc).enumerate() {
            f(node, chunk);
        }
        t
    }

    /// Samples `f(x)` at node coordinates.
    pub fn from_coords(
        grid: &PeriodicGrid,
        contra: usize,
        co: usize,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Self {
        TensorField::from_nodes(grid, contra, co, |node, out| f(&grid.coords(node), out))
    }

    pub fn scalar(grid: &PeriodicGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        TensorField {
            grid: grid.clone(),
            contra: 0,
            co: 0,
            values,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.contra, self.co)
    }

    pub fn ncomp(&self) -> usize {
        self.grid.dim().pow((self.contra + self.co) as u32)
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.values[node * nc..(node + 1) * nc]
    }

    pub fn at_mut(&mut self, node: usize) -> &mut [f64] {
        let nc = self.ncomp();
        &mut self.values[node * nc..(node + 1) * nc]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component `comp` at every node.
    pub fn component(&self, comp: usize) -> Vec<f64> {
        let nc = self.ncomp();
        self.values.iter().skip(comp).step_by(nc).copied().collect()
    }

    /// `d×d` matrix view of a rank-two field at `node`.
    pub fn matrix_at(&self, node: usize) -> Matrix {
        let d = self.grid.dim();
        Matrix::from_row_slice(d, d, self.at(node))
    }

    /// Index of the first node with a non-finite component.
    pub fn first_non_finite(&self) -> Option<usize> {
        let nc = self.ncomp();
        self.values
            .chunks(nc)
            .position(|c| c.iter().any(|x| !x.is_finite()))
    }
}

/// Circulant stencil `f'(x_j) ≈ Σ w_k f(x_{j+k})` along one axis.
fn stencil(n: usize, period: f64, scheme: Scheme) -> Vec<(isize, f64)> {
    match scheme {
        Scheme::Spectral => {
            let h = 2.0 * PI / n as f64;
            let scale = 2.0 * PI / period;
            (1..n)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let half = k as f64 * h / 2.0;
                    let core = if n % 2 == 0 {
                        1.0 / tan(half)
                    } else {
                        1.0 / sin(half)
                    };
                    (k as isize, -0.5 * sign * core * scale)
                })
                .collect()
        }
        Scheme::Central4 => {
            let h = period / n as f64;
            vec![
                (-2, 1.0 / (12.0 * h)),
                (-1, -8.0 / (12.0 * h)),
                (1, 8.0 / (12.0 * h)),
                (2, -1.0 / (12.0 * h)),
            ]
        }
    }
}

/// Componentwise partial derivative along `axis`.
pub fn derivative(f: &TensorField, axis: usize, scheme: Scheme) -> TensorField {
    let g = f.grid();
    assert!(axis < g.dim(), "axis out of range");
    let n = g.sizes()[axis];
    let st = stencil(n, g.periods()[axis], scheme);
    let stride = g.stride(axis);
    let nc = f.ncomp();
    let mut out = TensorField::zeros(g, f.contra, f.co);
    for node in 0..g.len() {
        let pos = (node / stride) % n;
        let base = node - pos * stride;
        let dst = &mut out.values[node * nc..(node + 1) * nc];
        for &(k, w) in &st {
            let q = (pos as isize + k).rem_euclid(n as isize) as usize;
            let src = &f.values[(base + q * stride) * nc..(base + q * stride + 1) * nc];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    out
}

/// All partial derivatives, appended as a trailing covariant index.
pub fn gradient(f: &TensorField, scheme: Scheme) -> TensorField {
    let g = f.grid();
    let d = g.dim();
    let parts: Vec<TensorField> = (0..d).map(|a| derivative(f, a, scheme)).collect();
    let nc = f.ncomp();
    TensorField::from_nodes(g, f.contra, f.co + 1, |node, out| {
        for (a, p) in parts.iter().enumerate() {
            let v = p.at(node);
            for c in 0..nc {
                out[c * d + a] = v[c];
            }
        }
    })
}

/// Christoffel symbols `Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})`.
///
/// Nodes where `active` is false are left at zero; elsewhere the metric must be
/// positive definite.
pub fn christoffel(metric: &TensorField, scheme: Scheme, active: &[bool]) -> Result<TensorField> {
    let g = metric.grid();
    let d = g.dim();
    let dg = gradient(metric, scheme);
    let mut out = TensorField::zeros(g, 1, 2);
    for node in 0..g.len() {
        if !active[node] {
            continue;
        }
        let gm = metric.matrix_at(node);
        let inv = gm
            .cholesky()
            .and_then(|_| gm.inverse())
            .ok_or_else(|| Error::Numeric {
                node,
                what: "metric is not positive definite".into(),
            })?;
        let dgv = dg.at(node);
        let dgl = |l: usize, k: usize, j: usize| dgv[(l * d + k) * d + j];
        let o = out.at_mut(node);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += inv[(i, l)] * (dgl(l, k, j) + dgl(l, j, k) - dgl(j, k, l));
                    }
                    o[(i * d + j) * d + k] = 0.5 * s;
                }
            }
        }
    }
    Ok(out)
}

/// `(∇X)^i_j = ∂_j Xⁱ + Γ^i_{jk} Xᵏ`, a `(1,1)` field with `(∇_v X) = M v`.
pub fn covariant_derivative_vector(x: &TensorField, gamma: &TensorField, scheme: Scheme) -> TensorField {
    let g = x.grid();
    let d = g.dim();
    let dx = gradient(x, scheme);
    TensorField::from_nodes(g, 1, 1, |node, out| {
        let xv = x.at(node);
        let dv = dx.at(node);
        let gv = gamma.at(node);
        for i in 0..d {
            for j in 0..d {
                let mut s = dv[i * d + j];
                for k in 0..d {
                    s += gv[(i * d + j) * d + k] * xv[k];
                }
                out[i * d + j] = s;
            }
        }
    })
}

/// `∇_V S` for a `(1,1)` field `S`.
pub fn covariant_derivative_11_along(
    s: &TensorField,
    gamma: &TensorField,
    v: &TensorField,
    scheme: Scheme,
) -> TensorField {
    let g = s.grid();
    let d = g.dim();
    let ds = gradient(s, scheme);
    TensorField::from_nodes(g, 1, 1, |node, out| {
        let sv = s.at(node);
        let dv = ds.at(node);
        let gv = gamma.at(node);
        let vv = v.at(node);
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    let mut t = dv[(i * d + j) * d + k];
                    for p in 0..d {
                        t += gv[(i * d + k) * d + p] * sv[p * d + j];
                        t -= gv[(p * d + k) * d + j] * sv[i * d + p];
                    }
                    acc += vv[k] * t;
                }
                out[i * d + j] = acc;
            }
        }
    })
}

/// Riemann tensor `R^i_{jkl} = ∂_kΓ^i_{lj} − ∂_lΓ^i_{kj} + Γ^i_{kp}Γ^p_{lj} − Γ^i_{lp}Γ^p_{kj}`.
pub fn riemann(gamma: &TensorField, scheme: Scheme) -> TensorField {
    let g = gamma.grid();
    let d = g.dim();
    let dg = gradient(gamma, scheme);
    TensorField::from_nodes(g, 1, 3, |node, out| {
        let gv = gamma.at(node);
        let dv = dg.at(node);
        let gam = |i: usize, j: usize, k: usize| gv[(i * d + j) * d + k];
        let dgam = |i: usize, j: usize, k: usize, a: usize| dv[((i * d + j) * d + k) * d + a];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut r = dgam(i, l, j, k) - dgam(i, k, j, l);
                        for p in 0..d {
                            r += gam(i, k, p) * gam(p, l, j) - gam(i, l, p) * gam(p, k, j);
                        }
                        out[((i * d + j) * d + k) * d + l] = r;
                    }
                }
            }
        }
    })
}

/// How a ball around a singular point looks in the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Excision {
    /// Euclidean ball in chart coordinates (periodic distance).
    Ball { center: Vec<f64>, radius: f64 },
    /// Nodes whose periodic distance to `center` along `axis` is below
    /// `radius`. On a latitude chart this is the geodesic ball around a pole.
    Band { axis: usize, center: f64, radius: f64 },
}

impl Excision {
    fn contains(&self, grid: &PeriodicGrid, x: &[f64]) -> bool {
        let pdist = |axis: usize, a: f64, b: f64| {
            let l = grid.periods()[axis];
            let t = crate::float::rem_euclid(a - b, l);
            t.min(l - t)
        };
        match self {
            Excision::Ball { center, radius } => {
                let s: f64 = (0..grid.dim())
                    .map(|a| {
                        let t = pdist(a, x[a], center[a]);
                        t * t
                    })
                    .sum();
                sqrt(s) < *radius
            }
            Excision::Band {
                axis,
                center,
                radius,
            } => pdist(*axis, x[*axis], *center) < *radius,
        }
    }
}

/// Grid + metric `a` + 1-form `β` + unit normal `N` of the foliation.
#[derive(Debug, Clone)]
pub struct FoliatedRandersManifold {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub grid: PeriodicGrid,
    pub a: TensorField,
    pub beta: TensorField,
    pub big_n: TensorField,
    pub excision: Vec<Excision>,
    active: Vec<bool>,
}

impl FoliatedRandersManifold {
    /// Validates every non-excised node.
    pub fn new(
        name: &str,
        params: BTreeMap<String, f64>,
        a: TensorField,
        beta: TensorField,
        big_n: TensorField,
        excision: Vec<Excision>,
    ) -> Result<Self> {
        let grid = a.grid().clone();
        if a.valence() != (0, 2) || beta.valence() != (0, 1) || big_n.valence() != (1, 0) {
            return Err(Error::Validation("field valences must be a:(0,2), β:(0,1), N:(1,0)".into()));
        }
        if beta.grid() != &grid || big_n.grid() != &grid {
            return Err(Error::Validation("fields live on different grids".into()));
        }
        let active: Vec<bool> = (0..grid.len())
            .map(|node| {
                let x = grid.coords(node);
                !excision.iter().any(|e| e.contains(&grid, &x))
            })
            .collect();
        let m = FoliatedRandersManifold {
            name: name.to_string(),
            params,
            grid,
            a,
            beta,
            big_n,
            excision,
            active,
        };
        for node in 0..m.grid.len() {
            if !m.active[node] {
                continue;
            }
            let p = m.point(node).map_err(|e| Error::Numeric {
                node,
                what: e.to_string(),
            })?;
            let len = p.alpha(m.big_n.at(node));
            if (len - 1.0).abs() > 1e-10 {
                return Err(Error::Numeric {
                    node,
                    what: format!("‖N‖_α = {len}"),
                });
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Leaf dimension `m`.
    pub fn leaf_dim(&self) -> usize {
        self.grid.dim() - 1
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_excised(&self) -> bool {
        !self.excision.is_empty()
    }

    pub fn point(&self, node: usize) -> Result<RandersPoint> {
        RandersPoint::new(self.a.matrix_at(node), self.beta.at(node).to_vec())
    }

    pub fn normal_data(&self, node: usize) -> Result<(RandersPoint, randers::NormalData)> {
        let p = self.point(node)?;
        let nd = randers::f_normal(&p, self.big_n.at(node))?;
        Ok((p, nd))
    }

    pub fn param(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or(f64::NAN)
    }
}

/// `a`-orthonormal basis of `N^⊥` (columns of a `d×m` matrix).
///
/// Coordinate vectors are projected off `N` and orthonormalised in axis order,
/// skipping the axis most aligned with `N`.
pub fn leaf_frame(a: &Matrix, big_n: &[f64]) -> Matrix {
    let d = a.rows();
    let nf = a.mul_vec(big_n);
    let skip = (0..d)
        .max_by(|&i, &j| {
            let si = nf[i].abs() / sqrt(a[(i, i)]);
            let sj = nf[j].abs() / sqrt(a[(j, j)]);
            si.partial_cmp(&sj).unwrap_or(core::cmp::Ordering::Equal)
        })
        .unwrap_or(d - 1);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    for axis in (0..d).filter(|&k| k != skip) {
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        let proj = dot(&nf, &v);
        for i in 0..d {
            v[i] -= proj * big_n[i];
        }
        for c in &cols {
            let cv = a.bilinear(c, &v);
            for i in 0..d {
                v[i] -= cv * c[i];
            }
        }
        let len = sqrt(a.bilinear(&v, &v));
        for x in v.iter_mut() {
            *x /= len;
        }
        cols.push(v);
    }
    Matrix::from_fn(d, d - 1, |i, j| cols[j][i])
}

/// Frame matrix `Eᵀ a T E` of a coordinate `(1,1)` operator `T` restricted and
/// projected to the leaf (valid for an `a`-orthonormal frame `E`).
pub fn to_frame(a: &Matrix, frame: &Matrix, op: &Matrix) -> Matrix {
    let ae = a * frame;
    &ae.transpose() * &(op * frame)
}

/// Frame coefficients `⟨E_a, X⟩` of a vector.
pub fn vec_to_frame(a: &Matrix, frame: &Matrix, x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    (0..frame.cols()).map(|c| dot(&frame.column(c), &ax)).collect()
}

/// `Σ_c coef_c E_c`
pub fn vec_from_frame(frame: &Matrix, coef: &[f64]) -> Vec<f64> {
    frame.mul_vec(coef)
}

/// Extrinsic quantities of the foliation for the metric `a`.
#[derive(Debug, Clone)]
pub struct BarGeometry {
    pub scheme: Scheme,
    /// `Γ̄`
    pub gamma: TensorField,
    /// `∇̄N`
    pub grad_n: TensorField,
    /// `Ā` as a coordinate operator `−P(∇̄N)P`, `P = I − N⊗N♭`.
    pub abar_coord: TensorField,
    /// `Ā` in the leaf frame, per node.
    pub abar: Vec<Matrix>,
    /// `Z̄ = ∇̄_N N`
    pub zbar: TensorField,
    pub frames: Vec<Matrix>,
}

impl BarGeometry {
    /// Coordinate deformation tensor `Def_X = ½(∇̄X + (∇̄X)ᵗ)` of a vector field,
    /// with `ᵗ` the `a`-adjoint.
    pub fn deformation(&self, m: &FoliatedRandersManifold, x: &TensorField) -> TensorField {
        let gx = covariant_derivative_vector(x, &self.gamma, self.scheme);
        let d = m.dim();
        TensorField::from_nodes(&m.grid, 1, 1, |node, out| {
            if !m.active()[node] {
                return;
            }
            let a = m.a.matrix_at(node);
            let ai = a.inverse().expect("SPD");
            let mx = gx.matrix_at(node);
            let adj = &(&ai * &mx.transpose()) * &a;
            let def = (&mx + &adj).scale(0.5);
            out.copy_from_slice(&def.into_vec()[..d * d]);
        })
    }
}

fn tangential_projector(a: &Matrix, big_n: &[f64]) -> Matrix {
    let d = a.rows();
    let nf = a.mul_vec(big_n);
    Matrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - big_n[i] * nf[j])
}

/// `Ā`, `Z̄` and the frames.
pub fn extrinsic_bar(m: &FoliatedRandersManifold, scheme: Scheme) -> Result<BarGeometry> {
    let gamma = christoffel(&m.a, scheme, m.active())?;
    let grad_n = covariant_derivative_vector(&m.big_n, &gamma, scheme);
    let d = m.dim();
    let n_nodes = m.grid.len();
    let mut frames = Vec::with_capacity(n_nodes);
    let mut abar = Vec::with_capacity(n_nodes);
    let mut abar_coord = TensorField::zeros(&m.grid, 1, 1);
    let mut zbar = TensorField::zeros(&m.grid, 1, 0);
    for node in 0..n_nodes {
        let a = m.a.matrix_at(node);
        let nv = m.big_n.at(node);
        if !m.active()[node] {
            frames.push(Matrix::zeros(d, d - 1));
            abar.push(Matrix::zeros(d - 1, d - 1));
            continue;
        }
        let frame = leaf_frame(&a, nv);
        let dn = grad_n.matrix_at(node);
        let p = tangential_projector(&a, nv);
        let s = (&(&p * &dn) * &p).scale(-1.0);
        abar_coord.at_mut(node).copy_from_slice(s.as_slice());
        abar.push(to_frame(&a, &frame, &s));
        let z = dn.mul_vec(nv);
        zbar.at_mut(node).copy_from_slice(&z);
        frames.push(frame);
    }
    Ok(BarGeometry {
        scheme,
        gamma,
        grad_n,
        abar_coord,
        abar,
        zbar,
        frames,
    })
}

#[derive(Debug, Clone)]
pub struct CurvatureBar {
    pub riemann: TensorField,
    /// `R̄_N(u) = R̄(u,N)N` on the leaf, frame matrices.
    pub jacobi_n: Vec<Matrix>,
    /// `Ric̄_N = tr R̄_N`
    pub ricci_n: Vec<f64>,
}

/// Curvature of `a`. Needs derivatives of the Christoffel symbols, which are
/// singular at excised points, so excised manifolds are refused.
pub fn curvature_bar(m: &FoliatedRandersManifold, bar: &BarGeometry) -> Result<CurvatureBar> {
    if m.is_excised() {
        return Err(Error::Precondition(
            "curvature needs second derivatives of the metric, unavailable across excised sets".into(),
        ));
    }
    let d = m.dim();
    let r = riemann(&bar.gamma, bar.scheme);
    let mut jacobi_n = Vec::with_capacity(m.grid.len());
    let mut ricci_n = Vec::with_capacity(m.grid.len());
    for node in 0..m.grid.len() {
        let rv = r.at(node);
        let nv = m.big_n.at(node);
        // R(u,N)N: X = u (index k), Y = N (index l), Z = N (index j).
        let op = Matrix::from_fn(d, d, |i, k| {
            let mut s = 0.0;
            for j in 0..d {
                for l in 0..d {
                    s += rv[((i * d + j) * d + k) * d + l] * nv[j] * nv[l];
                }
            }
            s
        });
        let a = m.a.matrix_at(node);
        let fm = to_frame(&a, &bar.frames[node], &op);
        ricci_n.push(fm.trace());
        jacobi_n.push(fm);
    }
    Ok(CurvatureBar {
        riemann: r,
        jacobi_n,
        ricci_n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Volume {
    /// `dV_a = √det a dx`
    A,
    /// `dV_g = (cĉ)^{(m+2)/2} dV_a`
    G,
    /// `dV_F = (1 − ‖β‖²_α)^{(m+2)/2} dV_a`
    F,
}

/// Density of `volume` with respect to `dx` at `node`.
pub fn volume_density(m: &FoliatedRandersManifold, node: usize, volume: Volume) -> Result<f64> {
    let a = m.a.matrix_at(node);
    let base = sqrt(a.det());
    let half = (m.dim() + 1) as f64 / 2.0;
    Ok(match volume {
        Volume::A => base,
        Volume::G => {
            let (_, nd) = m.normal_data(node)?;
            base * powf(nd.c_chat(), half)
        }
        Volume::F => {
            let p = m.point(node)?;
            base * randers::busemann_hausdorff_factor(&p)
        }
    })
}

/// Recursive pairwise sum; the order of additions depends only on the length.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Trapezoid quadrature of a scalar field against `volume`; excised nodes
/// carry zero weight.
pub fn integrate(f: &[f64], m: &FoliatedRandersManifold, volume: Volume) -> Result<f64> {
    if f.len() != m.grid.len() {
        return Err(Error::Shape {
            expected: m.grid.len(),
            found: f.len(),
        });
    }
    let mut terms = vec![0.0; f.len()];
    for node in 0..f.len() {
        if !m.active()[node] {
            continue;
        }
        if !f[node].is_finite() {
            return Err(Error::Numeric {
                node,
                what: "non-finite integrand".into(),
            });
        }
        terms[node] = f[node] * volume_density(m, node, volume)?;
    }
    Ok(pairwise_sum(&terms) * m.grid.cell_volume())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleKind {
    FlatParallel,
    FlatGraph,
    ConformalTorus,
    SphereLatitudes,
}

/// One tunable parameter of a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub help: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub kind: ExampleKind,
    pub name: &'static str,
    pub summary: &'static str,
    /// Which hypotheses the example satisfies and what it can exercise.
    pub profile: &'static str,
    pub params: &'static [ParamInfo],
    pub default_resolution: usize,
}

const FLAT_PARALLEL_PARAMS: &[ParamInfo] = &[
    ParamInfo { name: "dim", default: 3.0, help: "manifold dimension m+1 (2 or 3)" },
    ParamInfo { name: "b1", default: 0.3, help: "β♯ component along x1" },
    ParamInfo { name: "b2", default: 0.0, help: "β♯ component along x2" },
    ParamInfo { name: "b3", default: 0.4, help: "β♯ component along x3 (the normal in 3D)" },
];

const FLAT_GRAPH_PARAMS: &[ParamInfo] = &[
    ParamInfo { name: "dim", default: 2.0, help: "manifold dimension m+1 (2 or 3)" },
    ParamInfo { name: "amp", default: 0.06, help: "amplitude of the x-profile of the graph" },
    ParamInfo { name: "amp_y", default: 0.04, help: "amplitude of the y-profile (3D); 0 gives a ruled graph" },
    ParamInfo { name: "b1", default: 0.2, help: "β♯ component along x1" },
    ParamInfo { name: "b2", default: 0.1, help: "β♯ component along x2" },
    ParamInfo { name: "b3", default: 0.3, help: "β♯ component along x3 (3D)" },
];

const CONFORMAL_PARAMS: &[ParamInfo] = &[
    ParamInfo { name: "dim", default: 2.0, help: "manifold dimension m+1 (2 or 3)" },
    ParamInfo { name: "phi_amp", default: 0.2, help: "amplitude of the conformal factor log" },
    ParamInfo { name: "beta_amp", default: 0.3, help: "amplitude of the generic 1-form (0 gives a Riemannian example)" },
    ParamInfo { name: "eigen", default: 0.0, help: "1 selects the normal-only conformal factor with β♯ = ε′e^{-φ}∂₁ + εe^{-φ}∂_d" },
    ParamInfo { name: "eps", default: 0.2, help: "normal component ε of β♯ (eigen variant)" },
    ParamInfo { name: "eps_prime", default: 0.3, help: "tangential component ε′ of β♯ (eigen variant)" },
];

const SPHERE_PARAMS: &[ParamInfo] = &[
    ParamInfo { name: "r0", default: 0.05, help: "geodesic radius of the excised polar caps" },
];

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        kind: ExampleKind::FlatParallel,
        name: "flat-parallel",
        summary: "flat torus foliated by parallel planes, constant β",
        profile: "Berwald, K̄=0, Ā=0, Z̄=0, constant angle → every flat Berwald formula, equality case of the energy bound, vanishing conclusions",
        params: FLAT_PARALLEL_PARAMS,
        default_resolution: 32,
    },
    CatalogEntry {
        kind: ExampleKind::FlatGraph,
        name: "flat-graph",
        summary: "flat torus foliated by translates of a periodic graph, constant β",
        profile: "Berwald, K̄=0 → flat Berwald σ_k series, second-order Berwald formula, energy bound; amp_y=0 with β♯ along x2 gives the ruled constant-angle case",
        params: FLAT_GRAPH_PARAMS,
        default_resolution: 64,
    },
    CatalogEntry {
        kind: ExampleKind::ConformalTorus,
        name: "conformal-torus",
        summary: "conformally flat torus e^{2φ}δ with the coordinate foliation, generic β",
        profile: "non-Berwald, curved → shape/curvature comparison, Riccati and Codazzi identities, first-order Randers formula; beta_amp=0 → Riemannian second-order formula; eigen=1 → eigenvector construction",
        params: CONFORMAL_PARAMS,
        default_resolution: 64,
    },
    CatalogEntry {
        kind: ExampleKind::SphereLatitudes,
        name: "sphere-latitudes",
        summary: "round 2-sphere foliated by latitude circles, poles excised",
        profile: "singular Σ = 2 points → excision regime of the divergence lemma (Reeb formula with singularities)",
        params: SPHERE_PARAMS,
        default_resolution: 256,
    },
];

impl ExampleKind {
    pub fn parse(s: &str) -> Option<ExampleKind> {
        CATALOG.iter().find(|e| e.name == s).map(|e| e.kind)
    }

    pub fn entry(self) -> &'static CatalogEntry {
        CATALOG.iter().find(|e| e.kind == self).expect("catalog covers every kind")
    }

    pub fn name(self) -> &'static str {
        self.entry().name
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSpec {
    pub kind: ExampleKind,
    pub params: BTreeMap<String, f64>,
}

impl ExampleSpec {
    pub fn new(kind: ExampleKind) -> Self {
        ExampleSpec {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Declared parameters with overrides applied; unknown keys are an error.
    pub fn resolved_params(&self) -> Result<BTreeMap<String, f64>> {
        let entry = self.kind.entry();
        for key in self.params.keys() {
            if !entry.params.iter().any(|p| p.name == key) {
                return Err(Error::Validation(format!(
                    "unknown parameter '{key}' for example {}",
                    entry.name
                )));
            }
        }
        Ok(entry
            .params
            .iter()
            .map(|p| {
                let v = self.params.get(p.name).copied().unwrap_or(p.default);
                (p.name.to_string(), v)
            })
            .collect())
    }
}

fn dim_param(p: &BTreeMap<String, f64>) -> Result<usize> {
    let d = p["dim"];
    if d == 2.0 {
        Ok(2)
    } else if d == 3.0 {
        Ok(3)
    } else {
        Err(Error::Validation(format!("dim must be 2 or 3, got {d}")))
    }
}

fn euclid_beta_check(b: &[f64]) -> Result<()> {
    let n = sqrt(dot(b, b));
    if n >= randers::BETA_NORM_LIMIT {
        return Err(Error::Validation(format!("‖β‖ = {n} must be below 1")));
    }
    Ok(())
}

/// Samples a catalog example on a grid with `res` points per axis.
pub fn build_example(spec: &ExampleSpec, res: usize) -> Result<FoliatedRandersManifold> {
    let p = spec.resolved_params()?;
    let tau = 2.0 * PI;
    match spec.kind {
        ExampleKind::FlatParallel => {
            let d = dim_param(&p)?;
            let grid = PeriodicGrid::uniform(d, res, 1.0)?;
            let b: Vec<f64> = ["b1", "b2", "b3"][..d].iter().map(|k| p[*k]).collect();
            euclid_beta_check(&b)?;
            let a = TensorField::from_nodes(&grid, 0, 2, |_, o| {
                o.copy_from_slice(Matrix::identity(d).as_slice())
            });
            let beta = TensorField::from_nodes(&grid, 0, 1, |_, o| o.copy_from_slice(&b));
            let nn = TensorField::from_nodes(&grid, 1, 0, |_, o| o[d - 1] = 1.0);
            FoliatedRandersManifold::new("flat-parallel", p, a, beta, nn, Vec::new())
        }
        ExampleKind::FlatGraph => {
            let d = dim_param(&p)?;
            let grid = PeriodicGrid::uniform(d, res, 1.0)?;
            let b: Vec<f64> = ["b1", "b2", "b3"][..d].iter().map(|k| p[*k]).collect();
            euclid_beta_check(&b)?;
            let (amp, amp_y) = (p["amp"], p["amp_y"]);
            let a = TensorField::from_nodes(&grid, 0, 2, |_, o| {
                o.copy_from_slice(Matrix::identity(d).as_slice())
            });
            let beta = TensorField::from_nodes(&grid, 0, 1, |_, o| o.copy_from_slice(&b));
            let nn = TensorField::from_coords(&grid, 1, 0, |x, o| {
                let g = graph_gradient(x, amp, amp_y, d);
                let w = sqrt(1.0 + dot(&g, &g));
                for i in 0..d - 1 {
                    o[i] = -g[i] / w;
                }
                o[d - 1] = 1.0 / w;
            });
            FoliatedRandersManifold::new("flat-graph", p, a, beta, nn, Vec::new())
        }
        ExampleKind::ConformalTorus => {
            let d = dim_param(&p)?;
            let grid = PeriodicGrid::uniform(d, res, 1.0)?;
            let eigen = p["eigen"] != 0.0;
            let (phi_amp, beta_amp, eps, epsp) = (p["phi_amp"], p["beta_amp"], p["eps"], p["eps_prime"]);
            if eigen && eps * eps + epsp * epsp >= randers::BETA_NORM_LIMIT {
                return Err(Error::Validation("ε² + ε′² must be below 1".into()));
            }
            if !eigen && beta_amp.abs() >= 0.9 {
                return Err(Error::Validation("beta_amp must be below 0.9".into()));
            }
            let phi = move |x: &[f64]| conformal_phi(x, phi_amp, eigen, d);
            let a = TensorField::from_coords(&grid, 0, 2, |x, o| {
                let e = exp(2.0 * phi(x));
                for i in 0..d {
                    o[i * d + i] = e;
                }
            });
            let beta = TensorField::from_coords(&grid, 0, 1, |x, o| {
                let ef = exp(phi(x));
                if eigen {
                    o[0] = epsp * ef;
                    o[d - 1] = eps * ef;
                } else {
                    let v = conformal_beta_profile(x, d);
                    for i in 0..d {
                        o[i] = beta_amp * ef * v[i];
                    }
                }
            });
            let nn = TensorField::from_coords(&grid, 1, 0, |x, o| o[d - 1] = exp(-phi(x)));
            FoliatedRandersManifold::new("conformal-torus", p, a, beta, nn, Vec::new())
        }
        ExampleKind::SphereLatitudes => {
            let r0 = p["r0"];
            if !(r0 > 0.0 && r0 < PI / 4.0) {
                return Err(Error::Validation(format!("r0 = {r0} must lie in (0, π/4)")));
            }
            let grid = PeriodicGrid::new(vec![res, res], vec![PI, tau])?;
            let a = TensorField::from_coords(&grid, 0, 2, |x, o| {
                let s = sin(x[0]);
                o[0] = 1.0;
                o[3] = s * s;
            });
            let beta = TensorField::zeros(&grid, 0, 1);
            let nn = TensorField::from_nodes(&grid, 1, 0, |_, o| o[0] = 1.0);
            let exc = vec![
                Excision::Band { axis: 0, center: 0.0, radius: r0 },
                Excision::Band { axis: 0, center: PI, radius: r0 },
            ];
            FoliatedRandersManifold::new("sphere-latitudes", p, a, beta, nn, exc)
        }
    }
}

/// `∇φ` of the graph profile `φ(x,y) = amp(sin 2πx + 0.3 cos 4πx) + amp_y sin(2πy + 0.7)`
/// (only the first `d−1` coordinates enter).
pub fn graph_gradient(x: &[f64], amp: f64, amp_y: f64, d: usize) -> Vec<f64> {
    let tau = 2.0 * PI;
    let mut g = vec![amp * tau * (cos(tau * x[0]) - 0.6 * sin(2.0 * tau * x[0]))];
    if d == 3 {
        g.push(amp_y * tau * cos(tau * x[1] + 0.7));
    }
    g
}

/// Log conformal factor. The eigen variant depends on the normal coordinate only.
pub fn conformal_phi(x: &[f64], amp: f64, eigen: bool, d: usize) -> f64 {
    let tau = 2.0 * PI;
    let xd = x[d - 1];
    if eigen {
        return amp * (sin(tau * xd) + 0.3 * cos(2.0 * tau * xd));
    }
    let mut v = sin(tau * x[0]) + 0.5 * cos(tau * xd + 0.4);
    if d == 3 {
        v += 0.3 * sin(tau * x[1] + 1.1);
    }
    amp * v
}

/// Unit-bounded profile of the generic 1-form in a conformal frame.
pub fn conformal_beta_profile(x: &[f64], d: usize) -> Vec<f64> {
    let tau = 2.0 * PI;
    let xd = x[d - 1];
    let mut v = vec![0.0; d];
    v[0] = 0.5 + 0.3 * cos(tau * xd);
    v[d - 1] = 0.4 * sin(tau * x[0] + 0.2);
    if d == 3 {
        v[1] = 0.3 * cos(tau * (x[0] + x[1]));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_sine() {
        for &n in &[16usize, 17] {
            let g = PeriodicGrid::new(vec![n, 8], vec![3.0, 1.0]).unwrap();
            let k = 2.0 * PI / 3.0;
            let f = TensorField::from_coords(&g, 0, 0, |x, o| o[0] = sin(k * x[0]));
            let df = derivative(&f, 0, Scheme::Spectral);
            for node in 0..g.len() {
                let x = g.coords(node);
                assert!((df.at(node)[0] - k * cos(k * x[0])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = PeriodicGrid::uniform(3, 8, 1.0).unwrap();
        let f = TensorField::from_nodes(&g, 1, 0, |_, o| o.copy_from_slice(&[1.0, 2.0, 3.0]));
        for scheme in [Scheme::Spectral, Scheme::Central4] {
            let df = derivative(&f, 1, scheme);
            assert!(df.values().iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn unit_torus_volume() {
        let spec = ExampleSpec::new(ExampleKind::FlatParallel)
            .with("dim", 2.0)
            .with("b1", 0.0)
            .with("b2", 0.0);
        let m = build_example(&spec, 16).unwrap();
        let one = vec![1.0; m.grid.len()];
        assert!((integrate(&one, &m, Volume::A).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frame_is_orthonormal_and_normal() {
        let a = Matrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.5, 0.2, 0.0, 0.2, 1.0]);
        let mut nv = vec![0.3, -0.2, 1.0];
        let nf = a.mul_vec(&nv);
        let l = sqrt(dot(&nf, &nv));
        nv.iter_mut().for_each(|x| *x /= l);
        let e = leaf_frame(&a, &nv);
        let gram = &(&e.transpose() * &a) * &e;
        assert!(gram.max_abs_diff(&Matrix::identity(2)) < 1e-14);
        let ne = &Matrix::from_row_slice(1, 3, &a.mul_vec(&nv)) * &e;
        assert!(ne.max_abs() < 1e-14);
    }

    #[test]
    fn unknown_param_is_rejected() {
        let spec = ExampleSpec::new(ExampleKind::FlatGraph).with("nosuch", 1.0);
        assert!(build_example(&spec, 16).is_err());
        let big = ExampleSpec::new(ExampleKind::FlatParallel).with("b1", 0.9).with("b3", 0.9);
        assert!(matches!(build_example(&big, 16), Err(Error::Validation(_))));
    }
}
