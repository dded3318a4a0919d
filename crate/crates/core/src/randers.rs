//! Randers algebra on a single tangent space `ℝ^{m+1}`.
//!
//! A [`RandersPoint`] is an inner product `a = ⟨·,·⟩` together with a covector
//! `β` of `a`-norm below one; the Randers norm is `F = α + β` with
//! `α(y) = √⟨y,y⟩`. Covectors are stored in coordinates (`β(y) = Σ βᵢyⁱ`) and
//! `β♯ = a⁻¹β` is cached.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::{ln, sqrt};
use crate::linalg::{axpy, dot, scaled, Matrix};

/// Norms at or above this bound are rejected at construction.
pub const BETA_NORM_LIMIT: f64 = 1.0 - 1e-9;

/// Below this `a`-norm, `β^{♯⊤}` is treated as zero.
pub const BETA_TOP_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RandersPoint {
    a: Matrix,
    beta: Vec<f64>,
    beta_sharp: Vec<f64>,
}

impl RandersPoint {
    /// Validates that `a` is symmetric positive definite and `‖β‖_α < 1`.
    pub fn new(a: Matrix, beta: Vec<f64>) -> Result<Self> {
        let d = a.rows();
        if !a.is_square() {
            return Err(Error::Shape {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        if beta.len() != d {
            return Err(Error::Shape {
                expected: d,
                found: beta.len(),
            });
        }
        if !a.is_finite() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Validation("non-finite entries".into()));
        }
        let asym = a.max_abs_diff(&a.transpose());
        if asym > 1e-12 * (1.0 + a.max_abs()) {
            return Err(Error::Validation(format!("a is not symmetric (asymmetry {asym:e})")));
        }
        if a.cholesky().is_none() {
            return Err(Error::Validation("a is not positive definite".into()));
        }
        let beta_sharp = a.solve(&beta).expect("SPD matrix is invertible");
        let norm = sqrt(dot(&beta, &beta_sharp));
        if norm >= BETA_NORM_LIMIT {
            return Err(Error::Validation(format!("‖β‖_α = {norm} is not below 1")));
        }
        Ok(RandersPoint {
            a,
            beta,
            beta_sharp,
        })
    }

    /// Euclidean `a = I`.
    pub fn euclidean(beta: Vec<f64>) -> Result<Self> {
        RandersPoint::new(Matrix::identity(beta.len()), beta)
    }

    /// `m + 1`
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn beta_sharp(&self) -> &[f64] {
        &self.beta_sharp
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.a.bilinear(u, v)
    }

    /// `y♭ = a y`
    pub fn flat(&self, y: &[f64]) -> Vec<f64> {
        self.a.mul_vec(y)
    }

    pub fn alpha(&self, y: &[f64]) -> f64 {
        sqrt(self.inner(y, y).max(0.0))
    }

    pub fn beta_of(&self, y: &[f64]) -> f64 {
        dot(&self.beta, y)
    }

    /// `‖β‖_α`
    pub fn beta_norm(&self) -> f64 {
        sqrt(dot(&self.beta, &self.beta_sharp))
    }
}

/// `F(y) = α(y) + β(y)`
pub fn randers_norm(p: &RandersPoint, y: &[f64]) -> f64 {
    p.alpha(y) + p.beta_of(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor {
    pub y: Vec<f64>,
    pub g: Matrix,
}

fn nonzero(p: &RandersPoint, y: &[f64]) -> Result<f64> {
    if y.len() != p.dim() {
        return Err(Error::Shape {
            expected: p.dim(),
            found: y.len(),
        });
    }
    let al = p.alpha(y);
    if al == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(al)
}

/// `g_y = (F/α)(a − α⁻² y♭⊗y♭) + ℓ⊗ℓ` with `ℓ = y♭/α + β = dF_y`.
pub fn fundamental_tensor(p: &RandersPoint, y: &[f64]) -> Result<FundamentalTensor> {
    let al = nonzero(p, y)?;
    let f = al + p.beta_of(y);
    let yf = p.flat(y);
    let ell = axpy(&p.beta, 1.0 / al, &yf);
    let d = p.dim();
    let g = Matrix::from_fn(d, d, |i, j| {
        (f / al) * (p.a[(i, j)] - yf[i] * yf[j] / (al * al)) + ell[i] * ell[j]
    });
    Ok(FundamentalTensor { y: y.to_vec(), g })
}

/// The textbook coordinate display
/// `α⁻²(1+β(y))a + β⊗β − α⁻³β(y) y♭⊗y♭ + α⁻¹(β⊗y♭ + y♭⊗β)`.
///
/// Agrees with [`fundamental_tensor`] only when `α(y) = 1`; for other lengths
/// it is not 0-homogeneous in `y`.
pub fn fundamental_tensor_display(p: &RandersPoint, y: &[f64]) -> Result<Matrix> {
    let al = nonzero(p, y)?;
    let by = p.beta_of(y);
    let yf = p.flat(y);
    let b = &p.beta;
    let d = p.dim();
    Ok(Matrix::from_fn(d, d, |i, j| {
        (1.0 + by) * p.a[(i, j)] / (al * al) + b[i] * b[j] - by * yf[i] * yf[j] / (al * al * al)
            + (b[i] * yf[j] + yf[i] * b[j]) / al
    }))
}

/// Angular form `h_y(u,v) = g_y(u,v) − F⁻² g_y(y,u) g_y(y,v) = (F/α)(⟨u,v⟩ − α⁻²⟨y,u⟩⟨y,v⟩)`.
pub fn angular_form(p: &RandersPoint, y: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    let al = nonzero(p, y)?;
    let f = al + p.beta_of(y);
    Ok((f / al) * (p.inner(u, v) - p.inner(y, u) * p.inner(y, v) / (al * al)))
}

/// Mean Cartan torsion `I_y(u) = ((m+2)/(2F)) (β(u) − α⁻²β(y)⟨y,u⟩)`.
pub fn mean_cartan_torsion(p: &RandersPoint, y: &[f64], u: &[f64]) -> Result<f64> {
    let al = nonzero(p, y)?;
    let by = p.beta_of(y);
    let f = al + by;
    let m2 = (p.dim() + 1) as f64;
    Ok(m2 / (2.0 * f) * (p.beta_of(u) - by * p.inner(y, u) / (al * al)))
}

/// Cartan torsion `C_y(u,v,w) = ½ ∂_t g_{y+tw}(u,v)`.
///
/// Randers norms are C-reducible, so `C_y = (m+2)⁻¹ (I⊗h + I⊗h + I⊗h)`
/// symmetrised over the three slots.
pub fn cartan_torsion(p: &RandersPoint, y: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
    let m2 = (p.dim() + 1) as f64;
    let iu = mean_cartan_torsion(p, y, u)?;
    let iv = mean_cartan_torsion(p, y, v)?;
    let iw = mean_cartan_torsion(p, y, w)?;
    let hvw = angular_form(p, y, v, w)?;
    let huw = angular_form(p, y, u, w)?;
    let huv = angular_form(p, y, u, v)?;
    Ok((iu * hvw + iv * huw + iw * huv) / m2)
}

/// The symmetric bilinear form `C_y(·,·,w)` as a coordinate matrix.
pub fn cartan_matrix(p: &RandersPoint, y: &[f64], w: &[f64]) -> Result<Matrix> {
    let al = nonzero(p, y)?;
    let by = p.beta_of(y);
    let f = al + by;
    let d = p.dim();
    let m2 = (d + 1) as f64;
    let yf = p.flat(y);
    // I as a covector, h as a matrix.
    let icov: Vec<f64> = (0..d)
        .map(|i| m2 / (2.0 * f) * (p.beta[i] - by * yf[i] / (al * al)))
        .collect();
    let h = Matrix::from_fn(d, d, |i, j| (f / al) * (p.a[(i, j)] - yf[i] * yf[j] / (al * al)));
    let iw = dot(&icov, w);
    let hw = h.mul_vec(w);
    Ok(Matrix::from_fn(d, d, |i, j| {
        (icov[i] * hw[j] + icov[j] * hw[i] + iw * h[(i, j)]) / m2
    }))
}

/// `σ_F / √det a = (1 − ‖β‖²_α)^{(m+2)/2}`
pub fn busemann_hausdorff_factor(p: &RandersPoint) -> f64 {
    let b2 = dot(&p.beta, &p.beta_sharp);
    crate::float::powf(1.0 - b2, (p.dim() + 1) as f64 / 2.0)
}

/// Distortion `τ(y) = log(√det g_y / σ_F)`, evaluated from determinants.
pub fn distortion(p: &RandersPoint, y: &[f64]) -> Result<f64> {
    let g = fundamental_tensor(p, y)?.g;
    let det_g = g.det();
    let sigma = busemann_hausdorff_factor(p) * sqrt(p.a.det());
    Ok(ln(sqrt(det_g) / sigma))
}

/// `((m+2)/2) log(c/(2c − ĉ))`, the closed form of `τ(n)` at the F-normal.
pub fn distortion_at_normal(nd: &NormalData, m: usize) -> f64 {
    (m + 2) as f64 / 2.0 * ln(nd.c / (2.0 * nd.c - nd.chat))
}

/// F-normal data of the hyperplane `W = N^⊥` (orthogonal for `a`).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalData {
    /// `α`-unit normal of `W`.
    pub big_n: Vec<f64>,
    /// `n = ĉN − β♯`, with `α(n) = 1`.
    pub n: Vec<f64>,
    /// `ν = n/(cĉ)`, F-unit.
    pub nu: Vec<f64>,
    /// `c = (1 − ‖β^{♯⊤}‖²_α)^{1/2}`
    pub c: f64,
    /// `ĉ = c + β(N)`
    pub chat: f64,
    /// `β^{♯⊤}`, the part of `β♯` tangent to `W`.
    pub beta_top: Vec<f64>,
}

impl NormalData {
    /// `F(n) = cĉ`
    pub fn c_chat(&self) -> f64 {
        self.c * self.chat
    }

    /// `β(N) = ĉ − c`
    pub fn beta_n(&self) -> f64 {
        self.chat - self.c
    }

    /// `‖β^{♯⊤}‖²_α = 1 − c²`
    pub fn beta_top_norm2(&self) -> f64 {
        1.0 - self.c * self.c
    }
}

pub fn f_normal(p: &RandersPoint, big_n: &[f64]) -> Result<NormalData> {
    if big_n.len() != p.dim() {
        return Err(Error::Shape {
            expected: p.dim(),
            found: big_n.len(),
        });
    }
    let len = p.alpha(big_n);
    if (len - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("‖N‖_α = {len}, expected 1")));
    }
    let bn = p.beta_of(big_n);
    let beta_top = axpy(&p.beta_sharp, -bn, big_n);
    let t2 = p.inner(&beta_top, &beta_top);
    let c = sqrt((1.0 - t2).max(0.0));
    let chat = c + bn;
    let n = axpy(&scaled(big_n, chat), -1.0, &p.beta_sharp);
    let nu = scaled(&n, 1.0 / (c * chat));
    Ok(NormalData {
        big_n: big_n.to_vec(),
        n,
        nu,
        c,
        chat,
        beta_top,
    })
}

fn check_in_w(p: &RandersPoint, nd: &NormalData, u: &[f64]) -> Result<()> {
    let off = p.inner(u, &nd.big_n);
    if off.abs() > 1e-9 * (1.0 + p.alpha(u)) {
        return Err(Error::Precondition(format!(
            "vector is not tangent to the hyperplane (⟨u,N⟩ = {off:e})"
        )));
    }
    Ok(())
}

/// `g(u,v) = cĉ(⟨u,v⟩ − β(u)β(v))` for `u, v ∈ W`.
pub fn leaf_metric(nd: &NormalData, p: &RandersPoint, u: &[f64], v: &[f64]) -> Result<f64> {
    check_in_w(p, nd, u)?;
    check_in_w(p, nd, v)?;
    Ok(nd.c_chat() * (p.inner(u, v) - p.beta_of(u) * p.beta_of(v)))
}

/// The `u ∈ W` with `g(u,·) = ⟨U,·⟩` on `W`: `(cĉ)u = U + c⁻²β(U)β^{♯⊤}`.
pub fn g_raise(nd: &NormalData, p: &RandersPoint, big_u: &[f64]) -> Vec<f64> {
    let k = p.beta_of(big_u) / (nd.c * nd.c);
    scaled(&axpy(big_u, k, &nd.beta_top), 1.0 / nd.c_chat())
}

/// `X^{⊥β} = X − ⟨X,β^{♯⊤}⟩‖β^{♯⊤}‖⁻² β^{♯⊤}`; identity when `β^{♯⊤}` vanishes.
pub fn perp_beta_project(x: &[f64], nd: &NormalData, p: &RandersPoint) -> Vec<f64> {
    let t2 = p.inner(&nd.beta_top, &nd.beta_top);
    if sqrt(t2) < BETA_TOP_EPS {
        return x.to_vec();
    }
    axpy(x, -p.inner(x, &nd.beta_top) / t2, &nd.beta_top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn norm_examples() {
        let p = RandersPoint::euclidean(vec![0.0, 0.0]).unwrap();
        assert!(close(randers_norm(&p, &[3.0, 4.0]), 5.0, 1e-15));
        let q = RandersPoint::euclidean(vec![0.5, 0.0]).unwrap();
        assert!(close(randers_norm(&q, &[1.0, 0.0]), 1.5, 1e-15));
        assert_eq!(randers_norm(&q, &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn rejects_large_beta_and_indefinite_a() {
        assert!(RandersPoint::euclidean(vec![0.6, 0.8]).is_err());
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(RandersPoint::new(bad, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_vector_is_rejected() {
        let p = RandersPoint::euclidean(vec![0.1, 0.2]).unwrap();
        assert_eq!(fundamental_tensor(&p, &[0.0, 0.0]), Err(Error::ZeroVector));
        assert!(cartan_torsion(&p, &[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn riemannian_reduction() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let p = RandersPoint::new(a.clone(), vec![0.0, 0.0]).unwrap();
        let g = fundamental_tensor(&p, &[0.4, -1.0]).unwrap().g;
        assert!(g.max_abs_diff(&a) < 1e-14);
        assert_eq!(distortion(&p, &[1.0, 2.0]).unwrap().abs() < 1e-14, true);
        let c = cartan_torsion(&p, &[1.0, 0.0], &[0.3, 1.0], &[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn normal_in_the_plane() {
        let p = RandersPoint::euclidean(vec![0.3, 0.4]).unwrap();
        let nd = f_normal(&p, &[0.0, 1.0]).unwrap();
        let c = sqrt(0.91);
        assert!(close(nd.c, c, 1e-15));
        assert!(close(nd.chat, c + 0.4, 1e-15));
        assert!(close(nd.n[0], -0.3, 1e-15) && close(nd.n[1], c, 1e-15));
        let g = fundamental_tensor(&p, &nd.n).unwrap().g;
        assert!(g.bilinear(&nd.n, &[1.0, 0.0]).abs() < 1e-12);
    }

    #[test]
    fn normal_requires_unit_n() {
        let p = RandersPoint::euclidean(vec![0.1, 0.1]).unwrap();
        assert!(matches!(f_normal(&p, &[0.0, 2.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn leaf_metric_on_beta_top() {
        let p = RandersPoint::euclidean(vec![0.2, -0.3, 0.25]).unwrap();
        let nd = f_normal(&p, &[0.0, 0.0, 1.0]).unwrap();
        let bt = nd.beta_top.clone();
        let v = leaf_metric(&nd, &p, &bt, &bt).unwrap();
        let c = nd.c;
        assert!(close(v, c * c * c * nd.chat * (1.0 - c * c), 1e-15));
        assert!(leaf_metric(&nd, &p, &[0.0, 0.0, 1.0], &bt).is_err());
    }

    #[test]
    fn perp_projection() {
        let p = RandersPoint::euclidean(vec![0.2, -0.3, 0.25]).unwrap();
        let nd = f_normal(&p, &[0.0, 0.0, 1.0]).unwrap();
        let z = perp_beta_project(&nd.beta_top, &nd, &p);
        assert!(z.iter().all(|x| x.abs() < 1e-15));
        let q = RandersPoint::euclidean(vec![0.0, 0.0, 0.25]).unwrap();
        let nq = f_normal(&q, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(perp_beta_project(&[1.0, 2.0, 0.0], &nq, &q), vec![1.0, 2.0, 0.0]);
    }
}
