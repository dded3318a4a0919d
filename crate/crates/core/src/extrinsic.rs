//! The Riemannian metric `g = g_n` of a foliated Randers manifold and the
//! extrinsic geometry of its leaves, computed twice: directly from the
//! Levi-Civita connection of `g`, and from closed forms in terms of the
//! geometry of `a`.
//!
//! Everything tangent to the leaves is stored in the per-node
//! `a`-orthonormal frame `E` of [`BarGeometry`]. In that frame `⟨·,·⟩` is the
//! dot product and `β^{♯⊤}` and `β|_{T𝔉}` share the coefficient vector `b`,
//! so `X⊗β^⊤` is the matrix `x bᵀ` (`u ↦ β(u)X`) and `ω♭⊗β^{♯⊤}` is `b ωᵀ`
//! (`u ↦ ⟨ω,u⟩β^{♯⊤}`).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::sqrt;
use crate::grid::{
    christoffel, covariant_derivative_11_along, covariant_derivative_vector, gradient, to_frame,
    vec_to_frame, BarGeometry, CurvatureBar, FoliatedRandersManifold, Scheme, TensorField,
};
use crate::linalg::{axpy, dot, scaled, Matrix};
use crate::randers::{self, NormalData, RandersPoint, BETA_TOP_EPS};

/// Coordinate form of `g_n` read off the textbook display with `y = n`:
/// `(1+β(n))a + β⊗β − β(n) n♭⊗n♭ + β⊗n♭ + n♭⊗β`.
pub fn g_from_normal_display(p: &RandersPoint, nd: &NormalData) -> Matrix {
    let d = p.dim();
    let bn = p.beta_of(&nd.n);
    let nf = p.flat(&nd.n);
    let b = p.beta();
    Matrix::from_fn(d, d, |i, j| {
        (1.0 + bn) * p.a()[(i, j)] + b[i] * b[j] - bn * nf[i] * nf[j] + b[i] * nf[j] + nf[i] * b[j]
    })
}

fn outer(u: &[f64], v: &[f64]) -> Matrix {
    Matrix::outer(u, v)
}

fn perp(x: &[f64], b: &[f64]) -> Vec<f64> {
    let t2 = dot(b, b);
    if sqrt(t2) < BETA_TOP_EPS {
        return x.to_vec();
    }
    axpy(x, -dot(x, b) / t2, b)
}

/// Per-node quantities, all leaf objects in the `a`-orthonormal frame.
#[derive(Debug, Clone)]
pub struct NodeExtrinsic {
    pub nd: NormalData,
    /// Frame coefficients of `β^{♯⊤}`.
    pub b: Vec<f64>,
    /// `‖β♯‖²_α`
    pub beta_norm2: f64,
    /// `g` restricted to the leaf, frame matrix.
    pub g_leaf: Matrix,
    pub abar: Matrix,
    pub zbar: Vec<f64>,
    /// `⟨Z̄,N⟩`
    pub zbar_normal: f64,
    /// `(Def_{β♯})^⊤|T𝔉`
    pub def_beta: Matrix,
    /// `(∇̄_n β^{♯⊤})^⊤`
    pub nabla_n_b: Vec<f64>,
    /// `∇̄^⊤c`, `∇̄^⊤ĉ`
    pub grad_c: Vec<f64>,
    pub grad_chat: Vec<f64>,
    /// `N(c)`, `N(ĉ)`, `n(ĉ)`, `n(cĉ)`, `β^{♯⊤}(ĉ)`
    pub big_n_c: f64,
    pub big_n_chat: f64,
    pub n_chat: f64,
    pub n_cchat: f64,
    pub b_chat: f64,
    /// `δ = −½ c⁻¹ĉ⁻² n(cĉ)`
    pub delta: f64,
    /// `U = ĉ⁻¹(∇̄_n β^{♯⊤})^⊤ − cZ̄`
    pub u: Vec<f64>,

    pub ag_direct: Matrix,
    pub z_direct: Vec<f64>,
    /// `g(Z,ν)` before projection.
    pub z_direct_normal: f64,
    /// `g`-dual of `C_ν(·,·,Z)`.
    pub csharp_direct: Matrix,
    /// `g`-dual of `C_n(·,·,∇_n n)`.
    pub csharp_n_direct: Matrix,

    pub ag_initial: Matrix,
    pub ag_perp: Matrix,
    pub ag_unreduced: Matrix,
    /// Initial form with the bracket coefficient corrected, see [`Reading`].
    pub ag_corrected: Matrix,
    pub z_formula: Vec<f64>,
    pub csharp_printed: Matrix,
    pub csharp_corrected: Matrix,

    /// `|det g − (cĉ)^{m+2} det a| / det g`
    pub det_g_rel: f64,
    /// `|√det g / σ_F − e^{τ(ν)}| / e^{τ(ν)}`, `τ` from determinants.
    pub etau_rel: f64,
    /// Closed form of `τ(n)` minus the determinant definition.
    pub tau_closed_gap: f64,
    /// `g` from the coordinate display against the fundamental tensor.
    pub g_display_gap: f64,
}

impl NodeExtrinsic {
    pub fn c(&self) -> f64 {
        self.nd.c
    }

    pub fn chat(&self) -> f64 {
        self.nd.chat
    }

    /// `m`
    pub fn leaf_dim(&self) -> usize {
        self.b.len()
    }

    /// `A = A^g + C♯_ν`
    pub fn a_full(&self) -> Matrix {
        &self.ag_direct + &self.csharp_direct
    }

    /// `Ā(β^{♯⊤})`
    pub fn abar_b(&self) -> Vec<f64> {
        self.abar.mul_vec(&self.b)
    }

    /// `g`-orthonormal representation `LᵀXL⁻ᵀ` of a leaf operator, `G = LLᵀ`.
    pub fn to_g_orthonormal(&self, x: &Matrix) -> Matrix {
        let l = self.g_leaf.cholesky().expect("leaf metric is SPD");
        let linv_t = l.inverse().expect("invertible").transpose();
        &(&l.transpose() * x) * &linv_t
    }

    /// `U₁`, `U₂`, `a₃` of the parallel-`β` decomposition
    /// `cA^g = Ā + δI + U₁♭⊗β^{♯⊤} + U₂⊗β^⊤ + a₃ β^⊤⊗β^{♯⊤}`.
    pub fn berwald_pieces(&self, reading: Reading) -> (Vec<f64>, Vec<f64>, f64) {
        let (c, ch) = (self.c(), self.chat());
        let ab = self.abar_b();
        let one_c2 = 1.0 - c * c;
        let degenerate = one_c2 * one_c2 < BETA_TOP_EPS * BETA_TOP_EPS;
        match reading {
            Reading::Printed => {
                let k = c - 2.0 * ch;
                let u1 = scaled(&perp(&axpy(&ab, k, &self.zbar), &self.b), 1.0 / (2.0 * c * ch));
                let u2 = scaled(&perp(&axpy(&ab, c, &self.zbar), &self.b), k / (2.0 * ch));
                let a3 = if degenerate {
                    0.0
                } else {
                    k / (c * ch * one_c2) * dot(&self.b, &self.zbar)
                        - (ch - c) / (c * c * ch * one_c2) * dot(&ab, &self.b)
                };
                (u1, u2, a3)
            }
            Reading::Corrected => {
                // The β(N) = 0 pieces, valid for any β(N).
                let u1 = scaled(&perp(&axpy(&ab, -c, &self.zbar), &self.b), 0.5 / (c * c));
                let u2 = scaled(&perp(&axpy(&ab, c, &self.zbar), &self.b), -0.5);
                let a3 = if degenerate {
                    0.0
                } else {
                    -dot(&self.b, &self.zbar) / (c * one_c2)
                };
                (u1, u2, a3)
            }
        }
    }

    /// `A₁ + A₂ + A₃`
    pub fn berwald_rank_one(&self, reading: Reading) -> (Matrix, Matrix, Matrix) {
        let (u1, u2, a3) = self.berwald_pieces(reading);
        let a1 = outer(&self.b, &u1);
        let a2 = outer(&u2, &self.b);
        let a3m = outer(&self.b, &self.b).scale(a3);
        (a1, a2, a3m)
    }
}

/// Which version of a closed form to evaluate: as printed, or with the
/// coefficient `⟨[u,n],n⟩ = c⟨Ā(β^{♯⊤}) + cZ̄, u⟩` in place of `ĉ⟨…⟩`.
/// The two agree where `β(N) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    Printed,
    Corrected,
}

/// The metric `g` with its connection, plus per-node leaf quantities.
#[derive(Debug, Clone)]
pub struct ExtrinsicBundle {
    pub scheme: Scheme,
    pub bar: BarGeometry,
    pub g: TensorField,
    pub gamma_g: TensorField,
    pub nu: TensorField,
    /// `Z = ∇_ν ν` in coordinates (zero on excised nodes).
    pub z_coord: TensorField,
    /// `∇̄β♯`
    pub grad_beta_sharp: TensorField,
    pub nodes: Vec<Option<NodeExtrinsic>>,
}

impl ExtrinsicBundle {
    pub fn active_nodes(&self) -> impl Iterator<Item = (usize, &NodeExtrinsic)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_ref().map(|n| (i, n)))
    }

    /// `sup |∇̄β♯|` over active nodes: the Berwald residual.
    pub fn berwald_residual(&self) -> f64 {
        self.active_nodes()
            .map(|(i, _)| crate::linalg::max_abs(self.grad_beta_sharp.at(i)))
            .fold(0.0, f64::max)
    }

    /// Maximum over active nodes of `f`.
    pub fn sup(&self, mut f: impl FnMut(&NodeExtrinsic) -> f64) -> f64 {
        self.active_nodes().map(|(_, n)| f(n)).fold(0.0, f64::max)
    }

    /// Oscillation `max − min` of `f` over active nodes.
    pub fn oscillation(&self, mut f: impl FnMut(&NodeExtrinsic) -> f64) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (_, n) in self.active_nodes() {
            let v = f(n);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi < lo {
            0.0
        } else {
            hi - lo
        }
    }

    /// Scalar field with `f` on active nodes and zero elsewhere.
    pub fn scalar_field(&self, mut f: impl FnMut(&NodeExtrinsic) -> f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| n.as_ref().map_or(0.0, &mut f))
            .collect()
    }
}

struct PointData {
    p: Option<RandersPoint>,
    nd: NormalData,
}

fn point_data(m: &FoliatedRandersManifold, node: usize) -> Result<PointData> {
    match m.normal_data(node) {
        Ok((p, nd)) => Ok(PointData { p: Some(p), nd }),
        Err(e) => {
            // Excised nodes may sit on chart singularities; there the β = 0
            // normal data are exact if β vanishes.
            if m.active()[node] || m.beta.at(node).iter().any(|&x| x != 0.0) {
                return Err(Error::Numeric {
                    node,
                    what: alloc::string::ToString::to_string(&e),
                });
            }
            let nv = m.big_n.at(node).to_vec();
            Ok(PointData {
                p: None,
                nd: NormalData {
                    big_n: nv.clone(),
                    n: nv.clone(),
                    nu: nv,
                    c: 1.0,
                    chat: 1.0,
                    beta_top: vec![0.0; m.dim()],
                },
            })
        }
    }
}

/// Projects `x` `g`-orthogonally onto the leaf (`g(ν,ν) = 1`).
fn g_project(g: &Matrix, nu: &[f64], x: &[f64]) -> (Vec<f64>, f64) {
    let t = g.bilinear(x, nu);
    (axpy(x, -t, nu), t)
}

/// Builds `g`, its Christoffel symbols and every per-node leaf quantity.
pub fn build_bundle(m: &FoliatedRandersManifold, bar: BarGeometry) -> Result<ExtrinsicBundle> {
    let scheme = bar.scheme;
    let grid = &m.grid;
    let d = m.dim();
    let len = grid.len();
    let pts: Vec<PointData> = (0..len).map(|i| point_data(m, i)).collect::<Result<_>>()?;

    let scalar = |f: &dyn Fn(&NormalData) -> f64| {
        TensorField::scalar(grid, pts.iter().map(|p| f(&p.nd)).collect())
    };
    let c_f = scalar(&|nd| nd.c);
    let chat_f = scalar(&|nd| nd.chat);
    let cchat_f = scalar(&|nd| nd.c_chat());
    let dc = gradient(&c_f, scheme);
    let dchat = gradient(&chat_f, scheme);
    let dcchat = gradient(&cchat_f, scheme);

    let beta_sharp = TensorField::from_nodes(grid, 1, 0, |i, o| {
        if let Some(p) = &pts[i].p {
            o.copy_from_slice(p.beta_sharp());
        }
    });
    let b_field = TensorField::from_nodes(grid, 1, 0, |i, o| o.copy_from_slice(&pts[i].nd.beta_top));
    let n_field = TensorField::from_nodes(grid, 1, 0, |i, o| o.copy_from_slice(&pts[i].nd.n));
    let nu = TensorField::from_nodes(grid, 1, 0, |i, o| o.copy_from_slice(&pts[i].nd.nu));
    let grad_beta_sharp = covariant_derivative_vector(&beta_sharp, &bar.gamma, scheme);
    let grad_b = covariant_derivative_vector(&b_field, &bar.gamma, scheme);

    let mut g_err = None;
    let g = TensorField::from_nodes(grid, 0, 2, |i, o| match &pts[i].p {
        Some(p) => match randers::fundamental_tensor(p, &pts[i].nd.n) {
            Ok(ft) => o.copy_from_slice(ft.g.as_slice()),
            Err(e) => {
                g_err.get_or_insert((i, e));
            }
        },
        None => o.copy_from_slice(m.a.at(i)),
    });
    if let Some((node, e)) = g_err {
        return Err(Error::Numeric {
            node,
            what: alloc::string::ToString::to_string(&e),
        });
    }
    let gamma_g = christoffel(&g, scheme, m.active())?;
    let grad_nu = covariant_derivative_vector(&nu, &gamma_g, scheme);
    let grad_n = covariant_derivative_vector(&n_field, &gamma_g, scheme);

    let mut z_coord = TensorField::zeros(grid, 1, 0);
    let mut nodes = Vec::with_capacity(len);
    for node in 0..len {
        if !m.active()[node] {
            nodes.push(None);
            continue;
        }
        let p = pts[node].p.as_ref().expect("active nodes carry a Randers point");
        let nd = pts[node].nd.clone();
        let a = m.a.matrix_at(node);
        let frame = &bar.frames[node];
        let gm = g.matrix_at(node);
        let (c, ch) = (nd.c, nd.chat);
        let mdim = d - 1;

        let b = vec_to_frame(&a, frame, &nd.beta_top);
        let abar = bar.abar[node].clone();
        let zc = bar.zbar.at(node);
        let zbar = vec_to_frame(&a, frame, zc);
        let zbar_normal = a.bilinear(zc, &nd.big_n);

        let mb = grad_beta_sharp.matrix_at(node);
        let ainv = a.inverse().expect("SPD");
        let def = (&mb + &(&(&ainv * &mb.transpose()) * &a)).scale(0.5);
        let def_beta = to_frame(&a, frame, &def);
        let nabla_n_b = vec_to_frame(&a, frame, &grad_b.matrix_at(node).mul_vec(&nd.n));

        let cov = |f: &TensorField| f.at(node).to_vec();
        let (dcv, dchv, dcchv) = (cov(&dc), cov(&dchat), cov(&dcchat));
        let frame_cov = |w: &[f64]| (0..mdim).map(|k| dot(w, &frame.column(k))).collect::<Vec<_>>();
        let grad_c = frame_cov(&dcv);
        let grad_chat = frame_cov(&dchv);
        let big_n_c = dot(&dcv, &nd.big_n);
        let big_n_chat = dot(&dchv, &nd.big_n);
        let n_chat = dot(&dchv, &nd.n);
        let n_cchat = dot(&dcchv, &nd.n);
        let b_chat = dot(&dchv, &nd.beta_top);
        let delta = -0.5 / (c * ch * ch) * n_cchat;
        let u = axpy(&scaled(&nabla_n_b, 1.0 / ch), -c, &zbar);

        // Direct route through the connection of g.
        let g_leaf = &(&frame.transpose() * &gm) * frame;
        let mnu = grad_nu.matrix_at(node);
        let mut ag_direct = Matrix::zeros(mdim, mdim);
        for col in 0..mdim {
            let x = mnu.mul_vec(&frame.column(col));
            let (w, _) = g_project(&gm, &nd.nu, &x);
            let coef = vec_to_frame(&a, frame, &w);
            for row in 0..mdim {
                ag_direct[(row, col)] = -coef[row];
            }
        }
        let zraw = mnu.mul_vec(&nd.nu);
        let (zv, z_direct_normal) = g_project(&gm, &nd.nu, &zraw);
        z_coord.at_mut(node).copy_from_slice(&zv);
        let z_direct = vec_to_frame(&a, frame, &zv);
        let g_inv = g_leaf.inverse().ok_or_else(|| Error::Numeric {
            node,
            what: "leaf metric is singular".into(),
        })?;
        let cm = randers::cartan_matrix(p, &nd.nu, &zv)?;
        let csharp_direct = &g_inv * &(&(&frame.transpose() * &cm) * frame);
        let nn = grad_n.matrix_at(node).mul_vec(&nd.n);
        let cmn = randers::cartan_matrix(p, &nd.n, &nn)?;
        let csharp_n_direct = &g_inv * &(&(&frame.transpose() * &cmn) * frame);

        // Closed forms.
        let ab = abar.mul_vec(&b);
        let bu = dot(&b, &u);
        let ident = Matrix::identity(mdim);
        let common = &(&abar + &ident.scale(delta)) + &def_beta.scale(1.0 / ch);
        let def_b = def_beta.mul_vec(&b);
        let ag_initial = {
            let left = axpy(&u, -1.0, &ab);
            let mut w = axpy(&ab, -dot(&ab, &b), &b);
            w = axpy(&w, 2.0 / ch, &def_b);
            w = axpy(&w, 1.0, &u);
            w = axpy(&w, bu, &b);
            let t = &(&common + &outer(&left, &b).scale(0.5)) + &outer(&b, &w).scale(0.5 / (c * c));
            t.scale(1.0 / c)
        };
        let ag_perp = if sqrt(dot(&b, &b)) < BETA_TOP_EPS {
            ag_initial.clone()
        } else {
            let left = perp(&axpy(&u, -1.0, &ab), &b);
            let w = axpy(&scaled(&def_b, 2.0 / ch), 1.0, &perp(&axpy(&u, 1.0, &ab), &b));
            let k = bu / (c * c * (1.0 - c * c));
            let t = &(&(&common + &outer(&left, &b).scale(0.5)) + &outer(&b, &w).scale(0.5 / (c * c)))
                + &outer(&b, &b).scale(k);
            t.scale(1.0 / c)
        };
        let ag_unreduced = {
            let one_c2 = 1.0 - c * c;
            let ncc = n_cchat;
            let abz = axpy(&ab, c, &zbar);
            // u ↦ u − β(u)B
            let pb = &ident - &outer(&b, &b);
            let mut t = &abar + &pb.scale(-0.5 / (c * ch * ch) * ncc);
            t = &t + &def_beta.scale(1.0 / ch);
            // ½ĉ⁻¹(β(u) ∇̄_nB + ⟨∇̄_nB,u⟩ B)
            t = &t + &(&outer(&nabla_n_b, &b) + &outer(&b, &nabla_n_b)).scale(0.5 / ch);
            t = &t - &(&outer(&b, &abz) + &outer(&abz, &b)).scale(0.5);
            // ½c⁻²(…)B with the bracket a covector in u.
            let mut w = scaled(&def_b, 2.0 / ch);
            w = axpy(&w, 2.0, &ab);
            w = axpy(&w, -c / (ch * ch) * ncc, &b);
            w = axpy(&w, dot(&nabla_n_b, &b) / ch, &b);
            w = axpy(&w, one_c2 / ch, &nabla_n_b);
            w = axpy(&w, -one_c2, &abz);
            w = axpy(&w, -dot(&abz, &b), &b);
            t = &t + &outer(&b, &w).scale(0.5 / (c * c));
            t.scale(1.0 / c)
        };
        let ag_corrected = {
            let kappa = c / ch;
            let v = axpy(&scaled(&nabla_n_b, 1.0 / ch), -kappa, &axpy(&ab, c, &zbar));
            let mut w = axpy(&v, 2.0, &ab);
            w = axpy(&w, 2.0 / ch, &def_b);
            w = axpy(&w, dot(&v, &b), &b);
            let t = &(&common + &outer(&v, &b).scale(0.5)) + &outer(&b, &w).scale(0.5 / (c * c));
            t.scale(1.0 / c)
        };
        let z_formula = {
            let up = axpy(&zbar, -1.0 / ch, &grad_chat);
            let mut z = scaled(&zbar, 1.0 / (c * ch));
            z = axpy(&z, -1.0 / (c * ch * ch), &grad_chat);
            axpy(&z, dot(&b, &up) / (c * c * c * ch), &b)
        };
        let raise = |cbar: &Matrix| {
            let bc: Vec<f64> = (0..mdim).map(|j| dot(&b, &cbar.column(j))).collect();
            cbar + &outer(&b, &bc).scale(1.0 / (c * c))
        };
        let csharp_corrected = {
            let up = axpy(&zbar, -1.0 / ch, &grad_chat);
            let bup = dot(&b, &up);
            let two = &(&outer(&up, &b) + &outer(&b, &up)) + &(&ident - &outer(&b, &b)).scale(bup / (c * c));
            raise(&two.scale(0.5))
        };
        let csharp_printed = {
            let bz = dot(&b, &zbar);
            let k1 = (ch - 2.0 / c) * b_chat + (c - 1.0 / ch) * n_chat;
            let k2 = (2.0 / c - 3.0 * ch) * b_chat + (1.0 / ch - 3.0 * c) * n_chat;
            let k3 = c * ch - ch * ch + 2.0 * ch / c - 1.0;
            let k4 = 3.0 * ch * ch - 3.0 * c * ch - 2.0 * ch / c + 1.0;
            let mut two = &outer(&zbar, &b) + &outer(&b, &zbar);
            two = &two - &(&outer(&grad_c, &b) + &outer(&b, &grad_c)).scale(1.0 / ch);
            two = &two + &ident.scale((k1 + k3 * bz) / (c * ch));
            two = &two + &outer(&b, &b).scale((k2 + k4 * bz) / (c * ch));
            raise(&two.scale(0.5))
        };

        // Volume and determinant identities.
        let mp2 = (d + 1) as i32;
        let det_g = gm.det();
        let det_g_rel = (det_g - crate::float::powi(nd.c_chat(), mp2) * a.det()).abs() / det_g.abs();
        let sigma_f = randers::busemann_hausdorff_factor(p) * sqrt(a.det());
        let tau = randers::distortion(p, &nd.nu)?;
        let etau = crate::float::exp(tau);
        let etau_rel = (sqrt(det_g) / sigma_f - etau).abs() / etau;
        let tau_closed_gap = randers::distortion_at_normal(&nd, d - 1) - tau;
        let g_display_gap = g_from_normal_display(p, &nd).max_abs_diff(&gm);
        let beta_norm2 = p.beta_norm() * p.beta_norm();

        nodes.push(Some(NodeExtrinsic {
            nd,
            b,
            beta_norm2,
            g_leaf,
            abar,
            zbar,
            zbar_normal,
            def_beta,
            nabla_n_b,
            grad_c,
            grad_chat,
            big_n_c,
            big_n_chat,
            n_chat,
            n_cchat,
            b_chat,
            delta,
            u,
            ag_direct,
            z_direct,
            z_direct_normal,
            csharp_direct,
            csharp_n_direct,
            ag_initial,
            ag_perp,
            ag_unreduced,
            ag_corrected,
            z_formula,
            csharp_printed,
            csharp_corrected,
            det_g_rel,
            etau_rel,
            tau_closed_gap,
            g_display_gap,
        }));
    }
    Ok(ExtrinsicBundle {
        scheme,
        bar,
        g,
        gamma_g,
        nu,
        z_coord,
        grad_beta_sharp,
        nodes,
    })
}

/// Pointwise sup-norms of the Riccati identity
/// `R̄_N = (Def_Z̄)^⊤ + ∇̄_N Ā − Ā² − Z̄♭⊗Z̄` on the leaves.
pub fn riccati_residuals(m: &FoliatedRandersManifold, bar: &BarGeometry, curv: &CurvatureBar) -> Vec<f64> {
    let scheme = bar.scheme;
    let grad_z = covariant_derivative_vector(&bar.zbar, &bar.gamma, scheme);
    let nabla_n_s = covariant_derivative_11_along(&bar.abar_coord, &bar.gamma, &m.big_n, scheme);
    (0..m.grid.len())
        .map(|node| {
            let a = m.a.matrix_at(node);
            let frame = &bar.frames[node];
            let mz = grad_z.matrix_at(node);
            let ainv = a.inverse().expect("SPD");
            let def = (&mz + &(&(&ainv * &mz.transpose()) * &a)).scale(0.5);
            let zf = vec_to_frame(&a, frame, bar.zbar.at(node));
            let ab = &bar.abar[node];
            let rhs = &(&(&to_frame(&a, frame, &def) + &to_frame(&a, frame, &nabla_n_s.matrix_at(node)))
                - &(ab * ab))
                - &outer(&zf, &zf);
            rhs.max_abs_diff(&curv.jacobi_n[node])
        })
        .collect()
}

/// Asymmetry of `⟨∇̄_u Z̄, v⟩` on the leaves, per node.
pub fn codazzi_bar_residuals(m: &FoliatedRandersManifold, bar: &BarGeometry) -> Vec<f64> {
    let grad_z = covariant_derivative_vector(&bar.zbar, &bar.gamma, bar.scheme);
    (0..m.grid.len())
        .map(|node| {
            if !m.active()[node] {
                return 0.0;
            }
            let a = m.a.matrix_at(node);
            let f = to_frame(&a, &bar.frames[node], &grad_z.matrix_at(node));
            f.max_abs_diff(&f.transpose())
        })
        .collect()
}

/// Asymmetry of `g(∇_u Z, v)` on the leaves, per node.
pub fn codazzi_g_residuals(m: &FoliatedRandersManifold, bundle: &ExtrinsicBundle) -> Vec<f64> {
    let grad_z = covariant_derivative_vector(&bundle.z_coord, &bundle.gamma_g, bundle.scheme);
    (0..m.grid.len())
        .map(|node| {
            if !m.active()[node] {
                return 0.0;
            }
            let e = &bundle.bar.frames[node];
            let gm = bundle.g.matrix_at(node);
            let f = &(&e.transpose() * &(&gm * &grad_z.matrix_at(node))) * e;
            f.max_abs_diff(&f.transpose())
        })
        .collect()
}

/// `R_ν` on the leaves from the curvature of `a`, valid for Berwald
/// structures where the Finsler and Riemannian curvatures agree.
pub fn jacobi_nu_berwald(
    m: &FoliatedRandersManifold,
    bundle: &ExtrinsicBundle,
    curv: &CurvatureBar,
    node: usize,
) -> Matrix {
    let d = m.dim();
    let rv = curv.riemann.at(node);
    let nu = bundle.nu.at(node);
    let op = Matrix::from_fn(d, d, |i, k| {
        let mut s = 0.0;
        for j in 0..d {
            for l in 0..d {
                s += rv[((i * d + j) * d + k) * d + l] * nu[j] * nu[l];
            }
        }
        s
    });
    let a = m.a.matrix_at(node);
    let gm = bundle.g.matrix_at(node);
    let e = &bundle.bar.frames[node];
    let mdim = d - 1;
    let mut out = Matrix::zeros(mdim, mdim);
    for col in 0..mdim {
        let (w, _) = g_project(&gm, nu, &op.mul_vec(&e.column(col)));
        let coef = vec_to_frame(&a, e, &w);
        for row in 0..mdim {
            out[(row, col)] = coef[row];
        }
    }
    out
}

/// Sup over active nodes of the largest component; used by hypothesis gates.
pub fn sup_grad(field: &TensorField, active: &[bool]) -> f64 {
    (0..field.grid().len())
        .filter(|&i| active[i])
        .map(|i| crate::linalg::max_abs(field.at(i)))
        .fold(0.0, f64::max)
}
