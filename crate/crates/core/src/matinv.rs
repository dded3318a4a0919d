//! Invariants `σ_λ(A₁,…,A_k)` of matrix tuples.
//!
//! `σ_λ` is the coefficient of `t₁^λ₁ ⋯ t_k^λ_k` in `det(I + Σ tᵢAᵢ)`. The main
//! route computes that determinant exactly in the truncated polynomial ring
//! `ℝ[t]/(t₁^{λ₁+1},…,t_k^{λ_k+1})` by Gaussian elimination. The constant part
//! of the matrix is `I`, so every pivot is a unit of the ring and no pivoting
//! is needed.
//!
//! [`sigma_multi_interp`] is an independent route that samples the determinant
//! on the integer grid `{0,…,m}^k` and interpolates. It is used by the
//! identity suite as an oracle.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::verify::{ResidualReport, Verdict};

/// Multi-index `λ = (λ₁,…,λ_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(parts: &[usize]) -> Self {
        MultiIndex(parts.to_vec())
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|λ| = Σ λᵢ`
    pub fn weight(&self) -> usize {
        self.0.iter().sum()
    }

    /// All multi-indices of length `k` with `|λ| = w`, in lexicographic order.
    pub fn all_of_weight(k: usize, w: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0usize; k];
        fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if i + 1 == cur.len() {
                cur[i] = left;
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in (0..=left).rev() {
                cur[i] = v;
                rec(i + 1, left - v, cur, out);
            }
        }
        if k == 0 {
            if w == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(0, w, &mut cur, &mut out);
        out
    }
}

/// Dense element of `ℝ[t₁..t_k]/(tᵢ^{dᵢ+1})`, row-major over exponents.
#[derive(Clone)]
struct Trunc<'a> {
    degs: &'a [usize],
    c: Vec<f64>,
}

impl<'a> Trunc<'a> {
    fn size(degs: &[usize]) -> usize {
        degs.iter().map(|d| d + 1).product()
    }

    fn zero(degs: &'a [usize]) -> Self {
        Trunc {
            degs,
            c: vec![0.0; Self::size(degs)],
        }
    }

    fn exps(&self, mut flat: usize, out: &mut [usize]) {
        for i in (0..self.degs.len()).rev() {
            let b = self.degs[i] + 1;
            out[i] = flat % b;
            flat /= b;
        }
    }

    fn flat(&self, e: &[usize]) -> usize {
        let mut f = 0;
        for (i, &ei) in e.iter().enumerate() {
            f = f * (self.degs[i] + 1) + ei;
        }
        f
    }

    fn mul(&self, rhs: &Trunc<'a>) -> Trunc<'a> {
        let k = self.degs.len();
        let mut out = Trunc::zero(self.degs);
        let mut ea = vec![0usize; k];
        let mut eb = vec![0usize; k];
        let mut es = vec![0usize; k];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            self.exps(i, &mut ea);
            'b: for (j, &b) in rhs.c.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                rhs.exps(j, &mut eb);
                for d in 0..k {
                    es[d] = ea[d] + eb[d];
                    if es[d] > self.degs[d] {
                        continue 'b;
                    }
                }
                let f = out.flat(&es);
                out.c[f] += a * b;
            }
        }
        out
    }

    /// Inverse of a unit `1 + x` (constant term must be nonzero).
    fn inverse(&self) -> Trunc<'a> {
        let c0 = self.c[0];
        // (c0 (1 + y))⁻¹ = c0⁻¹ Σ (-y)^j, nilpotent of order ≤ Σ dᵢ.
        let mut y = self.clone();
        for v in y.c.iter_mut() {
            *v /= -c0;
        }
        y.c[0] = 0.0;
        let mut term = Trunc::zero(self.degs);
        term.c[0] = 1.0;
        let mut acc = term.clone();
        let order: usize = self.degs.iter().sum();
        for _ in 0..order {
            term = term.mul(&y);
            for (a, t) in acc.c.iter_mut().zip(&term.c) {
                *a += t;
            }
        }
        for v in acc.c.iter_mut() {
            *v /= c0;
        }
        acc
    }
}

fn check_tuple(mats: &[Matrix], lambda: &MultiIndex) -> Result<usize> {
    if mats.len() != lambda.len() {
        return Err(Error::Shape {
            expected: mats.len(),
            found: lambda.len(),
        });
    }
    let m = match mats.first() {
        Some(a) => a.rows(),
        None => return Ok(0),
    };
    for a in mats {
        if !a.is_square() {
            return Err(Error::Shape {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        if a.rows() != m {
            return Err(Error::Shape {
                expected: m,
                found: a.rows(),
            });
        }
    }
    if lambda.weight() > m {
        return Err(Error::Domain {
            what: "|lambda|",
            value: lambda.weight(),
            max: m,
        });
    }
    Ok(m)
}

/// `σ_λ(A₁,…,A_k)`, exact up to rounding.
pub fn sigma_multi(mats: &[Matrix], lambda: &MultiIndex) -> Result<f64> {
    let m = check_tuple(mats, lambda)?;
    if mats.is_empty() {
        return Ok(1.0);
    }
    // Variables with λᵢ = 0 drop out entirely.
    let mut degs = Vec::new();
    let mut used = Vec::new();
    for (i, &l) in lambda.parts().iter().enumerate() {
        if l > 0 {
            degs.push(l);
            used.push(i);
        }
    }
    if used.is_empty() {
        return Ok(1.0);
    }
    if used.len() == 1 {
        return Ok(sigma_all(&mats[used[0]])[degs[0]]);
    }
    let degs = degs;
    let proto = Trunc::zero(&degs);
    let mut unit = vec![0usize; degs.len()];
    let mut entries: Vec<Trunc> = Vec::with_capacity(m * m);
    for r in 0..m {
        for c in 0..m {
            let mut e = proto.clone();
            if r == c {
                e.c[0] = 1.0;
            }
            for (v, &i) in used.iter().enumerate() {
                unit.iter_mut().for_each(|x| *x = 0);
                unit[v] = 1;
                let f = e.flat(&unit);
                e.c[f] += mats[i][(r, c)];
            }
            entries.push(e);
        }
    }
    let mut det = proto.clone();
    det.c[0] = 1.0;
    for k in 0..m {
        let pivot = entries[k * m + k].clone();
        det = det.mul(&pivot);
        let inv = pivot.inverse();
        for i in k + 1..m {
            let f = entries[i * m + k].mul(&inv);
            if f.c.iter().all(|&x| x == 0.0) {
                continue;
            }
            for j in k + 1..m {
                let p = f.mul(&entries[k * m + j]);
                let e = &mut entries[i * m + j];
                for (a, b) in e.c.iter_mut().zip(&p.c) {
                    *a -= b;
                }
            }
        }
    }
    Ok(*det.c.last().expect("nonempty ring"))
}

/// `σ_k(A)`, the degree-`k` coefficient of `det(I + tA)`.
pub fn sigma_single(a: &Matrix, k: usize) -> Result<f64> {
    if k > a.rows() {
        return Err(Error::Domain {
            what: "k",
            value: k,
            max: a.rows(),
        });
    }
    Ok(sigma_all(a)[k])
}

/// All `σ₀(A),…,σ_m(A)` by the Faddeev–LeVerrier recursion.
pub fn sigma_all(a: &Matrix) -> Vec<f64> {
    let m = a.rows();
    let mut out = Vec::with_capacity(m + 1);
    out.push(1.0);
    // Coefficients p_k of det(λI − A) = Σ p_k λ^{m−k}; σ_k = (−1)^k p_k.
    let mut mk = Matrix::identity(m);
    let mut p = 1.0;
    for k in 1..=m {
        if k > 1 {
            mk = &(a * &mk) + &Matrix::identity(m).scale(p);
        }
        p = -(a * &mk).trace() / k as f64;
        out.push(if k % 2 == 0 { p } else { -p });
    }
    out
}

/// Coefficients of `det(I + Σ tᵢAᵢ)` by sampling on `{0,…,m}^k` and solving the
/// tensor-product Vandermonde system one axis at a time. Returned row-major over
/// exponents `(e₁,…,e_k)`, each `eᵢ ∈ 0..=m`.
pub fn det_polynomial_interp(mats: &[Matrix]) -> Result<Vec<f64>> {
    let k = mats.len();
    let m = match mats.first() {
        Some(a) => a.rows(),
        None => return Ok(vec![1.0]),
    };
    for a in mats {
        if a.rows() != m || a.cols() != m {
            return Err(Error::Shape {
                expected: m,
                found: a.rows(),
            });
        }
    }
    let n = m + 1;
    let total = n.pow(k as u32);
    let mut vals = vec![0.0; total];
    let mut e = vec![0usize; k];
    for (flat, v) in vals.iter_mut().enumerate() {
        let mut f = flat;
        for i in (0..k).rev() {
            e[i] = f % n;
            f /= n;
        }
        let mut mat = Matrix::identity(m);
        for (i, a) in mats.iter().enumerate() {
            mat = &mat + &a.scale(e[i] as f64);
        }
        *v = mat.det();
    }
    let vander = Matrix::from_fn(n, n, |i, j| crate::float::powi(i as f64, j as i32));
    let stride_of = |axis: usize| n.pow((k - 1 - axis) as u32);
    for axis in 0..k {
        let stride = stride_of(axis);
        for base in 0..total {
            if (base / stride) % n != 0 {
                continue;
            }
            let line: Vec<f64> = (0..n).map(|j| vals[base + j * stride]).collect();
            let coef = vander
                .solve(&line)
                .ok_or_else(|| Error::Precondition(String::from("singular Vandermonde")))?;
            for j in 0..n {
                vals[base + j * stride] = coef[j];
            }
        }
    }
    Ok(vals)
}

/// `σ_λ` read off [`det_polynomial_interp`]. Independent of [`sigma_multi`].
pub fn sigma_multi_interp(mats: &[Matrix], lambda: &MultiIndex) -> Result<f64> {
    let m = check_tuple(mats, lambda)?;
    let coeffs = det_polynomial_interp(mats)?;
    let n = m + 1;
    let flat = lambda.parts().iter().fold(0, |f, &l| f * n + l);
    Ok(coeffs[flat])
}

/// Newton transformation `T_r(A)`: `T₀ = I`, `T_r = σ_r(A) I − A T_{r−1}(A)`.
pub fn newton_transform(a: &Matrix, r: usize) -> Result<Matrix> {
    let m = a.rows();
    if r > m {
        return Err(Error::Domain {
            what: "r",
            value: r,
            max: m,
        });
    }
    let sig = sigma_all(a);
    let mut t = Matrix::identity(m);
    for s in sig.iter().take(r + 1).skip(1) {
        t = &Matrix::identity(m).scale(*s) - &(a * &t);
    }
    Ok(t)
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    Matrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_rank_one(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::outer(&u, &v)
}

fn random_lambda(rng: &mut ChaCha8Rng, k: usize, max_weight: usize) -> MultiIndex {
    let w = rng.gen_range(0..=max_weight);
    let mut parts = vec![0usize; k];
    for _ in 0..w {
        parts[rng.gen_range(0..k)] += 1;
    }
    MultiIndex(parts)
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

struct Tally {
    name: &'static str,
    worst: f64,
    cases: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            worst: 0.0,
            cases: 0,
        }
    }

    fn add(&mut self, r: f64) {
        self.cases += 1;
        if !(r <= self.worst) {
            self.worst = r;
        }
    }
}

fn s(mats: &[Matrix], parts: &[usize]) -> f64 {
    sigma_multi(mats, &MultiIndex::new(parts)).expect("valid tuple")
}

/// Samples random tuples and checks the algebraic identities satisfied by `σ_λ`.
///
/// One report per identity; `value` is the largest absolute residual seen
/// (for the oracle comparison the residual is relative to the largest
/// coefficient of the determinant polynomial).
pub fn verify_appendix_identities(seed: u64, trials: usize, m_max: usize) -> Vec<ResidualReport> {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = Tally::new("sigma-oracle");
    let mut zero = Tally::new("zero-matrix");
    let mut perm = Tally::new("permutation");
    let mut ident = Tally::new("identity");
    let mut merge = Tally::new("merge");
    let mut linear = Tally::new("linearity");
    let mut conj = Tally::new("conjugation");
    let mut skl = Tally::new("sigma-k-l");
    let mut aplusb = Tally::new("rank-one-update");
    let mut newton = Tally::new("newton-trace");
    let m_max = m_max.max(2);
    let trials = trials.max(1);

    for _ in 0..trials {
        let m = rng.gen_range(2..=m_max);
        let k = rng.gen_range(1..=3usize);
        let mats: Vec<Matrix> = (0..k).map(|_| random_matrix(&mut rng, m)).collect();
        let lam = random_lambda(&mut rng, k, m);

        // Oracle equivalence, relative to the largest coefficient.
        let coeffs = det_polynomial_interp(&mats).expect("square tuple");
        let scale = coeffs.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let n = m + 1;
        let flat = lam.parts().iter().fold(0, |f, &l| f * n + l);
        oracle.add((sigma_multi(&mats, &lam).expect("valid") - coeffs[flat]).abs() / scale);
        // The single-matrix recursion against the truncated determinant.
        for (j, sj) in sigma_all(&mats[0]).iter().enumerate() {
            let viadet = sigma_multi(&mats[..1], &MultiIndex(vec![j])).expect("j ≤ m");
            oracle.add((sj - viadet).abs() / (1.0 + viadet.abs()));
        }

        // (I)
        let mut with_zero = mats.clone();
        with_zero[0] = Matrix::zeros(m, m);
        let mut lam0 = lam.clone();
        if lam0.0[0] == 0 {
            lam0.0[0] = 1;
            if lam0.weight() > m {
                lam0.0[0] = 0;
            }
        }
        if lam0.0[0] > 0 {
            zero.add(s(&with_zero, lam0.parts()).abs());
        }
        let mut lam_first0 = lam.clone();
        lam_first0.0[0] = 0;
        let rest = if k > 1 {
            s(&mats[1..], &lam_first0.parts()[1..])
        } else {
            1.0
        };
        zero.add((s(&mats, lam_first0.parts()) - rest).abs());

        // (II)
        let mut order: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let permuted: Vec<Matrix> = order.iter().map(|&i| mats[i].clone()).collect();
        let lam_perm: Vec<usize> = order.iter().map(|&i| lam.0[i]).collect();
        perm.add((s(&permuted, &lam_perm) - s(&mats, lam.parts())).abs());

        // (III)
        let mut with_id = mats.clone();
        with_id[0] = Matrix::identity(m);
        let hat_w: usize = lam.parts()[1..].iter().sum();
        let rhs = if k > 1 {
            s(&mats[1..], &lam.parts()[1..])
        } else {
            1.0
        };
        ident.add((s(&with_id, lam.parts()) - binom(m - hat_w, lam.0[0]) * rhs).abs());

        // (IV)
        if k >= 2 {
            let mut dup = mats.clone();
            dup[1] = dup[0].clone();
            let mut merged_l = vec![lam.0[0] + lam.0[1]];
            merged_l.extend_from_slice(&lam.parts()[2..]);
            let mut merged_m = vec![mats[0].clone()];
            merged_m.extend_from_slice(&mats[2..]);
            let lhs = s(&dup, lam.parts());
            let rhs = binom(lam.0[0] + lam.0[1], lam.0[0]) * s(&merged_m, &merged_l);
            merge.add((lhs - rhs).abs());
        }

        // (V): additivity at λ₁ = 1 and homogeneity.
        let b = random_matrix(&mut rng, m);
        let mut lam1 = lam.clone();
        lam1.0[0] = 1;
        if lam1.weight() <= m {
            let mut sum_t = mats.clone();
            sum_t[0] = &mats[0] + &b;
            let mut b_t = mats.clone();
            b_t[0] = b.clone();
            let lhs = s(&sum_t, lam1.parts());
            let rhs = s(&mats, lam1.parts()) + s(&b_t, lam1.parts());
            linear.add((lhs - rhs).abs());
        }
        let a_scale = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut scaled_t = mats.clone();
        scaled_t[0] = mats[0].scale(a_scale);
        let lhs = s(&scaled_t, lam.parts());
        let rhs = crate::float::powi(a_scale, lam.0[0] as i32) * s(&mats, lam.parts());
        linear.add((lhs - rhs).abs());

        // Conjugation invariance, relative.
        let mut q = random_matrix(&mut rng, m);
        for i in 0..m {
            q[(i, i)] += 2.0;
        }
        if let Some(qi) = q.inverse() {
            let conj_t: Vec<Matrix> = mats.iter().map(|a| &(&q * a) * &qi).collect();
            let base = s(&mats, lam.parts());
            conj.add((s(&conj_t, lam.parts()) - base).abs() / base.abs().max(1.0));
        }

        // σ_{k,l}(B,C) = σ_kσ_l − Σ σ_{k−i,l−i,i}(B,C,BC)
        let bm = &mats[0];
        let cm = random_matrix(&mut rng, m);
        let kk = rng.gen_range(1..m);
        let ll = rng.gen_range(1..=(m - kk));
        let bc = bm * &cm;
        let triple = [bm.clone(), cm.clone(), bc];
        let mut rhs = s(core::slice::from_ref(bm), &[kk]) * s(core::slice::from_ref(&cm), &[ll]);
        for i in 1..=kk.min(ll) {
            rhs -= s(&triple, &[kk - i, ll - i, i]);
        }
        skl.add((s(&[bm.clone(), cm.clone()], &[kk, ll]) - rhs).abs());

        // σ_k(C + D + A₁ + … + A_s) with rank-one Aᵢ.
        let c_mat = random_matrix(&mut rng, m);
        let d_mat = if rng.gen_bool(0.3) {
            Matrix::zeros(m, m)
        } else {
            random_matrix(&mut rng, m)
        };
        let s_count = rng.gen_range(1..=3usize);
        let ones: Vec<Matrix> = (0..s_count).map(|_| random_rank_one(&mut rng, m)).collect();
        let kq = rng.gen_range(1..=m);
        let mut total = &c_mat + &d_mat;
        for a in &ones {
            total = &total + a;
        }
        let lhs = sigma_single(&total, kq).expect("k ≤ m");
        let pair = [c_mat.clone(), d_mat.clone()];
        let mut rhs = sigma_single(&c_mat, kq).expect("k ≤ m");
        for j in 1..=kq {
            rhs += s(&pair, &[kq - j, j]);
        }
        let mut partial = &c_mat + &d_mat;
        for a in &ones {
            rhs += (&newton_transform(&partial, kq - 1).expect("r ≤ m") * a).trace();
            partial = &partial + a;
        }
        aplusb.add((lhs - rhs).abs());

        // tr T_r = (m − r) σ_r
        let a0 = &mats[0];
        for r in 0..=m {
            let t = newton_transform(a0, r).expect("r ≤ m");
            let want = (m - r) as f64 * sigma_single(a0, r).expect("r ≤ m");
            newton.add((t.trace() - want).abs());
        }
    }

    [
        oracle, zero, perm, ident, merge, linear, conj, skl, aplusb, newton,
    ]
    .into_iter()
    .map(|t| {
        let verdict = if t.worst <= TOL {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        ResidualReport {
            formula_id: format!("appendix-{}", t.name),
            example: format!("random-matrices(seed={seed}, cases={})", t.cases),
            resolution: vec![m_max],
            value: t.worst,
            expected: 0.0,
            tolerance: TOL,
            verdict,
            convergence: Vec::new(),
            hypotheses: Vec::new(),
            notes: Vec::new(),
        }
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_matrix_values() {
        assert!((sigma_single(&Matrix::identity(3), 2).unwrap() - 3.0).abs() < 1e-14);
        assert!((sigma_single(&Matrix::from_diag(&[1.0, 2.0]), 2).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(sigma_single(&Matrix::identity(3), 0).unwrap(), 1.0);
        assert!(matches!(
            sigma_single(&Matrix::identity(2), 3),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn mixed_pair_without_cross_term() {
        let a1 = Matrix::from_diag(&[1.0, 2.0]);
        let a2 = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let v = sigma_multi(&[a1, a2], &MultiIndex::new(&[1, 1])).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn mismatched_dims_is_shape_error() {
        let r = sigma_multi(
            &[Matrix::identity(2), Matrix::identity(3)],
            &MultiIndex::new(&[1, 1]),
        );
        assert!(matches!(r, Err(Error::Shape { .. })));
    }

    #[test]
    fn newton_examples() {
        let t = newton_transform(&Matrix::from_diag(&[1.0, 2.0]), 1).unwrap();
        assert!(t.max_abs_diff(&Matrix::from_diag(&[2.0, 1.0])) < 1e-14);
        assert!(newton_transform(&Matrix::identity(2), 3).is_err());
    }

    #[test]
    fn weight_enumeration() {
        let all = MultiIndex::all_of_weight(3, 2);
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|l| l.weight() == 2));
    }
}
