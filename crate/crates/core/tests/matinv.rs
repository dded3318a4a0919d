use std::collections::BTreeMap;

use proptest::prelude::*;
use randers_foliate_core::matinv::{
    newton_transform, sigma_all, sigma_multi, sigma_single, verify_appendix_identities, MultiIndex,
};
use randers_foliate_core::verify::Verdict;
use randers_foliate_core::Matrix;

// Polynomials in k variables, keyed by exponent vectors.
type Poly = BTreeMap<Vec<usize>, f64>;

fn poly_mul(p: &Poly, q: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ep, cp) in p {
        for (eq, cq) in q {
            let e: Vec<usize> = ep.iter().zip(eq).map(|(a, b)| a + b).collect();
            *out.entry(e).or_insert(0.0) += cp * cq;
        }
    }
    out
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if left.is_empty() {
            out.push((prefix.clone(), sign));
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            prefix.push(v);
            rec(prefix, left, if i % 2 == 0 { sign } else { -sign }, out);
            prefix.pop();
            left.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), 1.0, &mut out);
    out
}

/// Coefficient of t^λ in det(I + Σ tᵢAᵢ), expanded with the Leibniz formula.
fn leibniz_sigma(mats: &[Matrix], lambda: &[usize]) -> f64 {
    let m = mats[0].rows();
    let k = mats.len();
    let entry = |i: usize, j: usize| {
        let mut p = Poly::new();
        if i == j {
            p.insert(vec![0; k], 1.0);
        }
        for (v, a) in mats.iter().enumerate() {
            let mut e = vec![0; k];
            e[v] = 1;
            *p.entry(e).or_insert(0.0) += a[(i, j)];
        }
        p
    };
    let mut total = 0.0;
    for (perm, sign) in permutations(m) {
        let mut prod = Poly::from([(vec![0; k], 1.0)]);
        for (i, &j) in perm.iter().enumerate() {
            prod = poly_mul(&prod, &entry(i, j));
        }
        total += sign * prod.get(lambda).copied().unwrap_or(0.0);
    }
    total
}

fn matrix(m: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0..1.0f64, m * m).prop_map(move |v| Matrix::from_row_slice(m, m, &v))
}

fn tuple_and_index() -> impl Strategy<Value = (Vec<Matrix>, Vec<usize>)> {
    (2usize..=5, 1usize..=3)
        .prop_flat_map(|(m, k)| {
            (
                prop::collection::vec(matrix(m), k),
                prop::collection::vec(0usize..=m, k),
                Just(m),
            )
        })
        .prop_filter_map("weight at most m", |(mats, mut lam, m)| {
            // Scale the index down so its weight fits.
            while lam.iter().sum::<usize>() > m {
                let i = lam.iter().enumerate().max_by_key(|(_, v)| **v).map(|(i, _)| i).unwrap();
                lam[i] -= 1;
            }
            Some((mats, lam))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sigma_multi_matches_leibniz_expansion((mats, lam) in tuple_and_index()) {
        let got = sigma_multi(&mats, &MultiIndex::new(&lam)).unwrap();
        let want = leibniz_sigma(&mats, &lam);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{got} vs {want}");
    }

    #[test]
    fn sigma_all_matches_single_and_multi(a in (2usize..=5).prop_flat_map(matrix)) {
        let all = sigma_all(&a);
        prop_assert_eq!(all.len(), a.rows() + 1);
        for (k, s) in all.iter().enumerate() {
            let single = sigma_single(&a, k).unwrap();
            let multi = sigma_multi(std::slice::from_ref(&a), &MultiIndex::new(&[k])).unwrap();
            prop_assert!((s - single).abs() <= 1e-10 * (1.0 + s.abs()));
            prop_assert!((s - multi).abs() <= 1e-10 * (1.0 + s.abs()));
        }
        prop_assert!((all[a.rows()] - a.det()).abs() <= 1e-10 * (1.0 + a.det().abs()));
        prop_assert!((all[1] - a.trace()).abs() <= 1e-12);
    }

    #[test]
    fn triangular_matrices_give_elementary_symmetric_polynomials(
        diag in prop::collection::vec(-2.0..2.0f64, 2..=5),
        upper in prop::collection::vec(-1.0..1.0f64, 25),
    ) {
        let m = diag.len();
        let a = Matrix::from_fn(m, m, |i, j| if i == j { diag[i] } else if i < j { upper[i * 5 + j] } else { 0.0 });
        // e_k(d) from the coefficients of Π(1 + dᵢt).
        let mut e = vec![1.0];
        for d in &diag {
            let mut next = vec![0.0; e.len() + 1];
            for (k, c) in e.iter().enumerate() {
                next[k] += c;
                next[k + 1] += c * d;
            }
            e = next;
        }
        for (k, s) in sigma_all(&a).iter().enumerate() {
            prop_assert!((s - e[k]).abs() <= 1e-10 * (1.0 + e[k].abs()));
        }
    }

    #[test]
    fn newton_transformation_traces(a in (2usize..=5).prop_flat_map(matrix)) {
        let m = a.rows();
        let s = sigma_all(&a);
        for r in 0..m {
            let t = newton_transform(&a, r).unwrap();
            let mf = (m - r) as f64;
            prop_assert!((t.trace() - mf * s[r]).abs() <= 1e-9 * (1.0 + s[r].abs()));
            let ta = &t * &a;
            prop_assert!((ta.trace() - (r + 1) as f64 * s[r + 1]).abs() <= 1e-9 * (1.0 + s[r + 1].abs()));
        }
        // Cayley–Hamilton.
        prop_assert!(newton_transform(&a, m).unwrap().max_abs() <= 1e-9);
    }

    #[test]
    fn sigma_is_conjugation_invariant(
        (a, p) in (2usize..=4).prop_flat_map(|m| (matrix(m), matrix(m))),
    ) {
        let shifted = &p + &Matrix::identity(p.rows()).scale(3.0);
        let inv = shifted.inverse().unwrap();
        let conj = &(&inv * &a) * &shifted;
        for (x, y) in sigma_all(&a).iter().zip(sigma_all(&conj)) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn identity_suite_passes_for_several_seeds() {
    for seed in [0u64, 1, 42, 2024] {
        let reports = verify_appendix_identities(seed, 200, 5);
        assert!(reports.len() >= 9);
        for r in &reports {
            assert_eq!(r.verdict, Verdict::Pass, "{} residual {:e}", r.formula_id, r.value);
            assert!(r.value <= 1e-9);
        }
    }
}

#[test]
fn identity_suite_is_reproducible() {
    assert_eq!(verify_appendix_identities(7, 50, 4), verify_appendix_identities(7, 50, 4));
}

#[test]
fn weight_above_dimension_is_rejected() {
    let a = Matrix::identity(2);
    assert!(sigma_multi(&[a.clone(), a], &MultiIndex::new(&[2, 1])).is_err());
}

#[test]
fn mixed_invariant_of_diagonal_pair() {
    // det(I + sD₁ + tD₂) = Π(1 + s pᵢ + t qᵢ); the st coefficient is Σ_{i≠j} pᵢqⱼ.
    let p = [1.0, 2.0, -0.5];
    let q = [0.3, -1.0, 2.0];
    let want: f64 = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| p[i] * q[j])
        .sum();
    let got = sigma_multi(&[Matrix::from_diag(&p), Matrix::from_diag(&q)], &MultiIndex::new(&[1, 1])).unwrap();
    assert!((got - want).abs() < 1e-13);
}
