use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use proptest::prelude::*;

use speccy::arith::{frac, int, is_fundamental_discriminant, rat, Rational};
use speccy::cm::{degree_formula, BruteForceOracle};
use speccy::eisenstein::{principal_binary_lattice, EisensteinPackage};
use speccy::imq::{diff_set, rho_multiplicative_formula, ImQField, Place, Splitting};
use speccy::lattice::{enumerate_coset_vectors, orthogonal_complement, visit_ball, QuadLattice};
use speccy::ledger::{lambda_mmu, pullback_table, verify_ledger, EmbeddingContext};
use speccy::qseries::{hejhal_principal_part, smallest_eigenvalue, PrincipalPart};
use speccy::quaternion::{conjugate_linear_basis, construct_bpinfty, embed_cm, maximal_order_containing};
use speccy::weil::WeilRep;

fn odd_fundamental(bound: i64) -> Vec<i64> {
    (3..=bound).map(|n| -n).filter(|&d| d.rem_euclid(4) == 1 && is_fundamental_discriminant(d)).collect()
}

fn class_one() -> Vec<i64> {
    vec![-3, -7, -11, -19, -43]
}

/// Symmetric integer matrices with even diagonal and nonzero determinant.
fn even_gram(max_rank: usize, entry: i64) -> impl Strategy<Value = QuadLattice> {
    (1..=max_rank)
        .prop_flat_map(move |n| proptest::collection::vec(-entry..=entry, n * n))
        .prop_filter_map("degenerate", |v| {
            let n = (v.len() as f64).sqrt() as usize;
            let gram: Vec<Vec<i64>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 2 * v[i * n + i] } else { v[i.min(j) * n + i.max(j)] }).collect())
                .collect();
            QuadLattice::new(gram).ok()
        })
}

/// `2·BᵀB` for a random square `B`, kept when it is reasonably well conditioned.
fn posdef_gram(max_rank: usize) -> impl Strategy<Value = QuadLattice> {
    (1..=max_rank)
        .prop_flat_map(|n| proptest::collection::vec(-2i64..=2, n * n))
        .prop_filter_map("singular or ill conditioned", |b| {
            let n = (b.len() as f64).sqrt() as usize;
            let gram: Vec<Vec<i64>> = (0..n)
                .map(|i| (0..n).map(|j| 2 * (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum::<i64>()).collect())
                .collect();
            let l = QuadLattice::new(gram).ok()?;
            (l.is_positive_definite() && smallest_eigenvalue(l.gram()) > 0.5).then_some(l)
        })
}

fn det(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        1 => m[0][0],
        n => (0..n)
            .map(|c| {
                let minor: Vec<Vec<i64>> =
                    m[1..].iter().map(|r| r.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &x)| x).collect()).collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                sign * m[0][c] * det(&minor)
            })
            .sum(),
    }
}

fn box_count(l: &QuadLattice, bound: i64) -> u64 {
    let n = l.rank();
    let r = (2.0 * bound as f64 / smallest_eigenvalue(l.gram())).sqrt().floor() as i64;
    let mut x = vec![-r; n];
    let mut count = 0;
    loop {
        if l.q_int(&x) <= bound {
            count += 1;
        }
        let mut i = 0;
        while i < n && x[i] == r {
            x[i] = -r;
            i += 1;
        }
        if i == n {
            return count;
        }
        x[i] += 1;
    }
}

fn block_lattice(d: i64, k: i64) -> QuadLattice {
    principal_binary_lattice(d).unwrap().direct_sum(&QuadLattice::new(vec![vec![2 * k]]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn discriminant_group_order_is_abs_det(l in even_gram(4, 4)) {
        let g = l.discriminant_group();
        prop_assert_eq!(g.order() as i64, det(l.gram()).abs());
        prop_assert_eq!(g.elementary_divisors().iter().product::<i64>(), det(l.gram()).abs());
    }

    #[test]
    fn discriminant_form_is_well_defined(l in even_gram(3, 3)) {
        let g = l.discriminant_group();
        for mu in g.elements() {
            prop_assert_eq!(g.q(&g.neg(&mu)), g.q(&mu));
            for nu in g.elements() {
                let lhs = g.q(&g.add(&mu, &nu)) - g.q(&mu) - g.q(&nu);
                prop_assert_eq!(frac(lhs), frac(g.b(&mu, &nu)));
            }
        }
    }

    #[test]
    fn ball_enumeration_matches_box_search(l in posdef_gram(3), bound in 0i64..6) {
        let zero = vec![Rational::zero(); l.rank()];
        let mut count = 0u64;
        visit_ball(l.gram(), &zero, int(bound), &mut |x, q| {
            assert_eq!(q, l.q(x));
            assert!(q <= int(bound));
            count += 1;
        }).unwrap();
        prop_assert_eq!(count, box_count(&l, bound));
    }

    #[test]
    fn coset_enumeration_is_symmetric_and_supported(l in posdef_gram(3), k in 0i64..24, idx in 0usize..64) {
        let g = l.discriminant_group();
        let mu = g.element(idx % g.order());
        let m = rat(k, g.level());
        let plus = enumerate_coset_vectors(&l, &mu, m).unwrap();
        let mut minus: Vec<Vec<Rational>> =
            enumerate_coset_vectors(&l, &g.neg(&mu), m).unwrap().into_iter().map(|x| x.iter().map(|c| -c).collect()).collect();
        minus.sort();
        prop_assert_eq!(&plus, &minus);
        if !plus.is_empty() {
            prop_assert_eq!(frac(m), g.q(&mu));
        }
        for x in &plus {
            prop_assert_eq!(l.q(x), m);
            prop_assert_eq!(g.coset(x).unwrap(), mu.clone());
        }
    }

    #[test]
    fn index_identity_for_random_embeddings(l in even_gram(4, 3), v in proptest::collection::vec(-2i64..=2, 8), r in 1usize..3) {
        let n = l.rank();
        prop_assume!(n > r);
        let basis: Vec<Vec<i64>> = (0..r).map(|i| v[i * n..(i + 1) * n].to_vec()).collect();
        let restricted: Vec<Vec<i64>> = basis
            .iter()
            .map(|x| basis.iter().map(|y| {
                (0..n).map(|i| (0..n).map(|j| x[i] * l.gram()[i][j] * y[j]).sum::<i64>()).sum()
            }).collect())
            .collect();
        prop_assume!(det(&restricted) != 0);
        let emb = match orthogonal_complement(&l, &basis) {
            Err(speccy::Error::NonPrimitiveSublattice) => return Err(TestCaseError::reject("not primitive")),
            other => other.unwrap(),
        };
        prop_assert!(emb.check_index_identity());
        let lhs = emb.sub().disc() as u128 * emb.complement().disc() as u128;
        prop_assert_eq!(lhs, l.disc() as u128 * (emb.index() as u128).pow(2));
        prop_assert_eq!(emb.sub().rank() + emb.complement().rank(), n);
    }

    #[test]
    fn weil_generators_satisfy_relations(l in even_gram(3, 4)) {
        prop_assume!(l.disc() <= 60);
        let w = WeilRep::new(&l).unwrap();
        let (s, t, z) = (w.omega_s(), w.omega_t(), w.omega_z());
        let r = w.ring();
        prop_assert!(w.is_unitary(&s) && w.is_unitary(&t));
        prop_assert!(w.exact_eq(&s.mul(r, &s), &z));
        let st = s.mul(r, &t);
        prop_assert!(w.exact_eq(&st.mul(r, &st).mul(r, &st), &z));
        prop_assert!(w.exact_eq(&z.mul(r, &z), &w.z_squared_expected()));

        let level = w.disc().level() as u64;
        let id = speccy::cyclo::CycloMatrix::identity(r, w.dim());
        let power = |e: u64| (0..e).fold(id.clone(), |acc, _| acc.mul(r, &t));
        prop_assert!(w.exact_eq(&power(level), &id));
        for p in speccy::arith::prime_divisors(level) {
            prop_assert!(!w.exact_eq(&power(level / p), &id));
        }
    }

    #[test]
    fn character_and_rho_are_multiplicative(i in 0usize..200, a in 1i64..400, b in 1i64..400) {
        let ds = odd_fundamental(1000);
        let k = ImQField::from_discriminant(ds[i % ds.len()]).unwrap();
        prop_assert_eq!(k.chi(a * b), k.chi(a) * k.chi(b));
        let rho = |n: i64| k.rho(int(n));
        if num_integer::Integer::gcd(&a, &b) == 1 {
            prop_assert_eq!(rho(a * b), rho(a) * rho(b));
        }
        prop_assert_eq!(rho(a), rho_multiplicative_formula(&k, a as u64));
        prop_assert_eq!(k.rho(rat(2 * a + 1, 2)), 0);
    }

    #[test]
    fn diff_is_odd_and_split_free(i in 0usize..200, k in 1i64..5000) {
        let ds = odd_fundamental(600);
        let d = ds[i % ds.len()];
        let m = rat(k, d.abs());
        let f = ImQField::from_discriminant(d).unwrap();
        let diff = diff_set(&principal_binary_lattice(d).unwrap(), m).unwrap();
        prop_assert_eq!(diff.len() % 2, 1);
        prop_assert!(diff.iter().all(|&p| f.splitting(p) != Splitting::Split));
    }

    #[test]
    fn eisenstein_coefficients_obey_support_and_symmetry(i in 0usize..100, k in 1i64..2000, idx in 0usize..1000) {
        let ds = odd_fundamental(300);
        let d = ds[i % ds.len()];
        let pkg = EisensteinPackage::new(principal_binary_lattice(d).unwrap()).unwrap();
        let g = pkg.disc_group();
        let mu = g.element(idx % g.order());
        let m = rat(k, d.abs());
        let a = pkg.a_plus(m, &mu).unwrap();
        prop_assert_eq!(&a, &pkg.a_plus(m, &g.neg(&mu)).unwrap());
        if !a.is_zero() {
            prop_assert_eq!(frac(m), g.q(&mu));
            let diff = pkg.local_data(m, &mu).unwrap().diff;
            prop_assert_eq!(diff.len(), 1);
            prop_assert!(a.is_multiple_of_log(diff[0]));
            prop_assert!(a.log_coefficient(diff[0]).is_negative());
        }
        let deg = degree_formula(&pkg, m, &mu).unwrap().degree;
        prop_assert_eq!(deg, a * (-pkg.field().h_over_w()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ledger_identities_hold_on_block_lattices(
        di in 0usize..3,
        k in 1i64..4,
        terms in proptest::collection::vec((1i64..40, 0usize..64, -3i64..=3), 1..4),
        c00 in -2i64..=2,
    ) {
        let d = [-3, -7, -11][di];
        let l = block_lattice(d, k);
        prop_assume!(l.is_maximal());
        let g = l.discriminant_group();
        let mut pp = PrincipalPart::new(&g);
        pp.set_constant(int(c00));
        for (num, idx, c) in terms {
            let mu = g.element(idx % g.order());
            let m = rat(num, g.level());
            if m > int(2) || frac(m) != g.q(&mu) {
                continue;
            }
            pp = pp.plus(&hejhal_principal_part(&g, m, &mu).unwrap().scaled(int(2 * c))).unwrap();
        }
        let top = pp.terms().keys().map(|(m, _)| *m).max().unwrap_or_else(Rational::zero);
        let ctx = EmbeddingContext::new(l, &[vec![1, 0, 0], vec![0, 1, 0]], top).unwrap();
        let report = verify_ledger(&ctx, &pp).unwrap();
        prop_assert!(report.all_match(), "{:?}", report.mismatches().collect::<Vec<_>>());
        prop_assert!(report.totals.residual.is_zero());
        prop_assert_eq!(report.totals.lprime_coefficient, -ctx.package().field().h_over_w());

        for &(m, i) in pp.terms().keys() {
            let mu = g.element(i);
            let zero0 = ctx.package().disc_group().zero();
            let improper: u64 = pullback_table(&ctx, m, &mu)
                .unwrap()
                .iter()
                .filter(|r| r.m1.is_zero() && r.mu1 == zero0)
                .map(|r| r.rep)
                .sum();
            prop_assert_eq!(lambda_mmu(&ctx, m, &mu).unwrap().len() as u64, improper);
        }
    }
}

#[test]
fn definite_quaternion_algebras_ramify_at_p_and_infinity() {
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        let (alg, order) = construct_bpinfty(p).unwrap();
        let ram: BTreeSet<Place> = alg.ramification().into_iter().collect();
        assert_eq!(ram, BTreeSet::from([Place::Finite(p), Place::Infinity]), "p = {p}");
        assert!(order.is_maximal(), "p = {p}");
        assert_eq!(order.reduced_discriminant(), Some(p));
    }
}

#[test]
fn cm_embeddings_have_orthogonal_conjugate_linear_part() {
    for d in class_one() {
        let k = ImQField::from_discriminant(d).unwrap();
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 43] {
            if k.splitting(p) == Splitting::Split {
                continue;
            }
            let (alg, order) = maximal_order_containing(&k, p).unwrap();
            assert!(order.is_maximal());
            let alpha = embed_cm(&order, &k).unwrap();
            assert_eq!(alg.trd(&alpha), (d as i128).into());
            let conj = conjugate_linear_basis(&order, &alpha).unwrap();
            assert_eq!(conj.len(), 2);
            for x in &conj {
                assert_eq!(alg.mul(x, &alpha), alg.mul(&alg.conj(&alpha), x));
                for y in [alg.one(), alpha] {
                    assert!(alg.trd(&alg.mul(x, &alg.conj(&y))).is_zero(), "d={d} p={p}");
                }
            }
        }
    }
}

#[test]
fn oracle_agrees_on_a_non_principal_binary_lattice() {
    let l0 = QuadLattice::new(vec![vec![-4, -3], vec![-3, -4]]).unwrap();
    let mut oracle = BruteForceOracle::new(l0).unwrap();
    let pkg = oracle.package().clone();
    assert_eq!(pkg.field().disc(), -7);
    let mut nonzero = 0;
    for k in 1..=35 {
        let m = rat(k, 7);
        for mu in pkg.disc_group().elements() {
            let diff = pkg.local_data(m, &mu).unwrap().diff;
            if diff.len() != 1 || speccy::arith::ord_p(m, diff[0]) < 0 {
                continue;
            }
            let f = degree_formula(&pkg, m, &mu).unwrap();
            let b = oracle.degree(m, &mu).unwrap();
            assert_eq!(f.degree, b.degree, "m={m} mu={mu}");
            nonzero += usize::from(!f.degree.is_zero());
        }
    }
    assert!(nonzero > 0);
}

#[test]
fn oracle_refuses_class_number_above_one() {
    assert!(BruteForceOracle::new(principal_binary_lattice(-23).unwrap()).is_err());
}
