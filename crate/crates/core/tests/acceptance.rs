//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use speccy::arith::{frac, int, is_fundamental_discriminant, ord_p, rat};
use speccy::cli::{run, LatticeFile, SublatticeFile};
use speccy::cm::{degree_formula, BruteForceOracle};
use speccy::eisenstein::{principal_binary_lattice, EisensteinPackage};
use speccy::imq::{diff_set, ImQField, Splitting};
use speccy::lattice::{orthogonal_complement, QuadLattice};
use speccy::ledger::{verify_ledger, EmbeddingContext};
use speccy::loglinear::{LogLinear, Symbol};
use speccy::qseries::{act_with_factor, hejhal_principal_part, theta_cutoff, theta_series, theta_transformation_defect};
use speccy::weil::{MetaWord, WeilRep};

const DISCRIMINANTS: [i64; 5] = [-3, -7, -11, -15, -23];

type Check = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn load_lattice(name: &str) -> QuadLattice {
    let text = std::fs::read_to_string(fixture(name)).expect("fixture readable");
    let file: LatticeFile = serde_json::from_str(&text).expect("fixture parses");
    QuadLattice::new(file.gram).expect("fixture is a lattice")
}

fn load_sub(name: &str) -> Vec<Vec<i64>> {
    let text = std::fs::read_to_string(fixture(name)).expect("fixture readable");
    let file: SublatticeFile = serde_json::from_str(&text).expect("fixture parses");
    file.basis
}

fn e<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

fn degree_eisenstein() -> Check {
    let mut checked = 0;
    for d in DISCRIMINANTS {
        let pkg = EisensteinPackage::new(principal_binary_lattice(d).map_err(e)?).map_err(e)?;
        let hw = pkg.field().h_over_w();
        let g = pkg.disc_group().clone();
        let step = pkg.field().abs_disc() as i64;
        for mu in g.elements() {
            let mut found = 0;
            let mut k = 1;
            while found < 20 {
                let m = rat(k, step);
                k += 1;
                if frac(m) != g.q(&mu) {
                    continue;
                }
                found += 1;
                let deg = degree_formula(&pkg, m, &mu).map_err(e)?.degree;
                let expected = pkg.a_plus(m, &mu).map_err(e)? * (-hw);
                if deg != expected {
                    return Err(format!("d={d} m={m} mu={mu}: {deg} vs {expected}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (d, m, mu) triples"))
}

fn oracle_agreement() -> Check {
    let mut checked = 0;
    let mut nonzero = 0;
    let mut seven = false;
    for d in [-3, -7, -11] {
        let l0 = principal_binary_lattice(d).map_err(e)?;
        let mut oracle = BruteForceOracle::new(l0).map_err(e)?;
        let pkg = oracle.package().clone();
        let step = pkg.field().abs_disc() as i64;
        for k in 1..=10 * step {
            let m = rat(k, step);
            for mu in pkg.disc_group().elements() {
                let diff = pkg.local_data(m, &mu).map_err(e)?.diff;
                if diff.len() != 1 || ord_p(m, diff[0]) < 0 {
                    continue;
                }
                let f = degree_formula(&pkg, m, &mu).map_err(e)?;
                let b = oracle.degree(m, &mu).map_err(e)?;
                if f.degree != b.degree || f.weighted_count != b.weighted_count {
                    return Err(format!("d={d} m={m} mu={mu}: formula {} oracle {}", f.degree, b.degree));
                }
                if d == -7 && m == int(1) && mu == pkg.disc_group().zero() {
                    seven = b.degree == LogLinear::log_prime(7);
                }
                checked += 1;
                nonzero += usize::from(!f.degree.is_zero());
            }
        }
    }
    if !seven {
        return Err("d=-7, m=1, mu=0 did not give log 7".into());
    }
    Ok(format!("{checked} cases, {nonzero} nonzero"))
}

fn random_rank4(rng: &mut StdRng) -> QuadLattice {
    loop {
        let b: Vec<Vec<i64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-2..=2)).collect()).collect();
        let gram: Vec<Vec<i64>> =
            (0..4).map(|i| (0..4).map(|j| 2 * (0..4).map(|k| b[k][i] * b[k][j]).sum::<i64>()).collect()).collect();
        if let Ok(l) = QuadLattice::new(gram) {
            if l.is_positive_definite() && l.disc() <= 4096 {
                return l;
            }
        }
    }
}

fn theta_modularity() -> Check {
    let mut rng = StdRng::seed_from_u64(0x7e7a);
    let words: Vec<MetaWord> = ["T", "S", "ST", "TS", "STS"].iter().map(|w| w.parse().unwrap()).collect();
    let taus: Vec<Complex64> =
        (0..5).map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.8..1.4))).collect();
    let y_min = taus
        .iter()
        .flat_map(|&t| words.iter().map(move |w| act_with_factor(w, t, 1).0.im.min(t.im)))
        .fold(f64::INFINITY, f64::min);
    let lattices = vec![
        QuadLattice::new(vec![vec![2]]).map_err(e)?,
        QuadLattice::new(vec![vec![2, 1], vec![1, 2]]).map_err(e)?,
        QuadLattice::new(vec![vec![2, 0], vec![0, 4]]).map_err(e)?,
        random_rank4(&mut rng),
    ];
    let mut worst = 0f64;
    for l in &lattices {
        let rep = WeilRep::new(l).map_err(e)?;
        let cutoff = theta_cutoff(l, y_min, 1e-12);
        let theta = theta_series(l, int(cutoff as i64)).map_err(e)?;
        for w in &words {
            for &tau in &taus {
                let (defect, tail) = theta_transformation_defect(&theta, &rep, w, tau).map_err(e)?;
                if !(defect < 1e-8 && tail < 1e-8) {
                    return Err(format!("{:?} {w} tau={tau}: defect {defect:e}, tail bound {tail:e}", l.gram()));
                }
                worst = worst.max(defect);
            }
        }
    }
    Ok(format!("max defect {worst:.1e}, Im tau >= {y_min:.3}"))
}

fn metaplectic_relations() -> Check {
    let grams: Vec<Vec<Vec<i64>>> = vec![
        vec![vec![2]],
        vec![vec![-2]],
        vec![vec![6]],
        vec![vec![2, 1], vec![1, 2]],
        vec![vec![2, 1], vec![1, -2]],
        vec![vec![4, 0], vec![0, -6]],
        vec![vec![-2, -1], vec![-1, -4]],
        vec![vec![-2, -1, 0], vec![-1, -4, 0], vec![0, 0, 2]],
        vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, -2]],
        vec![vec![2, 1, 0], vec![1, -4, 0], vec![0, 0, -2]],
    ];
    let mut sigs = Vec::new();
    for g in grams {
        let l = QuadLattice::new(g).map_err(e)?;
        if l.disc() > 50 {
            return Err(format!("|disc| {} exceeds 50", l.disc()));
        }
        let w = WeilRep::new(&l).map_err(e)?;
        let (s, t, z) = (w.omega_s(), w.omega_t(), w.omega_z());
        let r = w.ring();
        let st = s.mul(r, &t);
        let ok = w.exact_eq(&s.mul(r, &s), &z)
            && w.exact_eq(&st.mul(r, &st).mul(r, &st), &z)
            && w.exact_eq(&z.mul(r, &z), &w.z_squared_expected());
        if !ok {
            return Err(format!("relation fails for {:?}", l.gram()));
        }
        sigs.push(l.signature());
    }
    sigs.sort();
    sigs.dedup();
    Ok(format!("10 lattices, signatures {sigs:?}"))
}

fn rho_crosscheck() -> Check {
    for d in DISCRIMINANTS {
        let k = ImQField::from_discriminant(d).map_err(e)?;
        let table = k.rho_bruteforce_table(10_000).map_err(e)?;
        for (m, &brute) in table.iter().enumerate().skip(1) {
            let r = k.rho(int(m as i64));
            if r != brute {
                return Err(format!("d={d} m={m}: rho {r}, brute force {brute}"));
            }
        }
    }
    Ok("m <= 10000".into())
}

fn l_values() -> Check {
    let mut count = 0;
    for n in 3..=1000i64 {
        let d = -n;
        if d.rem_euclid(4) != 1 || !is_fundamental_discriminant(d) {
            continue;
        }
        let k = ImQField::from_discriminant(d).map_err(e)?;
        let expected = rat(2 * k.class_number() as i64, k.units() as i64);
        if k.l_at_zero() != expected {
            return Err(format!("d={d}: L(chi,0) = {} but 2h/w = {expected}", k.l_at_zero()));
        }
        count += 1;
    }
    let mut worst = 0f64;
    for d in [-7, -23] {
        let k = ImQField::from_discriminant(d).map_err(e)?;
        for s in [0.25, 0.7, 1.3] {
            let a = k.completed_l(Complex64::new(s, 0.0));
            let b = k.completed_l(Complex64::new(1.0 - s, 0.0));
            let rel = (a - b).norm() / a.norm();
            if !(rel < 1e-10) {
                return Err(format!("d={d} s={s}: relative gap {rel:e}"));
            }
            worst = worst.max(rel);
        }
    }
    Ok(format!("{count} discriminants, functional equation gap {worst:.1e}"))
}

fn diff_structure() -> Check {
    let mut rng = StdRng::seed_from_u64(0xd1ff);
    let ds: Vec<i64> = (3..=400).map(|n: i64| -n).filter(|&d| d.rem_euclid(4) == 1 && is_fundamental_discriminant(d)).collect();
    for _ in 0..200 {
        let d = ds[rng.gen_range(0..ds.len())];
        let l0 = principal_binary_lattice(d).map_err(e)?;
        let k = ImQField::from_discriminant(d).map_err(e)?;
        let m = rat(rng.gen_range(1..=2000), d.abs());
        let diff = diff_set(&l0, m).map_err(e)?;
        if diff.len() % 2 == 0 {
            return Err(format!("d={d} m={m}: Diff {diff:?} has even size"));
        }
        if let Some(p) = diff.iter().find(|&&p| k.splitting(p) == Splitting::Split) {
            return Err(format!("d={d} m={m}: split prime {p} in Diff {diff:?}"));
        }
    }
    Ok("200 pairs".into())
}

fn ledger_end_to_end() -> Check {
    let l = load_lattice("L_d7_A1.json");
    let sub = load_sub("sub_d7_A1.json");
    let g = l.discriminant_group();
    let mu = g.parse_coset("0").map_err(e)?;
    let pp = hejhal_principal_part(&g, int(1), &mu).map_err(e)?;
    let ctx = EmbeddingContext::new(l, &sub, int(1)).map_err(e)?;
    let report = verify_ledger(&ctx, &pp).map_err(e)?;
    if let Some(r) = report.mismatches().next() {
        return Err(format!("{:?} {}: {} vs {}", r.identity, r.label, r.left, r.right));
    }
    let t = &report.totals;
    if !t.residual.is_zero() {
        return Err(format!("residual {}", t.residual));
    }
    let expected_rhs = LogLinear::symbol(Symbol::CentralDerivative) * t.lprime_coefficient;
    if t.lprime_coefficient != rat(-1, 2) || t.rhs != expected_rhs {
        return Err(format!("L' slot {} with coefficient {}", t.rhs, t.lprime_coefficient));
    }
    let (lattice, sub) = (fixture("L_d7_A1.json"), fixture("sub_d7_A1.json"));
    let args = [
        "speccy",
        "verify",
        "--lattice",
        lattice.to_str().unwrap(),
        "--sub",
        sub.to_str().unwrap(),
        "--pp",
        r#"{"1,0": 1}"#,
        "--inject-fault",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args, &mut out, &mut err);
    if code != 2 {
        return Err(format!("fault injection exited with {code}"));
    }
    Ok(format!("{} rows, L' slot {}, fault exit 2", report.rows.len(), t.rhs))
}

fn maximality_and_glue() -> Check {
    for (name, expected) in [("l0_d7.json", true), ("L_d7_A1.json", true), ("L_d7_nonmaximal.json", false)] {
        if load_lattice(name).is_maximal() != expected {
            return Err(format!("{name}: is_maximal should be {expected}"));
        }
    }
    let mut embeddings = vec![
        (load_lattice("L_d7_A1.json"), load_sub("sub_d7_A1.json")),
        (load_lattice("L_d7_glued.json"), vec![vec![1, 0, 0], vec![0, 1, 0]]),
        (load_lattice("L_d7_nonmaximal.json"), vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]]),
    ];
    for (d, k) in [(-3, 1), (-11, 3), (-15, 2), (-23, 5)] {
        let l0 = principal_binary_lattice(d).map_err(e)?;
        let l = l0.direct_sum(&QuadLattice::new(vec![vec![2 * k]]).map_err(e)?);
        embeddings.push((l, vec![vec![1, 0, 0], vec![0, 1, 0]]));
    }
    let mut indices = Vec::new();
    for (l, basis) in &embeddings {
        let emb = orthogonal_complement(l, basis).map_err(e)?;
        let lhs = emb.sub().disc() as u128 * emb.complement().disc() as u128;
        let rhs = l.disc() as u128 * (emb.index() as u128).pow(2);
        if lhs != rhs || !emb.check_index_identity() {
            return Err(format!("{:?}: {lhs} vs {rhs}", l.gram()));
        }
        indices.push(emb.index());
    }
    Ok(format!("{} embeddings, indices {indices:?}", embeddings.len()))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { name: "1 degree equals -(h/w) a+", limit: Some(Duration::from_secs(10)), check: degree_eisenstein },
        Criterion { name: "2 brute-force oracle agreement", limit: Some(Duration::from_secs(60)), check: oracle_agreement },
        Criterion { name: "3 theta modularity", limit: Some(Duration::from_secs(60)), check: theta_modularity },
        Criterion { name: "4 metaplectic relations", limit: None, check: metaplectic_relations },
        Criterion { name: "5 rho cross-check", limit: Some(Duration::from_secs(30)), check: rho_crosscheck },
        Criterion { name: "6 class number and L-values", limit: None, check: l_values },
        Criterion { name: "7 Diff set structure", limit: None, check: diff_structure },
        Criterion { name: "8 end-to-end ledger", limit: Some(Duration::from_secs(5)), check: ledger_end_to_end },
        Criterion { name: "9 maximality and glue", limit: None, check: maximality_and_glue },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.check)();
        let elapsed = start.elapsed();
        let verdict = match (&result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (Ok(msg), _) => Ok(msg.clone()),
            (Err(msg), _) => Err(msg.clone()),
        };
        match verdict {
            Ok(msg) => println!("PASS  {:<34} {:>9.2?}  {msg}", c.name, elapsed),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {:<34} {:>9.2?}  {msg}", c.name, elapsed);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
