use num_rational::BigRational;
use num_traits::Zero;
use pathvar::catalog;
use pathvar::douglas::{build_system, default_levels, rank_at, PhiSystem};
use pathvar::expr::{Expr, Point, RationalSampler, Sampler, Var};
use pathvar::geometry::{jet_vars, tensor_a, total_derivative, PathStructure};

fn structures() -> Vec<(String, PathStructure)> {
    catalog::ids()
        .into_iter()
        .filter_map(|id| {
            let e = catalog::get(id).ok()?;
            Some((id.to_string(), e.path_structure()?))
        })
        .collect()
}

fn points(s: &PhiSystem, seed: u64, count: usize) -> Vec<Point> {
    let mut sampler = RationalSampler::new(seed);
    (0..count).map(|_| sampler.sample_admissible(&jet_vars(s.n()), s.guards(), 1000).unwrap()).collect()
}

fn kernel_vector(s: &PhiSystem, k: &[Vec<BigRational>]) -> Vec<BigRational> {
    (0..s.cols())
        .map(|c| {
            let (i, j) = s.index.pair(c);
            k[i - 1][j - 1].clone()
        })
        .collect()
}

#[test]
fn rank_is_monotone_in_levels() {
    for (id, p) in structures() {
        let full = build_system(&p, 2);
        for pt in points(&full, 1, 5) {
            let ranks: Vec<usize> = (0..=2).map(|l| rank_at(&full.truncated(l), &pt).unwrap().rank).collect();
            assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{id}: {ranks:?}");
        }
    }
}

#[test]
fn exact_rank_matches_float_rank() {
    for (id, p) in structures() {
        let s = build_system(&p, default_levels(p.n()));
        for pt in points(&s, 2, 10) {
            let r = rank_at(&s, &pt).unwrap();
            assert_eq!(r.rank, r.float_rank, "{id} at {pt}");
        }
    }
}

#[test]
fn kernel_matrices_satisfy_every_row() {
    for (id, p) in structures() {
        let s = build_system(&p, default_levels(p.n()));
        for pt in points(&s, 3, 5) {
            let r = rank_at(&s, &pt).unwrap();
            assert_eq!(r.kernel_basis.len(), s.cols() - r.rank, "{id}");
            let m = s.matrix_at(&pt).unwrap();
            for k in &r.kernel_basis {
                let v = kernel_vector(&s, k);
                for row in &m {
                    let dot: BigRational = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                    assert!(dot.is_zero(), "{id}: kernel residual {dot}");
                }
            }
        }
    }
}

fn det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut d = BigRational::from_integer(1.into());
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else { return BigRational::zero() };
        m.swap(p, c);
        if p != c {
            d = -d;
        }
        d *= &m[c][c];
        for r in c + 1..n {
            let k = &m[r][c] / &m[c][c];
            for j in c..n {
                let t = &k * &m[c][j];
                m[r][j] -= t;
            }
        }
    }
    d
}

#[test]
fn fpa2_kernel_combinations_are_degenerate() {
    for n in 3..=5 {
        let p = catalog::get_n("fpa2", Some(n)).unwrap().path_structure().unwrap();
        let s = build_system(&p, default_levels(n));
        let mut coeffs = RationalSampler::new(4);
        for pt in points(&s, 4, 3) {
            let r = rank_at(&s, &pt).unwrap();
            assert!(!r.kernel_basis.is_empty());
            for _ in 0..5 {
                let mut phi = vec![vec![BigRational::zero(); n]; n];
                for k in &r.kernel_basis {
                    let c = coeffs.coefficient();
                    for i in 0..n {
                        for j in 0..n {
                            phi[i][j] += &c * &k[i][j];
                        }
                    }
                }
                assert!(phi[0].iter().all(Zero::is_zero), "n={n}: first row {:?}", phi[0]);
                assert!(det(phi).is_zero());
            }
        }
    }
}

/// With `f` free of velocities `J = 0`, so the first prolongation is the
/// symmetry condition for `d/dx A`.
#[test]
fn first_prolongation_is_the_derivative_of_a() {
    for n in 2..=4 {
        let p = catalog::get_n("fpar", Some(n)).unwrap().path_structure().unwrap();
        let s = build_system(&p, 1);
        let a = tensor_a(&p);
        for r in s.rows.iter().filter(|r| r.level == 1) {
            let (i, j) = r.pair;
            let mut want = vec![Vec::new(); s.cols()];
            for k in 1..=n {
                want[s.index.col(k, j)].push(total_derivative(a.entry(i, k), &p));
                want[s.index.col(k, i)].push(-total_derivative(a.entry(j, k), &p));
            }
            for (c, terms) in want.into_iter().enumerate() {
                let w = Expr::rational(1, 2) * Expr::add(terms);
                assert_eq!(r.coeffs[c].simplify(), w.simplify(), "n={n} row ({i},{j}) col {c}");
            }
        }
    }
}

#[test]
fn fpar_rank_at_the_distinguished_point() {
    let p = catalog::get_n("fpar", Some(3)).unwrap().path_structure().unwrap();
    let s = build_system(&p, 1);
    let mut pt = Point::new().with_rat(Var::X, 0, 1);
    for i in 1..=3u16 {
        pt = pt.with_rat(Var::Y(i), i64::from(i == 3), 1).with_rat(Var::Dy(i), 1, 1);
    }
    let r = rank_at(&s, &pt).unwrap();
    assert_eq!((r.rank, r.max_possible), (6, 6));
    assert!(r.kernel_basis.is_empty());
}
