use pathvar::catalog;
use pathvar::douglas::check_candidate_phi;
use pathvar::expr::{is_zero, Expr, Interval, RationalSampler, Var};
use pathvar::lagrange::{
    dehomogenize, hessian_phi, homogenize, numeric_extremal_check, sample_points, verify_equivalence, Jet, Lagrangian,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn y(i: usize) -> Expr {
    Expr::var(Var::Y(i as u16))
}

fn dy(i: usize) -> Expr {
    Expr::var(Var::Dy(i as u16))
}

fn random_lagrangian(rng: &mut ChaCha8Rng, n: usize) -> Lagrangian {
    let mut terms = Vec::new();
    for i in 1..=n {
        for j in i..=n {
            let c = Expr::int(rng.random_range(-3..=3)) + Expr::int(rng.random_range(-1..=1)) * y(rng.random_range(1..=n));
            terms.push(c * dy(i) * dy(j));
        }
    }
    terms.push(Expr::exp(Expr::int(rng.random_range(-1..=1)) * y(1) * dy(n)));
    terms.push(Expr::sin(dy(1) + Expr::var(Var::X)));
    Lagrangian::new(n, Expr::add(terms)).unwrap()
}

#[test]
fn hessian_field_satisfies_the_clairaut_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let n = rng.random_range(1..=3);
        let l = random_lagrangian(&mut rng, n);
        let phi = hessian_phi(&l).phi;
        for i in 1..=n {
            for j in 1..=n {
                for k in 1..=n {
                    let r = phi[i - 1][k - 1].diff(Var::Dy(j as u16)) - phi[j - 1][k - 1].diff(Var::Dy(i as u16));
                    let v = is_zero(&r, &mut RationalSampler::new(2), 10, 1e-9).unwrap();
                    assert!(v.is_symbolic_zero(), "{} at ({i},{j},{k})", l.expr());
                }
            }
        }
    }
}

#[test]
fn homogenize_and_dehomogenize_are_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = rng.random_range(1..=3);
        let l = random_lagrangian(&mut rng, n);
        let lh = homogenize(&l);
        assert!(lh.euler_residual().simplify().is_zero(), "{}", lh.expr());
        let back = dehomogenize(&lh, &mut RationalSampler::new(4), 10).unwrap();
        assert_eq!(back.expr(), l.expr());
    }
}

#[test]
fn dehomogenize_rejects_non_homogeneous_input() {
    let lh = pathvar::lagrange::HomLagrangian::new(1, Expr::powi(Expr::var(Var::U(1)), 2)).unwrap();
    let err = dehomogenize(&lh, &mut RationalSampler::new(5), 10).unwrap_err();
    assert!(matches!(err, pathvar::LagrangeError::Homogeneity { .. }), "{err}");
}

#[test]
fn equivalence_implies_the_fundamental_system() {
    for id in catalog::ids() {
        let e = catalog::get(id).unwrap();
        let (Some(l), Some(p)) = (e.lagrangian.clone(), e.path_structure()) else { continue };
        let mut s = RationalSampler::new(6)
            .with_default(Interval::closed(-2.0, 2.0))
            .with_interval(Var::Dy(2), Interval::open(0.1, 2.0));
        if verify_equivalence(&l, &p, &mut s, 50, 1e-9).unwrap().pass() {
            let c = check_candidate_phi(&p, &hessian_phi(&l).phi, &mut s, 50, 1e-9).unwrap();
            assert!(c.passes(), "{id}");
        }
    }
}

#[test]
fn extremals_of_the_linearized_egorov_lagrangian() {
    let e = catalog::get_n("egorov-lin", Some(4)).unwrap();
    let (l, p) = (e.lagrangian.clone().unwrap(), e.path_structure().unwrap());
    let mut s = RationalSampler::new(7).with_default(Interval::closed(-1.0, 1.0));
    let jets: Vec<Jet> = sample_points(&l, Some(&p), &mut s, 4)
        .unwrap()
        .iter()
        .map(|pt| {
            let g = |v| pt.get(v).unwrap().to_f64();
            Jet {
                x: g(Var::X),
                y: (1..=4).map(|i| g(Var::Y(i))).collect(),
                dy: (1..=4).map(|i| g(Var::Dy(i))).collect(),
            }
        })
        .collect();
    let r = numeric_extremal_check(&l, &p, &jets, 1.0, 1e-10).unwrap();
    assert!(r.max_residual < 1e-8, "{}", r.max_residual);
    assert_eq!(r.per_trajectory.len(), 4);
}

#[test]
fn a_wrong_lagrangian_leaves_a_nonzero_residual() {
    let p = catalog::get_n("fpar", Some(2)).unwrap().path_structure().unwrap();
    let l = Lagrangian::new(2, Expr::powi(dy(1), 2) + Expr::powi(dy(2), 2)).unwrap();
    let r = verify_equivalence(&l, &p, &mut RationalSampler::new(8), 20, 1e-9).unwrap();
    assert!(!r.pass());
    assert!(r.residual_verdicts.iter().any(|v| !v.is_zero()));
}
