use std::collections::BTreeMap;

use pathvar::expr::{Expr, Point, Var};
use pathvar::geometry::{
    christoffel_to_homog, homog_to_inhomog, tensor_a, total_derivative, ChristoffelTable, PathStructure,
};
use pathvar::lagrange::{dormand_prince, OdeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_poly(rng: &mut ChaCha8Rng, vars: &[Var], terms: usize, degree: usize) -> Expr {
    Expr::add((0..terms).map(|_| {
        let mut f = vec![Expr::int(rng.random_range(-3..=3))];
        for _ in 0..rng.random_range(0..=degree) {
            f.push(Expr::var(vars[rng.random_range(0..vars.len())]));
        }
        Expr::mul(f)
    }))
}

fn jet(n: usize) -> Vec<Var> {
    pathvar::geometry::jet_vars(n)
}

#[test]
fn total_derivative_is_a_derivation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..25 {
        let n = rng.random_range(1..=3);
        let vars = jet(n);
        let f = (0..n).map(|_| random_poly(&mut rng, &vars, 3, 2)).collect();
        let p = PathStructure::new(f).unwrap();
        let a = random_poly(&mut rng, &vars, 3, 3);
        let b = random_poly(&mut rng, &vars, 3, 3);
        let lhs = total_derivative(&(a.clone() * b.clone()), &p);
        let rhs = a.clone() * total_derivative(&b, &p) + b * total_derivative(&a, &p);
        assert_eq!(lhs.simplify(), rhs.simplify());
    }
}

#[test]
fn tensor_a_for_velocity_free_right_hand_sides() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let pos: Vec<Var> = std::iter::once(Var::X).chain((1..=n).map(|i| Var::Y(i as u16))).collect();
        let f: Vec<Expr> = (0..n).map(|_| random_poly(&mut rng, &pos, 4, 3)).collect();
        let p = PathStructure::new(f.clone()).unwrap();
        let a = tensor_a(&p);
        for i in 1..=n {
            for j in 1..=n {
                let want = Expr::int(-2) * f[j - 1].diff(Var::Y(i as u16));
                assert_eq!(a.entry(i, j).simplify(), want.simplify(), "A_{i}^{j}");
            }
        }
    }
}

#[test]
fn vanishing_christoffel_symbols_give_the_flat_structure() {
    for n in 1..=4 {
        let g = ChristoffelTable::new(n, BTreeMap::new()).unwrap();
        assert_eq!(homog_to_inhomog(&christoffel_to_homog(&g)), PathStructure::flat(n));
    }
}

#[test]
fn christoffel_sprays_are_two_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = rng.random_range(1..=3);
        let pos: Vec<Var> = (0..=n).map(|i| Var::Xh(i as u16)).collect();
        let mut raw = BTreeMap::new();
        for i in 0..=n {
            for j in 0..=n {
                for k in j..=n {
                    if rng.random_bool(0.5) {
                        raw.insert((i, j, k), random_poly(&mut rng, &pos, 2, 2));
                    }
                }
            }
        }
        let h = christoffel_to_homog(&ChristoffelTable::new(n, raw).unwrap());
        for r in h.euler_residuals() {
            assert!(r.simplify().is_zero(), "{r}");
        }
    }
}

/// Geodesics `x'' = -h(x, x')` traced with two speeds, and the graph of the
/// path-structure solution through the same jet, land on the same curve.
#[test]
fn traces_do_not_depend_on_the_parameterization() {
    let e = pathvar::catalog::get("egorov-christoffel").unwrap();
    let pathvar::parser::Structure::Christoffel(g) = &e.structure else { panic!() };
    let h = christoffel_to_homog(g);
    let p = homog_to_inhomog(&h);
    let n = h.n();
    let spray = || {
        let h = h.clone();
        move |_t: f64, z: &[f64]| -> Option<Vec<f64>> {
            let m = n + 1;
            let mut pt = Point::new();
            for a in 0..m {
                pt = pt.with_f64(Var::Xh(a as u16), z[a]).with_f64(Var::U(a as u16), z[m + a]);
            }
            let mut out = z[m..].to_vec();
            for a in 0..m {
                out.push(-h.h()[a].eval_f64(&pt).ok()?);
            }
            Some(out)
        }
    };
    let start = [0.1, 0.3, -0.2, 0.4];
    let vel = [1.0, 0.2, 0.5, -0.3];
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-12, ..OdeOptions::default() };
    let run = |speed: f64, t1: f64| {
        let mut z: Vec<f64> = start.to_vec();
        z.extend(vel.iter().map(|v| v * speed));
        dormand_prince(spray(), |_| None, 0.0, &z, t1, opts, |_, _| Ok(())).unwrap().0
    };
    let a = run(1.0, 0.8);
    let b = run(2.0, 0.4);
    for k in 0..=n {
        assert!((a[k] - b[k]).abs() < 1e-6, "coordinate {k}: {} vs {}", a[k], b[k]);
    }

    let f = p.f().to_vec();
    let rhs = move |x: f64, s: &[f64]| -> Option<Vec<f64>> {
        let mut pt = Point::new().with_f64(Var::X, x);
        for i in 1..=n {
            pt = pt.with_f64(Var::Y(i as u16), s[i - 1]).with_f64(Var::Dy(i as u16), s[n + i - 1]);
        }
        let mut out = s[n..].to_vec();
        for fi in &f {
            out.push(fi.eval_f64(&pt).ok()?);
        }
        Some(out)
    };
    let mut s0: Vec<f64> = start[1..].to_vec();
    s0.extend(vel[1..].iter().map(|v| v / vel[0]));
    let (s1, _) = dormand_prince(rhs, |_| None, start[0], &s0, a[0], opts, |_, _| Ok(())).unwrap();
    for i in 1..=n {
        assert!((s1[i - 1] - a[i]).abs() < 1e-6, "y{i}: {} vs {}", s1[i - 1], a[i]);
    }
}
