use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotorlab::cohomology::{solve_u, solve_ubar, transfer_t, transfer_t0, AveragedMultiplier};
use rotorlab::diffeo::{diophantine_profile, CircleDiffeo, RandomEnsemble};
use rotorlab::periodic::PeriodicMap;
use rotorlab::{Error, GOLDEN_MEAN};

const TAU: f64 = std::f64::consts::TAU;

fn random_map(rng: &mut impl Rng, degree: usize) -> PeriodicMap {
    let n = 64;
    let mut c = vec![Complex64::ZERO; 2 * n + 1];
    for q in 1..=degree {
        let decay = 1.0 / (1 + q * q) as f64;
        let v = Complex64::new(
            rng.random_range(-1.0..1.0) * decay,
            rng.random_range(-1.0..1.0) * decay,
        );
        c[n + q] = v;
        c[n - q] = v.conj();
    }
    PeriodicMap::from_coeffs(&c, 256)
}

fn cos1() -> PeriodicMap {
    PeriodicMap::from_fn(|x| (TAU * x).cos(), 64, 256)
}

#[test]
fn multiplier_invariants() {
    let alpha = RandomEnsemble::new(vec![(0.3, 0.21), (0.7, GOLDEN_MEAN)]).unwrap();
    let m = AveragedMultiplier::new(&alpha, 32);
    assert!((m.get(0) - Complex64::ONE).norm() < 1e-15);
    for q in 1..=32i64 {
        assert!(m.get(q).norm() <= 1.0 + 1e-15);
        assert!((m.get(-q) - m.get(q).conj()).norm() < 1e-15);
    }
}

#[test]
fn t0_deterministic_is_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let phi = random_map(&mut rng, 16);
    let alpha = RandomEnsemble::single(0.377);
    let out = transfer_t0(&phi, &alpha);
    assert!(out.sub(&phi.shift(0.377)).sup_norm() < 1e-13);
}

#[test]
fn t0_fixes_constants() {
    let c = PeriodicMap::constant(2.0, 64, 256);
    let alpha = RandomEnsemble::new(vec![(0.5, 0.1), (0.5, 0.6)]).unwrap();
    assert!(transfer_t0(&c, &alpha).sub(&c).sup_norm() < 1e-15);
}

#[test]
fn t0_quarter_three_quarter_kills_cos() {
    // m_1 = (e^{i pi/2} + e^{3 i pi/2})/2 = 0
    let alpha = RandomEnsemble::new(vec![(0.5, 0.25), (0.5, 0.75)]).unwrap();
    assert!(transfer_t0(&cos1(), &alpha).sup_norm() < 1e-14);
}

#[test]
fn transfer_t_matches_t0_on_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let phi = random_map(&mut rng, 16);
    let angles = [0.21, GOLDEN_MEAN];
    let alpha =
        RandomEnsemble::new(angles.iter().map(|&a| (0.5, a)).collect()).unwrap();
    let f = alpha.map(|&a| CircleDiffeo::rotation(a, 64, 256));
    let via_t = transfer_t(&phi, &f).unwrap();
    let via_t0 = transfer_t0(&phi, &alpha);
    assert!(via_t.sub(&via_t0).sup_norm() < 1e-12);
}

#[test]
fn transfer_t_single_atom_oracle() {
    // f = Id + 0.1 sin(2 pi x)/(2 pi), phi = cos(2 pi x)
    let zeta = PeriodicMap::from_fn(|x| 0.1 * (TAU * x).sin() / TAU, 64, 256);
    let f = RandomEnsemble::single(CircleDiffeo::new(zeta).unwrap());
    let out = transfer_t(&cos1(), &f).unwrap();
    for i in 0..100 {
        let x = i as f64 / 100.0;
        let oracle = (TAU * (x + 0.1 * (TAU * x).sin() / TAU)).cos();
        assert!((out.eval(x) - oracle).abs() < 1e-10);
    }
    // constants are fixed
    let c = PeriodicMap::constant(1.5, 64, 256);
    let fc = transfer_t(&c, &f).unwrap();
    assert!(fc.sub(&c).sup_norm() < 1e-12);
}

#[test]
fn solve_u_constant_is_zero() {
    let c = PeriodicMap::constant(3.0, 64, 256);
    let out = solve_u(&c, &RandomEnsemble::single(0.3)).unwrap();
    assert!(out.sup_norm() < 1e-15);
}

#[test]
fn solve_u_cosine_analytic() {
    let alpha = RandomEnsemble::single(0.3);
    let psi = cos1();
    let phi = solve_u(&psi, &alpha).unwrap();
    // residual identity
    let lhs = phi.sub(&transfer_t0(&phi, &alpha));
    assert!(lhs.sub(&psi).sup_norm() < 1e-10);
    assert!(phi.mean().abs() < 1e-14);
    // coefficient oracle: psi_hat(1)/(1 - e^{2 i pi 0.3})
    let denom = Complex64::ONE - Complex64::new(0.0, TAU * 0.3).exp();
    let expected = Complex64::new(0.5, 0.0) / denom;
    assert!((phi.coeff(1) - expected).norm() < 1e-14);
}

#[test]
fn solve_u_resonance_error() {
    // alpha = 0.5 deterministic: 1 - m_2 = 0, mode 2 present
    let psi = PeriodicMap::from_fn(|x| (2.0 * TAU * x).cos(), 64, 256);
    match solve_u(&psi, &RandomEnsemble::single(0.5)) {
        Err(Error::Resonance { q, .. }) => assert_eq!(q.abs(), 2),
        other => panic!("expected resonance, got {other:?}"),
    }
    // but solvable when the resonant mode is absent
    assert!(solve_u(&cos1(), &RandomEnsemble::single(0.5)).is_ok());
}

#[test]
fn ubar_deterministic_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let psi = random_map(&mut rng, 16);
    let a = 0.377;
    let ub = solve_ubar(&psi, &RandomEnsemble::single(a)).unwrap();
    let u_neg = solve_u(&psi, &RandomEnsemble::single(-a)).unwrap();
    assert!(ub.sub(&u_neg).sup_norm() < 1e-12);
}

#[test]
fn adjoint_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let alpha = RandomEnsemble::single(GOLDEN_MEAN);
    for _ in 0..20 {
        let p1 = random_map(&mut rng, 16);
        let p2 = random_map(&mut rng, 16);
        let lhs = solve_u(&p1, &alpha).unwrap().dot(&p2);
        let rhs = p1.dot(&solve_ubar(&p2, &alpha).unwrap());
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn linearity_and_commutation_with_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let alpha = RandomEnsemble::new(vec![(0.5, GOLDEN_MEAN), (0.5, 0.41421356237309515)]).unwrap();
    let a = random_map(&mut rng, 16);
    let b = random_map(&mut rng, 16);
    let sum = solve_u(&a.add(&b.scale(2.0)), &alpha).unwrap();
    let parts = solve_u(&a, &alpha)
        .unwrap()
        .add(&solve_u(&b, &alpha).unwrap().scale(2.0));
    assert!(sum.sub(&parts).sup_norm() < 1e-11);

    let du = solve_u(&a.derivative(), &alpha).unwrap();
    let ud = solve_u(&a, &alpha).unwrap().derivative();
    assert!(du.sub(&ud).sup_norm() < 1e-9);

    // both solvers annihilate constants
    let c = PeriodicMap::constant(5.0, 64, 256);
    assert!(solve_ubar(&c, &alpha).unwrap().sup_norm() < 1e-15);
}

#[test]
fn denominator_lower_bound() {
    // |1 - m_q| >= value(q)^2, the numerical form of 1 - cos >= d(x,Z)^2
    let alpha = RandomEnsemble::new(vec![(0.5, GOLDEN_MEAN), (0.5, 0.41421356237309515)]).unwrap();
    let prof = diophantine_profile(&alpha, 64);
    let mult = AveragedMultiplier::new(&alpha, 64);
    for q in 1..=64i64 {
        let denom = (Complex64::ONE - mult.get(q)).norm();
        assert!(denom >= prof.value(q).powi(2) - 1e-13);
    }
}
