use super::*;
use crate::model::Poly2;
use crate::torus::random_trig_field;
use rand::SeedableRng;
use std::f64::consts::PI;

fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(1, n).unwrap()
}

fn heat(d1: f64, d2: f64) -> ModelSpec {
    ModelSpec::new(d1, d2, Poly2::zero(), Poly2::zero()).unwrap()
}

fn skt() -> ModelSpec {
    ModelSpec::skt(1.0, 1.0, 0.5, 0.5, 0.5, 0.5).unwrap()
}

fn cos_state(g: TorusGrid, mean: f64, amp: f64) -> State {
    let f = Field::from_fn(g, |[x, _]| mean + amp * (2.0 * PI * x).cos());
    State::new(0.0, f.clone(), f).unwrap()
}

#[test]
fn imex_is_backward_euler_for_the_heat_equation() {
    let g = grid(16);
    let s = cos_state(g, 0.0, 1.0);
    let dt = 1e-3;
    let next = step_imex(&s, &heat(2.0, 1.0), dt).unwrap();
    let factor = 1.0 / (1.0 + FOUR_PI_SQ * 2.0 * dt);
    let c = transform(&next.u).coeff(&[1]).unwrap();
    assert!((c.re - 0.5 * factor).abs() < 1e-15);
    assert!((next.t - dt).abs() < 1e-18);
}

#[test]
fn rk4_matches_the_exponential_on_a_single_mode() {
    let g = grid(16);
    let s = cos_state(g, 0.0, 1.0);
    for dt in [1e-4, 5e-5] {
        let next = step_rk4(&s, &heat(1.0, 1.0), dt).unwrap();
        let c = transform(&next.u).coeff(&[1]).unwrap().re;
        let exact = 0.5 * (-FOUR_PI_SQ * dt).exp();
        assert!((c - exact).abs() < 0.5 * (FOUR_PI_SQ * dt).powi(5) / 120.0 * 1.01 + 1e-16);
    }
}

#[test]
fn constant_states_are_fixed_points() {
    let g = grid(16);
    let s = State::new(0.0, Field::constant(g, 0.3), Field::constant(g, 0.7)).unwrap();
    let spec = ModelSpec::nonconvex();
    for next in [
        step_imex(&s, &spec, 1e-3).unwrap(),
        step_rk4(&s, &spec, 1e-5).unwrap(),
    ] {
        assert!((&next.u - &s.u).max_abs() < 1e-15);
        assert!((&next.v - &s.v).max_abs() < 1e-15);
    }
}

#[test]
fn one_step_imex_and_rk4_agree() {
    let g = grid(32);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut field =
        |amp: f64| random_trig_field(g, &mut rng, |xi| xi[0].abs() <= 2).map(|x| 0.01 + amp * x);
    let small = State::new(0.0, field(1e-3), field(1e-3)).unwrap();
    let diff = |s: &State, dt: f64| {
        let a = step_imex(s, &skt(), dt).unwrap();
        let b = step_rk4(s, &skt(), dt).unwrap();
        (&a.u - &b.u).max_abs().max((&a.v - &b.v).max_abs())
    };
    assert!(diff(&small, 1e-6) < 1e-10);
    // The one-step gap is the O(dt²) local error of the IMEX scheme.
    let s = State::new(0.0, field(0.05), field(0.05)).unwrap();
    let ratio = diff(&s, 1e-6) / diff(&s, 5e-7);
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
}

#[test]
fn rk4_enforces_its_step_bound() {
    let g = grid(64);
    let s = cos_state(g, 0.5, 0.1);
    let bound = rk4_dt_bound(&skt(), &s);
    assert!(step_rk4(&s, &skt(), bound * 0.99).is_ok());
    assert!(matches!(
        step_rk4(&s, &skt(), bound * 1.01),
        Err(Error::Config(_))
    ));
}

#[test]
fn heat_solution_matches_the_closed_form() {
    let g = grid(32);
    let (d1, dt, t) = (1.0, 1e-5, 0.05);
    let config = RunConfig::new(heat(d1, 1.0), cos_state(g, 0.5, 0.1), dt, t);
    let traj = simulate(&config).unwrap();
    let last = traj.last();
    assert!((last.t - t).abs() < 1e-15);
    let mode = |amp: f64| Field::from_fn(g, |[x, _]| 0.5 + 0.1 * amp * (2.0 * PI * x).cos());
    // Backward Euler reproduces (1 + λdt)^{-n} exactly ...
    let lambda = FOUR_PI_SQ * d1;
    let discrete = mode((1.0 + lambda * dt).powi(5000).recip());
    assert!((&last.u - &discrete).max_abs() < 1e-13);
    // ... which differs from e^{-λt} by its first-order defect ≈ aλ²t·dt/2·e^{-λt}.
    let continuum = mode((-lambda * t).exp());
    let defect = 0.1 * lambda * lambda * t * dt / 2.0 * (-lambda * t).exp();
    let err = (&last.u - &continuum).max_abs();
    assert!((err / defect - 1.0).abs() < 0.01, "{err} vs {defect}");
}

#[test]
fn zero_data_stays_zero() {
    let g = grid(16);
    let z = Field::zeros(g);
    let config = RunConfig::new(skt(), State::new(0.0, z.clone(), z).unwrap(), 1e-3, 0.01);
    let traj = simulate(&config).unwrap();
    assert!(traj
        .states()
        .iter()
        .all(|s| s.u.max_abs() == 0.0 && s.v.max_abs() == 0.0));
}

#[test]
fn skt_regression_run() {
    let g = grid(64);
    let init = cos_state(g, 0.05, 0.05);
    let mut config = RunConfig::new(skt(), init, 1e-3, 1.0);
    config.record_every = 50;
    let traj = simulate(&config).unwrap();
    assert_eq!(traj.diagnostics().len(), 1001);
    assert_eq!(traj.states().len(), 21);
    let d0 = traj.diagnostics()[0];
    for d in traj.diagnostics() {
        assert!((d.mass_u - d0.mass_u).abs() < 1e-13);
        assert!((d.mass_v - d0.mass_v).abs() < 1e-13);
        assert!(d.min_u >= -1e-9 && d.min_v >= -1e-9);
    }
}

#[test]
fn recording_lands_on_t_end() {
    let g = grid(16);
    let mut config = RunConfig::new(heat(1.0, 1.0), cos_state(g, 1.0, 0.1), 0.003, 0.01);
    config.record_every = 2;
    let traj = simulate(&config).unwrap();
    assert_eq!(traj.times(), vec![0.0, 0.006, 0.01]);
    assert_eq!(traj.diagnostics().len(), 5);
}

#[test]
fn regularization_limits() {
    let g = grid(32);
    let init = cos_state(g, 0.2, 0.1);
    let plain = RunConfig::new(heat(1.0, 2.0), init.clone(), 1e-3, 0.02);
    let reg = RunConfig {
        spec: plain.spec.clone().with_regularization(0.1, 0.05).unwrap(),
        ..plain.clone()
    };
    let a = simulate(&plain).unwrap();
    let b = simulate_regularized(&reg).unwrap();
    assert_eq!(a.last().u, b.last().u);

    let plain = RunConfig::new(skt(), init, 1e-3, 0.02);
    let reg = RunConfig {
        spec: plain.spec.clone().with_regularization(1e-8, 1e6).unwrap(),
        ..plain.clone()
    };
    let a = simulate(&plain).unwrap();
    let b = simulate_regularized(&reg).unwrap();
    assert!((&a.last().u - &b.last().u).max_abs() < 1e-6);
    assert!(simulate_regularized(&plain).is_err());
}

#[test]
fn blow_up_carries_the_partial_trajectory() {
    let g = grid(32);
    let spec = ModelSpec::new(
        1.0,
        1.0,
        Poly2::from_terms(&[(4, 0, 1.0)]).unwrap(),
        Poly2::zero(),
    )
    .unwrap();
    let config = RunConfig::new(spec, cos_state(g, 20.0, 10.0), 0.01, 10.0);
    match simulate(&config) {
        Err(Error::BlowUp { step, partial, .. }) => {
            assert!(step >= 1);
            assert_eq!(partial.diagnostics().len(), step);
        }
        other => panic!("expected blow-up, got {:?}", other.map(|t| t.times().len())),
    }
}

#[test]
fn invalid_configs() {
    let g = grid(16);
    let s = cos_state(g, 0.5, 0.1);
    let bad = [
        RunConfig::new(skt(), s.clone(), 0.0, 1.0),
        RunConfig::new(skt(), s.clone(), 2.0, 1.0),
        RunConfig {
            record_every: 0,
            ..RunConfig::new(skt(), s.clone(), 0.1, 1.0)
        },
        RunConfig::new(skt(), cos_state(g, 0.0, 0.1), 0.1, 1.0),
    ];
    for c in &bad {
        assert!(simulate(c).is_err());
    }
}

mod kolmogorov {
    use super::*;

    fn cos1(g: TorusGrid) -> Field {
        Field::from_fn(g, |[x, _]| (2.0 * PI * x).cos())
    }

    #[test]
    fn heat_and_constant_cases() {
        let g = grid(32);
        let one = TimeSeriesField::constant(Field::constant(g, 1.0), 0.05).unwrap();
        let zero = TimeSeriesField::constant(Field::zeros(g), 0.05).unwrap();
        let z = solve_kolmogorov(&cos1(g), &one, &zero, 2e-7, 0.005).unwrap();
        let exact = cos1(g).map(|x| x * (-FOUR_PI_SQ * 0.005).exp());
        assert!((&z.fields()[z.len() - 1] - &exact).max_abs() < 1e-6);

        let c = Field::constant(g, 0.7);
        let z = solve_kolmogorov(&c, &one, &zero, 1e-3, 0.05).unwrap();
        assert!(z.fields().iter().all(|f| (f - &c).max_abs() < 1e-15));
    }

    #[test]
    fn variable_mobility_matches_rk4() {
        let g = grid(32);
        let mu = Field::from_fn(g, |[x, _]| 1.0 + 0.5 * (2.0 * PI * x).cos());
        let mu = TimeSeriesField::constant(mu, 0.002).unwrap();
        let zero = TimeSeriesField::constant(Field::zeros(g), 0.002).unwrap();
        let a = solve_kolmogorov(&cos1(g), &mu, &zero, 2e-7, 0.002).unwrap();
        let b = solve_kolmogorov_with(&cos1(g), &mu, &zero, 1e-5, 0.002, Scheme::Rk4, 100).unwrap();
        let diff = &a.fields()[a.len() - 1] - &b.fields()[b.len() - 1];
        assert!(crate::spaces::lp_norm(&diff, 2.0).unwrap() < 1e-6);
        let m0 = cos1(g).mean();
        assert!(a.fields().iter().all(|f| (f.mean() - m0).abs() < 1e-14));
    }

    #[test]
    fn nonpositive_mobility_is_rejected() {
        let g = grid(16);
        let mu = TimeSeriesField::constant(Field::from_fn(g, |[x, _]| (2.0 * PI * x).cos()), 1.0)
            .unwrap();
        let zero = TimeSeriesField::constant(Field::zeros(g), 1.0).unwrap();
        assert!(matches!(
            solve_kolmogorov(&cos1(g), &mu, &zero, 1e-3, 0.1),
            Err(Error::Domain(_))
        ));
    }
}
