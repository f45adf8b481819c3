use super::*;
use crate::cutoff::ShellSequence;
use crate::stats::mean_se;

fn cutoff(s: f64) -> CutoffParams {
    CutoffParams::new(2.0, s, 4.0, ShellSequence::affine(10, 4))
}

fn line(xs: &[f64], radius: f64) -> Configuration {
    Configuration::with_frozen_exterior(1, xs.iter().map(|&x| Point::d1(x)).collect(), radius).unwrap()
}

#[test]
fn reflect_project_examples() {
    assert_eq!(reflect_project(&Point::d1(0.5), 1.0), (Point::d1(0.5), 0.0));
    let (p, l) = reflect_project(&Point::d2(1.2, 0.0), 1.0);
    assert_eq!(p, Point::d2(1.0, 0.0));
    assert!((l - 0.2).abs() < 1e-15);
    assert_eq!(reflect_project(&Point::d2(0.6, 0.8), 1.0), (Point::d2(0.6, 0.8), 0.0));
}

#[test]
fn lower_scheme_invariants() {
    let init = line(&[-3.7, -2.2, -1.1, -0.3, 0.4, 1.3, 2.5, 3.6, 4.4, 5.6, -5.2], 4.0);
    let params = SchemeParams::new(Scheme::Lower, 4.0, 1e-3, 0.3, cutoff(8.0));
    let rec = simulate(&init, &ModelSpec::Sine { beta: 2 }, &params, SeedSpec::new(1, 0)).unwrap();
    assert_eq!(rec.frames.len(), 301);
    let first = rec.first().unwrap();
    for f in &rec.frames {
        assert_eq!(f.movable_count(), first.movable_count());
        for p in &f.particles {
            let p0 = first.get(p.label).unwrap();
            if p.frozen {
                assert_eq!(p.x, p0.x);
                assert_eq!(p.local_time, 0.0);
            } else {
                assert!(p.x.norm() <= 4.0);
            }
        }
    }
    for w in rec.frames.windows(2) {
        for (a, b) in w[0].particles.iter().zip(&w[1].particles) {
            assert!(b.local_time >= a.local_time);
            if b.local_time > a.local_time {
                assert!(b.x.norm() == 4.0);
            }
        }
    }
}

#[test]
fn local_time_vanishes_away_from_the_wall() {
    let init = Configuration::new(2, vec![Point::d2(0.0, 0.0)]).unwrap();
    let params = SchemeParams::new(Scheme::Lower, 50.0, 1e-3, 0.5, cutoff(3.0));
    let rec = simulate(&init, &ModelSpec::free(2), &params, SeedSpec::new(3, 0)).unwrap();
    assert!(rec.max_modulus(1) < 50.0 - params.reflect_eps());
    assert!(rec.frames.iter().all(|f| f.particles[0].local_time == 0.0));
}

#[test]
fn determinism_checkpoint_and_thread_count() {
    let init = line(&[-2.9, -1.8, -0.7, 0.2, 1.1, 2.3, 3.2, -4.4, 4.6], 4.0);
    let model = ModelSpec::Sine { beta: 2 };
    let params = SchemeParams::new(Scheme::Lower, 4.0, 1e-3, 0.2, cutoff(6.0));
    let seed = SeedSpec::new(9, 2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&init, &model, &params, seed).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    let mut sim = Simulation::new(&init, &model, &params, seed).unwrap();
    sim.run_until(77).unwrap();
    let json = sim.to_checkpoint().unwrap();
    let resumed = Simulation::from_checkpoint(&json).unwrap().run().unwrap();
    assert_eq!(resumed, a);
}

#[test]
fn free_msd_matches_dimension() {
    let init = Configuration::new(2, vec![Point::d2(0.0, 0.0)]).unwrap();
    let params = SchemeParams::new(Scheme::Lower, 1e3, 1e-2, 1.0, cutoff(3.0));
    let msd: Vec<f64> = SeedSpec::new(4, 0)
        .replicas(400)
        .map(|s| simulate(&init, &ModelSpec::free(2), &params, s).unwrap().last().unwrap().particles[0].x.norm_sq())
        .collect();
    let (m, se) = mean_se(&msd);
    assert!((m - 2.0).abs() < 3.0 * se, "msd {m} ± {se}");
}

#[test]
fn upper_scheme_ideal_gas_balance() {
    let model = ModelSpec::free(1);
    let radius = 5.0;
    let mut params = SchemeParams::new(Scheme::Upper, radius, 1e-2, 40.0, cutoff(3.0));
    params.boundary_intensity = Some(2.0);
    params.record_every = 100;
    let init = crate::pointfields::sample_poisson(
        2.0,
        &crate::geometry::Window::Ball { dim: 1, radius },
        SeedSpec::new(5, 0),
    )
    .unwrap();
    let rec = simulate(&init, &model, &params, SeedSpec::new(5, 0)).unwrap();
    let counts: Vec<f64> = rec.frames.iter().map(|f| f.particles.len() as f64).collect();
    let (m, _) = mean_se(&counts);
    assert!((m - 20.0).abs() < 4.0, "mean count {m}");
    assert!(counts.iter().any(|&c| c != counts[0]));
    assert!(rec.events.iter().any(|e| e.kind == EventKind::Death));
    assert!(rec.events.iter().any(|e| e.kind == EventKind::Birth));
    assert!(rec.frames.iter().all(|f| f.particles.iter().all(|p| p.local_time == 0.0 && p.x.norm() <= radius)));
}

#[test]
fn reference_scheme_freezes_escapers() {
    let init = Configuration::new(1, vec![Point::d1(0.99)]).unwrap();
    let mut params = SchemeParams::new(Scheme::Reference, 1.0, 1e-2, 5.0, cutoff(3.0));
    params.record_every = 10;
    let rec = simulate(&init, &ModelSpec::free(1), &params, SeedSpec::new(6, 0)).unwrap();
    let ev = rec.events.iter().find(|e| e.kind == EventKind::Freeze).expect("particle should escape");
    let frozen_at = rec.frames.iter().filter(|f| f.time >= ev.time).map(|f| f.particles[0].x).collect::<Vec<_>>();
    assert!(frozen_at.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn bessel_runs_stay_positive() {
    let init = Configuration::with_frozen_exterior(1, vec![Point::d1(0.3), Point::d1(2.0), Point::d1(6.5)], 5.0).unwrap();
    let params = SchemeParams::new(Scheme::Lower, 5.0, 1e-3, 0.5, cutoff(6.0));
    let rec = simulate(&init, &ModelSpec::Bessel { alpha: 1.0 }, &params, SeedSpec::new(8, 0)).unwrap();
    assert!(rec.frames.iter().all(|f| f.particles.iter().all(|p| p.x.x() > 0.0)));
    let up = SchemeParams { scheme: Scheme::Upper, t_end: 2.0, ..params };
    assert!(simulate(&init, &ModelSpec::Bessel { alpha: 1.0 }, &up, SeedSpec::new(8, 0)).is_ok());
}

#[test]
fn rejects_movers_outside_domain() {
    let init = Configuration::new(1, vec![Point::d1(3.0)]).unwrap();
    let params = SchemeParams::new(Scheme::Lower, 2.0, 1e-3, 0.1, cutoff(3.0));
    assert!(Simulation::new(&init, &ModelSpec::free(1), &params, SeedSpec::new(0, 0)).is_err());
}
