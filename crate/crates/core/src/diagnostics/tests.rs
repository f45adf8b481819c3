use super::*;
use crate::cutoff::{CutoffParams, ShellSequence};
use crate::dynamics::{simulate, Frame, ParticleState, Scheme, SchemeParams};
use crate::geometry::Point;
use crate::pointfields::sample_poisson;

fn frame(time: f64, xs: &[(f64, bool)]) -> Frame {
    Frame {
        time,
        particles: xs
            .iter()
            .enumerate()
            .map(|(i, &(x, frozen))| ParticleState { label: i as u32 + 1, frozen, x: Point::d1(x), local_time: 0.0 })
            .collect(),
    }
}

fn path(frames: Vec<Frame>) -> PathRecord {
    PathRecord { model: "test".into(), dim: 1, scheme: Scheme::Lower, radius: 10.0, frames, events: vec![] }
}

#[test]
fn erf_tail_values() {
    assert_eq!(erf_tail(0.0), 0.5);
    assert!(erf_tail(40.0) < 1e-300);
    assert!((erf_tail(1.0) - 0.1586553).abs() < 1e-7);
    // Against quadrature of the density on a grid of t.
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    for i in 0..=20 {
        let t = -5.0 + 0.5 * i as f64;
        let q = integrate_adaptive(phi, t, 40.0, 1e-15);
        assert!((erf_tail(t) - q).abs() < 1e-10, "t={t}");
    }
}

#[test]
fn a4_examples() {
    let v = check_a4(|_| 1.0, 0.0, 1.0, 1).unwrap();
    assert!((v - 2.0 / (2.0 * PI).sqrt()).abs() < 1e-9, "{v}");
    assert_eq!(check_a4(|_| 0.0, 1.0, 2.0, 2).unwrap(), 0.0);
    let g = check_a4(|_| 1.0 / PI, 3.0, 2.0, 2).unwrap();
    assert!(g.is_finite() && g > 0.0);
    assert!(matches!(check_a4(|u| (u * u).exp(), 0.0, 1.0, 1), Err(Error::A4Violation { .. })));
    let seq = a4_liminf_sequence(1.0, 1, 5.0, 1.0, 4096.0);
    assert!(seq.last().unwrap().1 < 1e-10);
}

#[test]
fn nbj_and_min_gap_examples() {
    let all_frozen = path(vec![frame(0.0, &[(0.5, true), (1.5, true), (3.0, true)]), frame(1.0, &[(0.5, true), (1.5, true), (3.0, true)])]);
    assert_eq!(nbj_index(&all_frozen, 2.0, 1.0), 2);
    let single = path(vec![frame(0.0, &[(0.3, false)]), frame(1.0, &[(0.8, false)])]);
    assert_eq!(nbj_index(&single, 1.0, 1.0), 1);
    let two_frozen = path(vec![frame(0.0, &[(2.0, true), (3.0, true)])]);
    assert_eq!(min_gap(&two_frozen, false), 1.0);
    let mover = path(vec![
        frame(0.0, &[(0.2, false), (1.1, false), (2.5, true)]),
        frame(0.5, &[(0.4, false), (2.4, false), (2.5, true)]),
        frame(1.0, &[(0.9, false), (1.4, false), (2.5, true)]),
    ]);
    // Monotone in r and T.
    assert!(nbj_index(&mover, 1.0, 0.0) <= nbj_index(&mover, 1.0, 1.0));
    assert!(nbj_index(&mover, 1.0, 1.0) <= nbj_index(&mover, 3.0, 1.0));
    assert!((min_gap(&mover, false) - 0.1).abs() < 1e-12);
    assert!((min_gap(&mover, true) - 0.1).abs() < 1e-12);
}

#[test]
fn wasserstein_basics() {
    assert_eq!(wasserstein1(&[0.0, 1.0], &[0.0, 1.0]), 0.0);
    assert!((wasserstein1(&[0.0, 1.0], &[2.0, 3.0]) - 2.0).abs() < 1e-15);
    assert!((wasserstein1(&[0.0], &[0.0, 1.0]) - 0.5).abs() < 1e-15);
    let a = [0.3, -1.2, 2.2, 0.0];
    let b = [1.0, 0.5, -0.1];
    assert_eq!(wasserstein1(&a, &b), wasserstein1(&b, &a));
}

fn free_runs(seed: u64, n: usize, t_end: f64) -> Vec<PathRecord> {
    let cut = CutoffParams::new(2.0, 3.0, 4.0, ShellSequence::affine(10, 4));
    let mut params = SchemeParams::new(Scheme::Lower, 6.0, 1e-2, t_end, cut);
    params.record_every = 10;
    let w = Window::Ball { dim: 1, radius: 6.0 };
    SeedSpec::new(seed, 0)
        .replicas(n)
        .map(|s| simulate(&sample_poisson(3.0, &w, s).unwrap(), &ModelSpec::free(1), &params, s).unwrap())
        .collect()
}

#[test]
fn scheme_distance_self_and_symmetry() {
    let a = free_runs(1, 30, 0.5);
    let b = free_runs(2, 30, 0.5);
    let s = SeedSpec::new(0, 0);
    let d = scheme_distance(&a, &a, 3.0, 0.5, Pairing::Independent, s).unwrap();
    assert_eq!(d.w1, 0.0);
    assert_eq!(d.intensity_gap, 0.0);
    assert!(d.w1_se > 0.0);
    let ab = scheme_distance(&a, &b, 3.0, 0.5, Pairing::Independent, s).unwrap();
    let ba = scheme_distance(&b, &a, 3.0, 0.5, Pairing::Independent, s).unwrap();
    assert_eq!(ab.w1, ba.w1);
    assert_eq!(ab.w1_se, ba.w1_se);
    assert_eq!(ab.intensity_gap_se, ba.intensity_gap_se);
    let mut other = b.clone();
    other[0].model = "else".into();
    assert!(matches!(scheme_distance(&a, &other, 3.0, 0.5, Pairing::Paired, s), Err(Error::Config(_))));
}

#[test]
fn free_dynamics_is_invariant_and_moments_scale() {
    let runs = free_runs(3, 60, 1.0);
    let sampling = Window::Ball { dim: 1, radius: 6.0 };
    let analysis = Window::Ball { dim: 1, radius: 4.0 };
    let rep = invariance_test(&runs, &[0.5, 1.0], &sampling, &analysis, &[0.0, 0.5, 1.0, 1.5], 3.0).unwrap();
    assert!(rep.passed(), "{}", rep.to_markdown());
    let fit = moment4_check(&runs, &[0.1, 0.2, 0.3, 0.4], 2.0).unwrap();
    assert!((fit.slope - 2.0).abs() < 0.3, "slope {}", fit.slope);
    assert!(moment4_check(&runs, &[0.1, 0.2], 2.0).is_err());
}
