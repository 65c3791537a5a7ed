use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use annihilation::concentration::{l2_mass_direct, l2_mass_modulated, max_grid_step};
use annihilation::counterexample::{
    block_probes, build_q_n, build_s_n, Bump, BumpKind, CounterexampleInstance, CounterexampleParams,
};
use annihilation::interval_sets::{epsilon_thin_check, Interval, IntervalSet, RealSet};
use annihilation::trig_kernels::{choose_degree, fejer, fejer_closed_form, minimal_fejer_order, shifted_fejer};
use annihilation::uniqueness::{block_certificate, dense_sequence};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{brute_block_count, merge};

fn bump() -> Arc<Bump> {
    Arc::new(Bump::build(BumpKind::Classic).unwrap())
}

#[test]
fn block_certificates_match_integer_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let raw: Vec<(f64, f64)> = (0..12)
            .map(|_| {
                let a = rng.random_range(0.0..20000.0);
                (a, a + rng.random_range(0.0..3000.0))
            })
            .collect();
        let set = IntervalSet::from_pairs(raw.iter().copied()).unwrap();
        let merged = merge(raw);
        for _ in 0..20 {
            let alpha: f64 = rng.random();
            for j in 0..=14 {
                let cert = block_certificate(alpha, j, &set, 0.2).unwrap();
                assert_eq!(cert.count, brute_block_count(&merged, alpha, j), "alpha {alpha} j {j}");
                assert_eq!(cert.pass, cert.count as f64 > 0.9 * 2f64.powi(j as i32));
            }
        }
    }
}

#[test]
fn integer_endpoints_and_integer_shifts() {
    let raw = vec![(3.0, 5.0), (8.0, 8.5), (17.0, 40.0)];
    let set = IntervalSet::from_pairs(raw.iter().copied()).unwrap();
    let merged = merge(raw);
    for alpha in [0.0, 0.5, 1.0 - f64::EPSILON] {
        for j in 0..8 {
            let cert = block_certificate(alpha, j, &set, 0.5).unwrap();
            assert_eq!(cert.count, brute_block_count(&merged, alpha, j));
        }
    }
}

#[test]
fn derived_block_bound() {
    // (1 - σ/4) 2^{j+1} points in (0, 2^{j+1}) \ Q leave more than (1 - σ/2) 2^j in B_j
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sigma = 0.2;
    for _ in 0..200 {
        let a = rng.random_range(0.0..40.0);
        let set = IntervalSet::from_pairs([(a, a + rng.random_range(0.0..6.0))]).unwrap();
        let alpha: f64 = rng.random();
        for j in 2..8u32 {
            let top = 2f64.powi(j as i32 + 1);
            let w = Interval::new(0.0, top).unwrap();
            let total = w.lattice_count(alpha) - u64::from(alpha == 0.0) - set.lattice_count_within(alpha, &w);
            if total as f64 > (1.0 - sigma / 4.0) * top {
                assert!(block_certificate(alpha, j, &set, sigma).unwrap().pass);
            }
        }
    }
}

/// `R(ξ)` from a separate trapezoid rule on a normalization computed here.
struct DirectTransform {
    samples: Vec<f64>,
    h: f64,
}

impl DirectTransform {
    fn new(points: usize) -> Self {
        let raw = |t: f64| if t <= 0.0 || t >= 1.0 { 0.0 } else { (-1.0 / (t * (1.0 - t))).exp() };
        let h = 1.0 / points as f64;
        let norm: f64 = (1..points).map(|j| raw(j as f64 * h).powi(2)).sum::<f64>() * h;
        let scale = norm.sqrt().recip();
        let samples = (0..=points).map(|j| scale * raw(j as f64 * h)).collect();
        Self { samples, h }
    }

    fn at(&self, xi: f64) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(j, v)| v * (TAU * xi * (j as f64 * self.h - 0.5)).cos())
            .sum::<f64>()
            * self.h
    }
}

#[test]
fn eval_f_matches_independent_evaluation() {
    let b = bump();
    let direct = DirectTransform::new(4096);
    for n in [2u32, 3, 4] {
        let params = CounterexampleParams::at_minimal_scale(n).unwrap();
        let inst = CounterexampleInstance::new(params, b.clone());
        let (m, nn, l) = (params.m as i64, params.scale as f64, params.compression as f64);
        let peak = m as f64 * direct.at(0.0) / l;
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from(n));
        for _ in 0..1000 {
            let t: f64 = rng.random_range(-l..l);
            let u = nn * t;
            let p: f64 = (-m + 1..m)
                .map(|k| (1.0 - k.abs() as f64 / m as f64) * (TAU * k as f64 * (u + 0.5)).cos())
                .sum();
            let env = direct.at(t / l) / l;
            let want = p * env;
            let got = inst.eval_f(t);
            assert!(!got.bound_only);
            // rounding of cos(2πk(u + 1/2)) grows with |u|; it dominates only near zeros of P
            let floor = 64.0 * f64::EPSILON * (u.abs() + 1.0) * (m * m) as f64 * env.abs();
            assert!(floor <= 1e-8 * peak);
            assert!(
                (got.value - want).abs() <= 1e-8 * want.abs() + floor,
                "n {n} t {t}: {} vs {want}",
                got.value
            );
        }
    }
}

#[test]
fn q_n_matches_explicit_union() {
    for (n, nn) in [(3u32, 56u64), (4, 240), (3, 77)] {
        let params = CounterexampleParams::new(n, nn).unwrap();
        let q = build_q_n(&params).materialize();
        let nf = nn as f64;
        let sq = (nn * nn) as i64;
        let half = 1.0 / n as f64;
        let explicit: Vec<(f64, f64)> = (-sq + 1..sq)
            .map(|j| ((j as f64 + 0.5 - half) / nf, (j as f64 + 0.5 + half) / nf))
            .collect();
        assert_eq!(q.len(), explicit.len());
        for (got, want) in q.intervals().iter().zip(&explicit) {
            assert!((got.lo() - want.0).abs() <= 1e-12 && (got.hi() - want.1).abs() <= 1e-12);
        }
        let w = Interval::new(-3.0, 2.5).unwrap();
        let explicit_measure: f64 = explicit
            .iter()
            .map(|&(a, b)| (b.min(w.hi()) - a.max(w.lo())).max(0.0))
            .sum();
        assert!((build_q_n(&params).measure_within(&w) - explicit_measure).abs() <= 1e-10);
    }
}

#[test]
fn s_n_measure_is_dyadic() {
    for n in 2..=20u32 {
        let params = CounterexampleParams::at_minimal_scale(n).unwrap();
        let s = build_s_n(&params);
        let want = 2f64.powi(-(n as i32));
        assert!((s.measure() - want).abs() <= 1e-15 * want, "n {n}: {}", s.measure());
    }
}

#[test]
fn integrators_agree_at_level_three() {
    let params = CounterexampleParams::new(3, 99).unwrap();
    let inst = CounterexampleInstance::new(params, bump());
    let f = inst.function();
    let q = inst.placed_q();
    let direct = l2_mass_direct(&f, &q.materialize(), max_grid_step(&f)).unwrap();
    let fast = l2_mass_modulated(&f, &q).unwrap();
    assert!((direct - fast).abs() <= 1e-6 * direct, "{direct} vs {fast}");

    // the whole window carries all but the tail of ‖f‖²
    let nn = params.scale as f64;
    let full = IntervalSet::single(Interval::new(-nn, nn).unwrap());
    let inside = l2_mass_direct(&f, &full, max_grid_step(&f)).unwrap();
    assert!(inside <= params.total_mass() && inside > 0.9 * params.total_mass());
}

#[test]
fn construction_frame_cell_centres_give_a_constant() {
    let b = bump();
    let mut eps = Vec::new();
    for n in [3u32, 4, 5] {
        let params = CounterexampleParams::at_minimal_scale(n).unwrap();
        let inst = CounterexampleInstance::new(params, b.clone());
        let nn = params.scale as f64;
        let centres: Vec<f64> = (-(params.scale as i64)..params.scale as i64)
            .step_by(7)
            .map(|j| (j as f64 + 0.5) / nn)
            .collect();
        let rep = epsilon_thin_check(&inst.q_n, 1.0, &centres).unwrap();
        eps.push((n, rep.worst_ratio));
        let grid = epsilon_thin_check(&inst.q_n, 1.0, &block_probes(0.0, params.scale, 256)).unwrap();
        assert!(grid.worst_ratio <= 2.5 / n as f64, "n {n}: {}", grid.worst_ratio);
    }
    let c = eps.iter().map(|&(n, e)| n as f64 * e).fold(0.0, f64::max);
    for &(n, e) in &eps {
        assert!(e <= c / n as f64);
    }
    assert!(c < 3.0, "{c}");
}

#[test]
fn van_der_corput_gaps() {
    for k in 1..=12u32 {
        let count = 1u64 << k;
        let mut terms: Vec<f64> = (1..=count).map(|j| dense_sequence(j).unwrap()).collect();
        terms.push(0.0);
        terms.push(1.0);
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let widest = terms.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let step = 2f64.powi(-(k as i32));
        // every open interval longer than 2^-k meets the first 2^k terms
        assert!(widest <= step, "k {k}: {widest}");
        // the bound is attained: (1 - 2^-k, 1) misses them all
        assert!(terms.iter().all(|&x| !(x > 1.0 - step && x < 1.0)));
    }
}

#[test]
fn fejer_invariants() {
    for m in [1u64, 2, 3, 5, 8, 24, 64] {
        let p = fejer::<f64>(m).unwrap();
        let grid = 16 * m as usize;
        let parseval = p.l2_norm_sq();
        assert!((p.l2_norm_sq_quadrature(grid) - parseval).abs() <= 1e-10 * parseval);
        let fine = 64 * m as usize;
        let mut top = f64::MIN;
        for i in 0..fine {
            let t = i as f64 / fine as f64;
            let v = p.eval(t);
            assert!(v >= -1e-12);
            let closed = fejer_closed_form(m, t);
            assert!((v - closed).abs() <= 1e-10 * m as f64, "m {m} t {t}");
            top = top.max(v);
        }
        assert!((top - m as f64).abs() <= 1e-10 * m as f64);
        let shifted = shifted_fejer::<f64>(m).unwrap();
        assert!((shifted.eval(0.5) - m as f64).abs() <= 1e-10 * m as f64);
    }
}

#[test]
fn degree_certificates_through_sixteen() {
    for n in 2..=16u32 {
        let c = choose_degree::<f64>(n).unwrap();
        let s = (PI / n as f64).sin();
        assert_eq!(c.m, minimal_fejer_order(n));
        assert!((c.m as f64) >= n as f64 / (s * s) - 1e-9);
        assert!(c.measured_max <= 1.0 / n as f64, "n {n}");
    }
}
