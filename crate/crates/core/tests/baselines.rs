use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaysel::baselines::*;
use relaysel::channel::*;
use relaysel::experiments::{paired_channels, run_cell_comparison, CellSetup, RateUnit, System};
use relaysel::model::{ChannelInstance, Codebook, SolverOptions};

fn sum_log(q: &[f64], g: &[f64]) -> f64 {
    q.iter().zip(g).map(|(q, g)| (1.0 + q * g).log2()).sum()
}

/// Best grid point of the simplex `sum q = p` with `steps` cells per axis.
fn grid_best(g: &[f64], p: f64, steps: usize) -> f64 {
    let h = p / steps as f64;
    match g.len() {
        1 => sum_log(&[p], g),
        2 => (0..=steps)
            .map(|i| sum_log(&[i as f64 * h, p - i as f64 * h], g))
            .fold(f64::MIN, f64::max),
        3 => {
            let mut best = f64::MIN;
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let q = [i as f64 * h, j as f64 * h, p - (i + j) as f64 * h];
                    best = best.max(sum_log(&q, g));
                }
            }
            best
        }
        _ => unreachable!(),
    }
}

#[test]
fn waterfilling_beats_every_grid_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let k = rng.random_range(1..=3);
        let g: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..10.0)).collect();
        let p = rng.random_range(0.1..5.0);
        let a = siso_allocate(&g, p, SystemObjective::Sum).unwrap();
        assert!((a.power.iter().sum::<f64>() - p).abs() < 1e-12);
        let best = grid_best(&g, p, if k == 3 { 600 } else { 20_000 });
        assert!(a.rates.sum_rate >= best - 1e-12, "{g:?} {p}");
        assert!(
            a.rates.sum_rate - best <= 1e-5,
            "{g:?} {p}: {}",
            a.rates.sum_rate - best
        );
    }
}

#[test]
fn equal_rate_uses_the_whole_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let k = rng.random_range(1..10);
        let g: Vec<f64> = (0..k).map(|_| rng.random_range(1e-3..1e3)).collect();
        let p = rng.random_range(0.01..100.0);
        let a = siso_allocate(&g, p, SystemObjective::MaxMin).unwrap();
        assert!((a.power.iter().sum::<f64>() / p - 1.0).abs() < 1e-12);
        let r0 = a.rates.per_user[0];
        assert!(a
            .rates
            .per_user
            .iter()
            .all(|r| (r - r0).abs() <= 1e-12 * r0.max(1.0)));
        // Any other split leaves someone below the common rate.
        let s = siso_allocate(&g, p, SystemObjective::Sum).unwrap();
        assert!(s.rates.min_rate <= a.rates.min_rate + 1e-12);
        assert!(s.rates.sum_rate >= a.rates.sum_rate - 1e-12);
    }
}

#[test]
fn miso_never_loses_to_siso_on_paired_channels() {
    let cfg = ScenarioConfig::default();
    let users = 6;
    for t in 0..1000 {
        let streams = Streams::new(31, t);
        let pts = uniform_annulus(0.5, 1.0, users, &mut streams.rng(StreamClass::Placement));
        let placement = Placement::new(&cfg, pts);
        let large = draw_large_scale(&placement, &cfg, &streams);
        let small = draw_small_scale(cfg.num_relays, users, &cfg, &streams);
        let ch = paired_channels(
            &cfg,
            &large,
            &small,
            &mut streams.rng(StreamClass::ExtraAntennaFade),
        )
        .unwrap();
        assert!(ch.miso.iter().all(|h| h.len() == cfg.num_relays + 1));
        for obj in [SystemObjective::Sum, SystemObjective::MaxMin] {
            let s = siso_rates(&ch.siso_gains, cfg.tx_power_mw(), obj).unwrap();
            let m = miso_rates(&ch.miso, cfg.tx_power_mw(), obj).unwrap();
            assert!(m.sum_rate >= s.sum_rate - 1e-9);
            assert!(m.min_rate >= s.min_rate - 1e-9);
        }
    }
}

#[test]
fn one_antenna_miso_is_siso() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let h: Vec<Vec<Complex64>> = (0..4)
            .map(|_| {
                vec![Complex64::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                )]
            })
            .collect();
        let g: Vec<f64> = h.iter().map(|v| v[0].norm_sqr()).collect();
        for obj in [SystemObjective::Sum, SystemObjective::MaxMin] {
            let a = miso_rates(&h, 2.0, obj).unwrap();
            let b = siso_rates(&g, 2.0, obj).unwrap();
            for (x, y) in a.per_user.iter().zip(&b.per_user) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn relay_system_degenerate_cases() {
    let opts = SolverOptions::default();
    let silent =
        ChannelInstance::new(vec![1.0, 4.0, 0.5], vec![vec![0.0; 3], vec![0.0; 3]], None).unwrap();
    for obj in [SystemObjective::Sum, SystemObjective::MaxMin] {
        for cb in [Codebook::Repetition, Codebook::Independent] {
            let r = relay_system_rates(&silent, obj, cb, &opts).unwrap();
            for (rate, c) in r.per_user.iter().zip(silent.direct()) {
                assert!((rate - 0.5 * (1.0 + c).log2()).abs() < 1e-12);
            }
        }
    }
    let single = ChannelInstance::new(vec![2.0], vec![vec![5.0]], None).unwrap();
    for obj in [SystemObjective::Sum, SystemObjective::MaxMin] {
        let r = relay_system_rates(&single, obj, Codebook::Repetition, &opts).unwrap();
        assert!((r.per_user[0] - 0.5 * 8f64.log2()).abs() < 1e-12);
        let r = relay_system_rates(&single, obj, Codebook::Independent, &opts).unwrap();
        assert!((r.per_user[0] - 0.5 * 3f64.log2() - 0.5 * 6f64.log2()).abs() < 1e-12);
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn rates_fall_as_the_cell_grows() {
    let cfg = ScenarioConfig::default();
    let radii = vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let setup = CellSetup {
        radii_km: radii.clone(),
        objective: SystemObjective::Sum,
        codebook: Codebook::Repetition,
        location_sets: 3,
        fades_per_set: 3,
        rate_unit: RateUnit::BitsPerHz,
    };
    let rows = run_cell_comparison(&cfg, &setup, Some(1)).unwrap();
    assert_eq!(rows.len(), 3 * radii.len());
    for system in System::ALL {
        let means: Vec<f64> = rows
            .iter()
            .filter(|r| r.system == system)
            .map(|r| r.mean_rate)
            .collect();
        let rho = spearman(&radii, &means);
        assert!(rho < 0.0, "{system:?}: {means:?}");
    }
    for r in &rows {
        assert!(r.outage1 <= r.outage10 && r.outage10 <= r.mean_rate * 10.0);
        assert_eq!(r.samples, r.users * 9);
    }
}

#[test]
fn bits_per_second_scales_by_bandwidth() {
    let cfg = ScenarioConfig::default();
    let mut setup = CellSetup {
        radii_km: vec![1.0],
        objective: SystemObjective::MaxMin,
        codebook: Codebook::Repetition,
        location_sets: 2,
        fades_per_set: 2,
        rate_unit: RateUnit::BitsPerHz,
    };
    let hz = run_cell_comparison(&cfg, &setup, Some(1)).unwrap();
    setup.rate_unit = RateUnit::BitsPerSecond;
    let bps = run_cell_comparison(&cfg, &setup, Some(1)).unwrap();
    for (a, b) in hz.iter().zip(&bps) {
        assert!((b.outage10 / (a.outage10 * 200e3) - 1.0).abs() < 1e-12);
        assert!((b.mean_rate / (a.mean_rate * 200e3) - 1.0).abs() < 1e-12);
    }
}
