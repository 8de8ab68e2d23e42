use multiris::dist::{ContinuousDist, Staircase, StaircaseControl};
use multiris::model::{build_topology, presets};
use multiris::moments::{r_moments, ris_sum_fits, z_moments, MvMethod};
use multiris::sim::{sample_draws, sample_moments, ChannelSampler, SamplingRoute, SimPlan};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn z_and_r_moments_track_sampled_channels() {
    let topo = build_topology(&presets::reference(&presets::L1, &presets::D1, 1)).unwrap();
    let sampler = ChannelSampler::new(&topo, SamplingRoute::GammaRoot).unwrap();
    let draws = sample_draws(&SimPlan::new(400_000, 9).unwrap(), &sampler);
    let z: Vec<f64> = draws.iter().map(|d| d.z).collect();
    let r: Vec<f64> = draws.iter().map(|d| d.r).collect();

    let mz = z_moments(&topo, 2).unwrap();
    let sz = sample_moments(&z, 2);
    for k in 1..=2 {
        assert!(
            rel(mz.get(k), sz[k - 1]) < 5e-3,
            "Z moment {k}: {} vs {}",
            mz.get(k),
            sz[k - 1]
        );
    }

    // R uses the per-RIS Gamma approximation, so only the mean is tight.
    let riss = ris_sum_fits(&topo).unwrap();
    let mr = r_moments(&topo.direct, &riss, 2, &MvMethod::default()).unwrap();
    let sr = sample_moments(&r, 2);
    assert!(
        rel(mr.get(1), sr[0]) < 1e-2,
        "R mean {} vs {}",
        mr.get(1),
        sr[0]
    );
    assert!(
        rel(mr.get(2), sr[1]) < 2e-2,
        "R second moment {} vs {}",
        mr.get(2),
        sr[1]
    );
}

#[test]
fn staircase_refinement_settles() {
    let topo = build_topology(&presets::reference(&presets::L1, &presets::D1, 1)).unwrap();
    let riss = ris_sum_fits(&topo).unwrap();
    let at = |m: usize| {
        Staircase::new(topo.direct, riss.clone(), StaircaseControl::new(m).unwrap()).unwrap()
    };
    let fine = at(1000);
    // central 99% of the fine law
    let mut hi = fine.mean();
    while fine.cdf(hi) < 0.995 {
        hi *= 1.1;
    }
    let mut x = hi;
    while fine.cdf(x) > 0.005 {
        x *= 0.99;
    }
    let lo = x;
    let grid: Vec<f64> = (0..=400)
        .map(|i| lo + (hi - lo) * i as f64 / 400.0)
        .collect();
    let gap = |s: &Staircase| {
        grid.iter()
            .map(|&x| (s.cdf(x) - fine.cdf(x)).abs())
            .fold(0.0, f64::max)
    };
    // M=100 sits near 6e-3 on this scenario; the gap shrinks faster than 1/M.
    let gaps: Vec<f64> = [100, 200, 400].iter().map(|&m| gap(&at(m))).collect();
    assert!(gaps[0] < 1e-2, "{gaps:?}");
    assert!(gaps[1] < 5e-3, "{gaps:?}");
    assert!(
        gaps[0] > 2.0 * gaps[1] && gaps[1] > 2.0 * gaps[2],
        "{gaps:?}"
    );
}
