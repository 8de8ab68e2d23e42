use multiris::dist::StaircaseControl;
use multiris::metrics::{AnalyticModels, Scheme};
use multiris::model::{build_topology, presets};
use multiris::moments::MvMethod;
use multiris::sim::{empirical_metrics, SimPlan};

#[test]
fn capacity_matches_sampling_at_moderate_power() {
    let cfg = presets::reference(&presets::L1, &presets::D1, 1);
    let topo = build_topology(&cfg).unwrap();
    let models =
        AnalyticModels::build(&topo, &MvMethod::default(), StaircaseControl::default()).unwrap();
    let rho = cfg.link_budget(15.0).unwrap().rho_bar;
    let (era, ora) =
        empirical_metrics(&SimPlan::new(200_000, 3).unwrap(), &topo, rho, 1.0).unwrap();
    for (scheme, mc) in [(Scheme::Era, era), (Scheme::Ora, ora)] {
        let ec = models.primary_capacity(scheme, rho).unwrap();
        assert!(
            ((ec - mc.capacity.value) / mc.capacity.value).abs() < 0.02,
            "{scheme}: {ec} vs {}",
            mc.capacity.value
        );
    }
}

#[test]
fn ora_outage_tracks_sampling_at_low_power() {
    let cfg = presets::reference(&presets::L1, &presets::D1, 1);
    let topo = build_topology(&cfg).unwrap();
    let models =
        AnalyticModels::build(&topo, &MvMethod::default(), StaircaseControl::default()).unwrap();
    let rho = cfg.link_budget(5.0).unwrap().rho_bar;
    let (_, ora) = empirical_metrics(&SimPlan::new(200_000, 4).unwrap(), &topo, rho, 1.0).unwrap();
    let op = models.primary_outage(Scheme::Ora, rho, 1.0).unwrap();
    assert!(op > 1e-2, "expected a visible outage, got {op}");
    assert!(
        ((op - ora.outage.value) / ora.outage.value).abs() < 0.1,
        "{op} vs {}",
        ora.outage.value
    );
}

#[test]
fn monte_carlo_is_reproducible_for_a_seed() {
    let cfg = presets::reference(&presets::L1, &presets::D1, 1);
    let topo = build_topology(&cfg).unwrap();
    let rho = cfg.link_budget(10.0).unwrap().rho_bar;
    let a = empirical_metrics(&SimPlan::new(50_000, 11).unwrap(), &topo, rho, 1.0).unwrap();
    let b = empirical_metrics(&SimPlan::new(50_000, 11).unwrap(), &topo, rho, 1.0).unwrap();
    assert_eq!(a, b);
}
