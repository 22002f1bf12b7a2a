use proptest::prelude::*;
use spinnet_core::analyzers::{BsaKind, BsaModel};
use spinnet_core::cluster::{self, EmissionConfig, Fusion};
use spinnet_core::interface::{self, EmitterParams};
use spinnet_core::mc::trial_rng;
use spinnet_core::qsim::{gates, QuantumChannel, QubitLabel};
use spinnet_core::repeater::{self, Mode, ParityCode, RepeaterConfig};

fn ideal_bsa() -> BsaModel {
    BsaModel::new(BsaKind::CavityCz, EmitterParams::cavity(f64::INFINITY))
}

fn two_way(total: f64, n: u32) -> RepeaterConfig {
    RepeaterConfig::new(Mode::TwoWay, total, n, EmitterParams::waveguide(1.0), ideal_bsa())
}

#[test]
fn fused_ghz_strings_keep_every_generator() {
    let mut rng = trial_rng(2, 0);
    let emitter = EmitterParams::waveguide(0.9);
    let a = cluster::emit_ghz(&EmissionConfig::new(2, emitter)).unwrap();
    let b = cluster::emit_ghz(&EmissionConfig::new(3, emitter)).unwrap();
    let fused = Fusion::Fused(a.clone())
        .fuse_with(Fusion::Fused(b.clone()), &ideal_bsa(), &mut rng)
        .unwrap();
    let Fusion::Fused(h) = fused else { panic!("ideal fusion fails") };
    assert_eq!(h.state.num_qubits(), 3 + 4 - 2);
    assert_eq!(h.herald_probability, a.herald_probability * b.herald_probability);
    assert!(!h.stabilizers.is_empty());
    for (g, v) in h.stabilizer_report().unwrap() {
        assert!((v - 1.0).abs() < 1e-9, "{g}: {v}");
    }
}

#[test]
fn failed_fusion_propagates() {
    let mut rng = trial_rng(0, 0);
    let a = cluster::emit_ghz(&EmissionConfig::new(1, EmitterParams::waveguide(1.0))).unwrap();
    let out = Fusion::Failed.fuse_with(Fusion::Fused(a), &ideal_bsa(), &mut rng).unwrap();
    assert!(!out.is_fused());
}

#[test]
fn finite_memory_degrades_longer_chains() {
    let mut short = two_way(100.0, 2);
    short.emitter.t_coh = 0.05;
    let mut long = short;
    long.total_distance_km = 400.0;
    long.link = long.link.with_length(200.0);
    let a = repeater::simulate_two_way(&short, 400, 3).unwrap();
    let b = repeater::simulate_two_way(&long, 400, 3).unwrap();
    assert!(a.fidelity < 1.0 && a.fidelity > b.fidelity && b.fidelity > 0.25);
    assert!(a.rate_hz > b.rate_hz);
    let wait = a.herald_statistics.wait_s.unwrap();
    assert!(wait.min <= wait.median && wait.median <= wait.p90 && wait.p90 <= wait.max);
}

#[test]
fn purification_costs_rate() {
    let mut c = two_way(50.0, 1);
    c.emitter.gamma_dp = 0.1;
    let plain = repeater::simulate_two_way(&c, 1000, 4).unwrap();
    c.purification_rounds = 1;
    let pumped = repeater::simulate_two_way(&c, 1000, 4).unwrap();
    assert!(pumped.rate_hz < plain.rate_hz);
    assert!(pumped.fidelity > plain.fidelity, "{} vs {}", pumped.fidelity, plain.fidelity);
}

#[test]
fn configs_round_trip_through_toml() {
    let mut c = two_way(80.0, 4);
    c.bsa = BsaModel::new(BsaKind::PassiveSorter { concatenations: 3 }, EmitterParams::waveguide(0.97));
    c.emitter.t_coh = 2e-3;
    let text = toml::to_string(&c).unwrap();
    let back: RepeaterConfig = toml::from_str(&text).unwrap();
    assert_eq!(back, c);
}

#[test]
fn one_way_beats_two_way_over_long_distance() {
    let total = 400.0;
    let two = repeater::simulate_two_way(&two_way(total, 8), 300, 1).unwrap();
    let one = RepeaterConfig::new(Mode::OneWay, total, 200, EmitterParams::waveguide(1.0), ideal_bsa());
    let r = repeater::simulate_one_way(&one, &ParityCode::new(8, 5), 300, 1).unwrap();
    assert!(r.rate_hz > 100.0 * two.rate_hz, "{} vs {}", r.rate_hz, two.rate_hz);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noisy_pairs_stay_physical(
        f in 0.0f64..=1.0,
        t in 0.0f64..1e-2,
        flip in 0.0f64..=1.0,
        coh in 0.0f64..=1.0,
    ) {
        let mut p = EmitterParams::waveguide(1.0);
        p.t_coh = 1e-3;
        let a = QubitLabel::spin(0);
        let b = QubitLabel::spin(1);
        let rho = repeater::werner_pair(f).unwrap()
            .apply_channel(&interface::memory_dephasing_channel(t, &p, a).unwrap()).unwrap()
            .apply_channel(&QuantumChannel::pauli_flip(b, gates::x(), flip).unwrap()).unwrap()
            .apply_channel(&QuantumChannel::phase_damping(b, coh)).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-12);
        let fid = rho.fidelity(&repeater::phi_plus()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fid));
        prop_assert!(fid <= f.max(0.5) + 1e-12 || flip > 0.5);
    }

    #[test]
    fn swap_fidelity_never_exceeds_inputs(f1 in 0.5f64..=1.0, f2 in 0.5f64..=1.0, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let out = repeater::entanglement_swap(
            &repeater::werner_pair(f1).unwrap(),
            &repeater::werner_pair(f2).unwrap(),
            &ideal_bsa(),
            &mut rng,
        ).unwrap().unwrap();
        let f = out.fidelity(&repeater::phi_plus()).unwrap();
        prop_assert!(f <= f1.min(f2) + 1e-12);
    }
}
