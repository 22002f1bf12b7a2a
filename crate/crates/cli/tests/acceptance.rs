//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use spinnet_cli::{execute_with_workers, load, Command, Overrides};
use spinnet_core::analyzers::{self, BsaKind, BsaModel};
use spinnet_core::cluster::{self, EmissionConfig};
use spinnet_core::interface::{self, EmitterParams};
use spinnet_core::mc;
use spinnet_core::qsim::gates::Bell;
use spinnet_core::qsim::{CMatrix, PureState, QubitLabel, Register, C64};
use spinnet_core::repeater::{self, Mode, ParityCode, RepeaterConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ideal_bsa() -> BsaModel {
    BsaModel::new(BsaKind::CavityCz, EmitterParams::cavity(f64::INFINITY))
}

fn linear_bsa() -> BsaModel {
    BsaModel::new(BsaKind::LinearOptics { aux_photons: 0 }, EmitterParams::waveguide(1.0))
}

fn reflection_limits() -> Check {
    let mut worst = 0.0f64;
    for c in [0.0, 0.25, 1.0, 50.0, 1e6] {
        worst = worst.max((interface::reflection_coefficient(c, false) + 1.0).abs());
    }
    let min_high = [50.0, 100.0, 1e3, 1e6]
        .iter()
        .map(|&c| interface::reflection_coefficient(c, true))
        .fold(f64::INFINITY, f64::min);
    let at_one = interface::reflection_coefficient(1.0, true);
    ensure(
        worst <= 1e-12 && min_high > 0.98 && (at_one - 0.6).abs() <= 1e-12,
        format!("|r(N_s=0)+1| <= {worst:.1e}, min r(C>=50) = {min_high:.6}, r(1) = {at_one}"),
    )
}

fn cz_scaling() -> Check {
    let cs = [10.0, 1e2, 1e3, 1e4];
    let ideal = interface::ideal_spin_photon_cz();
    let mut pts = Vec::new();
    for c in cs {
        let ch = interface::spin_photon_cz_channel(&EmitterParams::cavity(c), QubitLabel::photon(1), QubitLabel::spin(0))
            .map_err(|e| e.to_string())?;
        let infidelity = 1.0 - ch.entanglement_fidelity(&ideal);
        pts.push((c.ln(), infidelity.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ensure((slope + 1.0).abs() <= 0.15, format!("log-log slope {slope:.4}"))
}

fn deterministic_speedup() -> Check {
    let trials = 100_000;
    let run = |bsa: BsaModel| {
        let cfg = RepeaterConfig::new(Mode::TwoWay, 50.0, 1, EmitterParams::waveguide(1.0), bsa);
        repeater::simulate_two_way(&cfg, trials, 3).map_err(|e| e.to_string())
    };
    let det = run(ideal_bsa())?;
    let lin = run(linear_bsa())?;
    let ratio = det.rate_hz / lin.rate_hz;
    ensure(
        (ratio / 2.0 - 1.0).abs() <= 0.05,
        format!("rate ratio {ratio:.4} ({:.1} Hz vs {:.1} Hz, {trials} trials)", det.rate_hz, lin.rate_hz),
    )
}

fn active_two_spin_success() -> Check {
    let trials = 100_000u64;
    let mut parts = Vec::new();
    let mut ok = true;
    for (beta, want) in [(0.6, 0.04), (0.8, 0.36), (0.95, 0.81)] {
        let m = BsaModel::new(BsaKind::ActiveTwoSpin, EmitterParams::waveguide(beta));
        let b = analyzers::bench_bsa(&m, trials, 11).map_err(|e| e.to_string())?;
        let sigma = (want * (1.0 - want) / trials as f64).sqrt();
        let z = (b.success_fraction - want) / sigma;
        ok &= z.abs() <= 3.0;
        parts.push(format!("beta {beta}: {:.5} ({z:+.2} sigma)", b.success_fraction));
    }
    ensure(ok, parts.join(", "))
}

fn emission_stabilizers() -> Check {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for rotate in [false, true] {
            let mut cfg = EmissionConfig::new(n, EmitterParams::waveguide(1.0));
            cfg.intermediate_rotation = rotate;
            let h = cluster::emit(&cfg).map_err(|e| e.to_string())?;
            let expected = if rotate { cluster::cluster_generators(n) } else { cluster::ghz_generators(n) };
            if h.stabilizers != expected || expected.len() != n + 1 {
                return Err(format!("n = {n}: wrong generator set"));
            }
            for (_, v) in h.stabilizer_report().map_err(|e| e.to_string())? {
                worst = worst.max((v - 1.0).abs());
            }
        }
    }
    let herald = cluster::herald_probability(&EmitterParams::waveguide(0.9), 2).map_err(|e| e.to_string())?;
    ensure(
        worst <= 1e-9 && herald == 0.9 * 0.9 && (herald - 0.81).abs() <= f64::EPSILON,
        format!("max |<g> - 1| = {worst:.1e}, herald(0.9, n=2) = {herald}"),
    )
}

/// Independent 16x16 density matrices, qubit order `[q0, q1, q2, q3]`
/// with `q0` the most significant bit.
mod oracle {
    use super::*;

    pub fn werner(f: f64) -> CMatrix {
        let amps = Bell::PhiPlus.amplitudes();
        let v = CMatrix::from_column_slice(4, 1, &amps);
        let rest = (1.0 - f) / 3.0;
        &v * v.adjoint() * C64::new(f - rest, 0.0) + CMatrix::identity(4, 4) * C64::new(rest, 0.0)
    }

    fn phi_fidelity(rho: &CMatrix) -> f64 {
        let v = CMatrix::from_column_slice(4, 1, &Bell::PhiPlus.amplitudes());
        (v.adjoint() * rho * v)[(0, 0)].re
    }

    /// Fidelity of `[q0, q3]` after projecting `[q1, q2]` on each Bell state
    /// and undoing it with the matching Pauli on `q3`.
    pub fn swap(f1: f64, f2: f64) -> [f64; 4] {
        let rho = werner(f1).kronecker(&werner(f2));
        Bell::ALL.map(|b| {
            let amps = b.amplitudes();
            let mut out = CMatrix::zeros(4, 4);
            for (r, c) in (0..16).flat_map(|r| (0..16).map(move |c| (r, c))) {
                let (rb, cb) = ((r >> 1) & 3, (c >> 1) & 3);
                let weight = amps[rb].conj() * amps[cb];
                let (ro, co) = ((r >> 3) << 1 | (r & 1), (c >> 3) << 1 | (c & 1));
                out[(ro, co)] += weight * rho[(r, c)];
            }
            let p = out.trace().re;
            let fix = CMatrix::identity(2, 2).kronecker(&b.correction());
            phi_fidelity(&(&fix * out * fix.adjoint() / C64::new(p, 0.0)))
        })
    }

    fn cnot(control: usize, target: usize) -> CMatrix {
        let mut u = CMatrix::zeros(16, 16);
        for j in 0..16usize {
            let i = if (j >> (3 - control)) & 1 == 1 { j ^ (1 << (3 - target)) } else { j };
            u[(i, j)] = C64::new(1.0, 0.0);
        }
        u
    }

    /// `(probability, fidelity)` for readouts `00` and `11` of `[q2, q3]`
    /// after CNOTs `q0 -> q2` and `q1 -> q3`.
    pub fn purify(f1: f64, f2: f64) -> [(f64, f64); 2] {
        let u = cnot(0, 2) * cnot(1, 3);
        let rho = &u * werner(f1).kronecker(&werner(f2)) * u.adjoint();
        [0usize, 3].map(|m| {
            let mut out = CMatrix::zeros(4, 4);
            for (i, j) in (0..4).flat_map(|i| (0..4).map(move |j| (i, j))) {
                out[(i, j)] = rho[(i << 2 | m, j << 2 | m)];
            }
            let p = out.trace().re;
            (p, phi_fidelity(&(out / C64::new(p, 0.0))))
        })
    }
}

fn swap_and_purify_oracles() -> Check {
    let target = repeater::phi_plus();
    let mut rng = mc::trial_rng(6, 0);
    let mut worst = 0.0f64;
    let pairs = [(1.0, 1.0), (0.95, 0.9), (0.8, 0.7), (0.6, 0.99), (0.5, 0.5)];
    for (f1, f2) in pairs {
        let w1 = repeater::werner_pair(f1).map_err(|e| e.to_string())?;
        let w2 = repeater::werner_pair(f2).map_err(|e| e.to_string())?;
        let want = oracle::swap(f1, f2);
        for _ in 0..16 {
            let out = repeater::entanglement_swap(&w1, &w2, &ideal_bsa(), &mut rng)
                .map_err(|e| e.to_string())?
                .ok_or("ideal swap failed")?;
            let f = out.fidelity(&target).map_err(|e| e.to_string())?;
            for w in want {
                worst = worst.max((f - w).abs());
            }
        }
        let got = repeater::purification_branches(&w1, &w2).map_err(|e| e.to_string())?;
        for ((p, f), b) in oracle::purify(f1, f2).iter().zip(&got) {
            let fb = b.state.as_ref().ok_or("empty branch")?.fidelity(&target).map_err(|e| e.to_string())?;
            worst = worst.max((p - b.probability).abs()).max((f - fb).abs());
        }
    }
    ensure(worst <= 1e-10, format!("max deviation {worst:.1e} over {} Werner pairs", pairs.len()))
}

/// Loss patterns counted by number lost, by brute force over every subset.
fn brute_counts(n: usize, m: usize) -> Vec<u128> {
    let total = n * m;
    let mut counts = vec![0u128; total + 1];
    for lost in 0u64..(1 << total) {
        let block = |b: usize| (lost >> (b * m)) & ((1 << m) - 1);
        let some_intact = (0..n).any(|b| block(b) == 0);
        let none_erased = (0..n).all(|b| block(b) != (1 << m) - 1);
        if some_intact && none_erased {
            counts[lost.count_ones() as usize] += 1;
        }
    }
    counts
}

fn success_from_counts(counts: &[u128], eps: f64) -> f64 {
    let total = counts.len() as i32 - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * eps.powi(k as i32) * (1.0 - eps).powi(total - k as i32))
        .sum()
}

fn parity_decoding() -> Check {
    let mut codes = 0;
    let mut worst = 0.0f64;
    for n in 1..=16 {
        for m in 1..=16 / n {
            let code = ParityCode::new(n, m);
            let brute = brute_counts(n, m);
            let closed = repeater::correctable_counts(&code).map_err(|e| e.to_string())?;
            let enumerated = repeater::correctable_counts_enumerated(&code).map_err(|e| e.to_string())?;
            if closed != brute || enumerated != brute {
                return Err(format!("({n}, {m}): counts differ"));
            }
            for i in 0..=20 {
                let eps = i as f64 / 20.0;
                let cf = repeater::parity_loss_success_closed_form(&code, eps);
                worst = worst.max((cf - success_from_counts(&brute, eps)).abs());
            }
            codes += 1;
        }
    }
    let mut monotone = true;
    let mut near_zero = 1.0f64;
    for (n, m) in [(2, 2), (3, 4), (6, 6), (12, 6)] {
        let code = ParityCode::new(n, m);
        let f = |e: f64| repeater::parity_loss_success(&code, e).unwrap();
        near_zero = near_zero.min(f(1e-6));
        let grid: Vec<f64> = (0..=100).map(|i| f(i as f64 / 100.0)).collect();
        monotone &= grid.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    }
    let six = ParityCode::new(6, 6);
    let (p4, p5) = (
        repeater::parity_loss_success(&six, 0.4).map_err(|e| e.to_string())?,
        repeater::parity_loss_success(&six, 0.5).map_err(|e| e.to_string())?,
    );
    ensure(
        worst <= 1e-12 && monotone && near_zero > 1.0 - 1e-5 && p4 > p5 && p5 < 0.5,
        format!(
            "{codes} codes exact, closed form within {worst:.1e}, P(1e-6) >= {near_zero:.7}, (6,6): P(0.4) = {p4:.4}, P(0.5) = {p5:.4}"
        ),
    )
}

fn qnd_error() -> Check {
    let trials = 100_000u64;
    let mut parts = Vec::new();
    let mut ok = true;
    for beta_coh in [0.99, 0.995] {
        let p = EmitterParams::waveguide(beta_coh);
        let label = QubitLabel::presence(0);
        let wrong = mc::run_trials(trials, 21, |t, rng| {
            let present = t % 2 == 1;
            let state = PureState::basis(Register::new(vec![label]).unwrap(), present as usize)
                .unwrap()
                .to_mixed();
            let (seen, _) = analyzers::qnd_detect(&state, label, &p, rng).unwrap();
            seen != present
        })
        .into_iter()
        .filter(|w| *w)
        .count();
        let want = 1.0 / beta_coh - 1.0;
        let freq = wrong as f64 / trials as f64;
        let rel = freq / want - 1.0;
        ok &= rel.abs() <= 0.2;
        parts.push(format!("beta_coh {beta_coh}: {freq:.5} vs {want:.5} ({:+.1}%)", 100.0 * rel));
    }
    ensure(ok, parts.join(", "))
}

fn timing_scaling() -> Check {
    let distances = [100.0, 200.0, 400.0];
    let hop_km = 1.0;
    let code = ParityCode::new(12, 6);
    let mut one_way = Vec::new();
    for d in distances {
        let hops = (d / hop_km) as u32;
        let cfg = RepeaterConfig::new(Mode::OneWay, d, hops, EmitterParams::waveguide(1.0), ideal_bsa());
        let r = repeater::simulate_one_way(&cfg, &code, 2000, 5).map_err(|e| e.to_string())?;
        one_way.push(r.rate_hz);
    }
    let spread = one_way.iter().fold(0.0f64, |a, r| a.max((r / one_way[0] - 1.0).abs()));

    let n_links = 4;
    let mut waits = Vec::new();
    for d in distances {
        let cfg = RepeaterConfig::new(Mode::TwoWay, d, n_links, EmitterParams::waveguide(1.0), linear_bsa());
        let r = repeater::simulate_two_way(&cfg, 4000, 5).map_err(|e| e.to_string())?;
        waits.push(r.mean_wait_s);
    }
    let growth: Vec<f64> = waits.windows(2).map(|w| w[1] / w[0]).collect();
    ensure(
        spread <= 1e-3 && growth.iter().all(|g| *g >= 2.0),
        format!(
            "one-way rate spread {spread:.1e} ({:.4e} Hz), two-way wait per doubling x{:.2}, x{:.2}",
            one_way[0], growth[0], growth[1]
        ),
    )
}

fn determinism() -> Check {
    let dir = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"));
    let cases = [
        ("bsa_bench.toml", Command::BsaBench),
        ("cluster.toml", Command::ClusterGen),
        ("repeater_2way.toml", Command::Repeater2Way),
        ("repeater_1way.toml", Command::Repeater1Way),
    ];
    let o = Overrides {
        trials: Some(400),
        ..Overrides::default()
    };
    for (file, cmd) in cases {
        let text = std::fs::read_to_string(dir.join(file)).map_err(|e| e.to_string())?;
        let cfg = load(&text, cmd, &o).map_err(|e| e.to_string())?;
        let outputs: Vec<String> = [1, 2, 8, 8]
            .iter()
            .map(|&w| execute_with_workers(&cfg, w).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("{file}: output differs across runs"));
        }
    }
    ensure(true, format!("{} commands identical at 1, 2, 8, 8 workers", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("reflection coefficient limits", reflection_limits),
        ("CZ infidelity scales as 1/C", cz_scaling),
        ("deterministic analyzer doubles link rate", deterministic_speedup),
        ("active two-spin success (2b-1)^2", active_two_spin_success),
        ("GHZ and cluster stabilizers, herald probability", emission_stabilizers),
        ("swap and purification match 16x16 oracles", swap_and_purify_oracles),
        ("parity-code loss decoding", parity_decoding),
        ("QND wrong-answer rate 1/beta_coh - 1", qnd_error),
        ("one-way rate flat, two-way wait grows", timing_scaling),
        ("byte-identical reruns across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
