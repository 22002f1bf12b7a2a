//! One function per command; each row is read straight off a library call.

use spinnet_core::{analyzers, cluster, interface, repeater};

use crate::config::{Command, Diagnostic, RunConfig};
use crate::output::{Cell, Row, Table};
use crate::CliError;

/// Runs the configured command, or every point of its sweep.
pub fn run(cfg: &RunConfig) -> Result<Table, CliError> {
    let diags = cfg.check();
    if !diags.is_empty() {
        return Err(CliError::Validation(diags));
    }
    let target = cfg.target().map_err(|d| CliError::Validation(vec![d]))?;
    let Some(sweep) = &cfg.sweep else {
        return run_single(target, cfg);
    };
    let mut out: Option<Table> = None;
    for &v in &sweep.values {
        let point = cfg
            .with_parameter(&sweep.parameter, v)
            .map_err(|d| CliError::Validation(vec![d]))?;
        let t = run_single(target, &point)?;
        let table = out.get_or_insert_with(|| {
            let mut cols = vec![sweep.parameter.clone()];
            cols.extend(t.columns.iter().cloned());
            Table {
                command: cfg.command.unwrap_or(target),
                columns: cols,
                rows: Vec::new(),
            }
        });
        for mut r in t.rows {
            r.cells.insert(0, Cell::Num(v));
            table.rows.push(r);
        }
    }
    Ok(out.expect("sweep values are nonempty"))
}

fn missing(section: &str) -> CliError {
    CliError::Validation(vec![Diagnostic::new(section, "missing")])
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn run_single(target: Command, cfg: &RunConfig) -> Result<Table, CliError> {
    match target {
        Command::InterfaceReport => interface_report(cfg),
        Command::BsaBench => bsa_bench(cfg),
        Command::ClusterGen => cluster_gen(cfg),
        Command::Repeater2Way => repeater_two_way(cfg),
        Command::Repeater1Way => repeater_one_way(cfg),
        Command::Sweep => unreachable!("target is never sweep"),
    }
}

fn interface_report(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.emitter.as_ref().ok_or_else(|| missing("emitter"))?;
    let mut cols = vec![
        "geometry",
        "beta",
        "beta_coh",
        "cooperativity",
        "cooperativity_coh",
        "decay_fraction",
        "qnd_error_prob",
    ];
    if cfg.link.is_some() {
        cols.extend(["fiber_transmissivity", "link_delay_s"]);
    }
    let mut t = Table::new(Command::InterfaceReport, &cols);
    let geometry = match p.geometry {
        interface::Geometry::Waveguide => "waveguide",
        interface::Geometry::Cavity => "cavity",
    };
    let c = interface::effective_cooperativity(p, false).map_err(runtime)?;
    let mut cells: Vec<Cell> = vec![
        geometry.into(),
        interface::effective_beta(p, false).map_err(runtime)?.into(),
        interface::effective_beta(p, true).map_err(runtime)?.into(),
        c.into(),
        interface::effective_cooperativity(p, true).map_err(runtime)?.into(),
        interface::cavity_decay_fraction(c).into(),
        analyzers::qnd_error_prob(p).map_err(runtime)?.into(),
    ];
    if let Some(l) = &cfg.link {
        cells.push(interface::fiber_transmissivity(l).into());
        cells.push(l.delay_s(l.length_km).into());
    }
    t.rows.push(Row::new(cells));
    Ok(t)
}

fn bsa_bench(cfg: &RunConfig) -> Result<Table, CliError> {
    let m = cfg.bsa.as_ref().ok_or_else(|| missing("bsa"))?;
    let b = analyzers::bench_bsa(m, cfg.trials, cfg.seed).map_err(runtime)?;
    let mut t = Table::new(
        Command::BsaBench,
        &[
            "kind",
            "success_prob",
            "error_prob",
            "trials",
            "successes",
            "success_fraction",
            "mean_fidelity",
        ],
    );
    t.rows.push(
        Row::new(vec![
            m.kind.name().into(),
            b.success_prob.into(),
            b.error_prob.into(),
            b.trials.into(),
            b.successes.into(),
            b.success_fraction.into(),
            b.mean_fidelity.into(),
        ])
        .with_details(b),
    );
    Ok(t)
}

fn cluster_gen(cfg: &RunConfig) -> Result<Table, CliError> {
    let e = cfg.emission.as_ref().ok_or_else(|| missing("emission"))?;
    let h = cluster::emit(e).map_err(runtime)?;
    let mut t = Table::new(
        Command::ClusterGen,
        &["state", "n_photons", "generator", "expected", "measured", "herald_probability"],
    );
    let state = if e.intermediate_rotation { "cluster" } else { "ghz" };
    for (g, v) in h.stabilizer_report().map_err(runtime)? {
        t.rows.push(Row::new(vec![
            state.into(),
            (e.n_photons as u64).into(),
            g.to_string().into(),
            1.0.into(),
            v.into(),
            h.herald_probability.into(),
        ]));
    }
    Ok(t)
}

const REPEATER_COLUMNS: [&str; 7] = [
    "rate_hz",
    "fidelity",
    "mean_wait_s",
    "qber",
    "key_fraction",
    "trials",
    "successes",
];

fn repeater_cells(r: &repeater::SimResult) -> Vec<Cell> {
    let qber = repeater::werner_qber(r.fidelity);
    vec![
        r.rate_hz.into(),
        r.fidelity.into(),
        r.mean_wait_s.into(),
        qber.into(),
        repeater::qkd_key_fraction(qber).into(),
        r.trials.into(),
        r.herald_statistics.successes.into(),
    ]
}

fn repeater_two_way(cfg: &RunConfig) -> Result<Table, CliError> {
    let rc = cfg.repeater.as_ref().ok_or_else(|| missing("repeater"))?;
    let r = repeater::simulate_two_way(rc, cfg.trials, cfg.seed).map_err(runtime)?;
    let mut cols = REPEATER_COLUMNS.to_vec();
    cols.extend(["mean_link_attempts", "wait_median_s", "wait_p90_s"]);
    let mut t = Table::new(Command::Repeater2Way, &cols);
    let mut cells = repeater_cells(&r);
    let wait = r.herald_statistics.wait_s.expect("two-way reports waits");
    cells.push(r.herald_statistics.mean_link_attempts.unwrap_or(0.0).into());
    cells.push(wait.median.into());
    cells.push(wait.p90.into());
    t.rows.push(Row::new(cells).with_details(r));
    Ok(t)
}

fn repeater_one_way(cfg: &RunConfig) -> Result<Table, CliError> {
    let rc = cfg.repeater.as_ref().ok_or_else(|| missing("repeater"))?;
    let code = cfg.code.as_ref().ok_or_else(|| missing("code"))?;
    let r = repeater::simulate_one_way(rc, code, cfg.trials, cfg.seed).map_err(runtime)?;
    let mut cols = REPEATER_COLUMNS.to_vec();
    cols.extend(["success_fraction", "hop_loss", "hop_success"]);
    let mut t = Table::new(Command::Repeater1Way, &cols);
    let mut cells = repeater_cells(&r);
    cells.push(r.herald_statistics.success_fraction.into());
    cells.push(repeater::hop_loss(rc).into());
    cells.push(repeater::one_way_hop_success(rc, code).map_err(runtime)?.into());
    t.rows.push(Row::new(cells).with_details(r));
    Ok(t)
}
