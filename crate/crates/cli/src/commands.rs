use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gpos_core::geodata::{
    latency_matrix, load_snapshot, merge_proximate, merge_to_target, write_snapshot, DropReport, SnapshotFormat,
    ValidatorSet,
};
use gpos_core::gpos::{
    coalition_curve, compute_gdi, gpos_power, gpos_power_exponential, sybil_curve, GdiVector, SybilParams,
    SybilPlacement, WeightVector, QUORUM,
};
use gpos_core::metrics::{
    country_gini, entropy, gec, gini, kde_grid, nakamoto_coefficient, proximity_gini, GridSpec,
};
use gpos_core::reconfig::{Candidate, Eligibility, Ledger, ReconfigParams};
use gpos_core::simnet::{simulate, sweep_csv, sweep_lambda, Protocol, SimConfig, SweepConfig};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::{file_digest, number_key, to_value, Emitter};
use crate::CliError;

/// One loaded and pre-processed input.
struct Chain {
    path: PathBuf,
    stem: String,
    digest: String,
    raw_count: usize,
    drop_report: DropReport,
    merge_radius_km: f64,
    set: ValidatorSet,
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn load_chain(cfg: &RunConfig, path: &Path) -> Result<Chain, CliError> {
    let format = cfg.format.unwrap_or_else(|| SnapshotFormat::from_path(path));
    let digest = file_digest(path)?;
    let loaded = load_snapshot(path, format)?;
    let raw_count = loaded.set.len();
    let mut radius = cfg.merge_radius_km;
    let mut set = if radius > 0.0 {
        merge_proximate(&loaded.set, radius)
    } else {
        loaded.set
    };
    if let Some(target) = cfg.target_count {
        let (merged, r) = merge_to_target(&set, target, radius.max(1.0));
        if r > 0.0 {
            radius = r;
        }
        set = merged;
    }
    Ok(Chain {
        path: path.to_path_buf(),
        stem: stem_of(path),
        digest,
        raw_count,
        drop_report: loaded.drop_report,
        merge_radius_km: radius,
        set,
    })
}

pub fn execute(command: &'static str, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if command == "reconfig" && cfg.reconfig.events.is_some() {
        let mut out = Emitter::new(cfg, command)?;
        replay_events(&mut out, cfg)?;
        return Ok(out.written);
    }
    cfg.validate()?;
    let mut out = Emitter::new(cfg, command)?;
    for path in &cfg.input {
        let chain = load_chain(cfg, path)?;
        match command {
            "preprocess" => preprocess(&mut out, &chain)?,
            "metrics" => metrics(&mut out, cfg, &chain)?,
            "gdi" => gdi(&mut out, &chain)?,
            "weights" => weights(&mut out, cfg, &chain)?,
            "attack" => attack(&mut out, cfg, &chain)?,
            "reconfig" => reconfig(&mut out, cfg, &chain)?,
            "simulate" => run_simulation(&mut out, cfg, &chain)?,
            "sweep" => sweep(&mut out, cfg, &chain)?,
            other => return Err(CliError::Config(format!("unknown command `{other}`"))),
        }
    }
    Ok(out.written)
}

fn preprocess(out: &mut Emitter, chain: &Chain) -> Result<(), CliError> {
    let mut csv = Vec::new();
    write_snapshot(&chain.set, &mut csv)?;
    let body = String::from_utf8(csv).expect("csv output is utf-8");
    out.commented(&format!("{}.preprocessed.csv", chain.stem), &chain.path, &chain.digest, &body)?;
    let summary = json!({
        "loaded_count": chain.raw_count,
        "dropped_count": chain.drop_report.dropped_count,
        "dropped_stake_fraction": chain.drop_report.dropped_stake_fraction,
        "merge_radius_km": chain.merge_radius_km,
        "validator_count": chain.set.len(),
    });
    out.json(&format!("{}.preprocess.json", chain.stem), &chain.path, &chain.digest, &summary)
}

fn linear_weights(set: &ValidatorSet, gdi: &GdiVector, lambda: f64) -> Result<WeightVector, CliError> {
    Ok(gpos_power(set, gdi, lambda)?.weights)
}

fn metric_row(cfg: &RunConfig, set: &ValidatorSet, w: &WeightVector) -> Result<Map<String, Value>, CliError> {
    let sel = &cfg.metrics;
    let mut row = Map::new();
    if sel.gec {
        row.insert("gec".into(), json!(gec(set, w)?.scalar));
    }
    if sel.gini {
        let countries = country_gini(set, w)?;
        row.insert("gini_country".into(), json!(countries.report.scalar));
        row.insert("gini_weight".into(), json!(gini(w.as_slice())?));
        row.insert("top_countries".into(), to_value(&countries.top(10)));
        row.insert("unknown_country_count".into(), json!(countries.unknown_count));
        let mut prox = Map::new();
        for &r in &sel.proximity_radii_km {
            prox.insert(number_key(r), json!(proximity_gini(set, w, r)?.scalar));
        }
        row.insert("gini_proximity".into(), Value::Object(prox));
    }
    if sel.nakamoto {
        row.insert("nakamoto_1_3".into(), json!(nakamoto_coefficient(w, 1.0 / 3.0)));
        row.insert("nakamoto_2_3".into(), json!(nakamoto_coefficient(w, 2.0 / 3.0)));
    }
    if sel.entropy {
        row.insert("entropy".into(), json!(entropy(w)));
    }
    Ok(row)
}

fn metrics(out: &mut Emitter, cfg: &RunConfig, chain: &Chain) -> Result<(), CliError> {
    let set = &chain.set;
    let gdi = compute_gdi(set, QUORUM)?;
    let mut linear = Vec::new();
    for &lambda in &cfg.lambdas {
        let w = linear_weights(set, &gdi, lambda)?;
        let mut row = metric_row(cfg, set, &w)?;
        row.insert("lambda".into(), json!(lambda));
        linear.push(Value::Object(row));
        if let Some(k) = cfg.metrics.kde {
            let grid = kde_grid(
                set,
                &w,
                k.bandwidth_deg,
                GridSpec {
                    lat_steps: k.lat_steps,
                    lon_steps: k.lon_steps,
                },
            )?;
            let mut body = Vec::new();
            grid.write_csv(&mut body).map_err(|e| CliError::Io(cfg.out.clone(), e))?;
            let body = String::from_utf8(body).expect("csv output is utf-8");
            out.commented(
                &format!("{}.kde.lambda-{}.csv", chain.stem, number_key(lambda)),
                &chain.path,
                &chain.digest,
                &body,
            )?;
        }
    }
    let mut exponential = Vec::new();
    for &alpha in &cfg.alphas {
        let w = gpos_power_exponential(set, &gdi, alpha)?;
        let mut row = metric_row(cfg, set, &w)?;
        row.insert("alpha".into(), json!(alpha));
        exponential.push(Value::Object(row));
    }
    let mut report = Map::new();
    report.insert("validator_count".into(), json!(set.len()));
    report.insert("linear".into(), Value::Array(linear.clone()));
    report.insert("exponential".into(), Value::Array(exponential));
    // The first linear row is also exposed at the top level.
    if let Some(Value::Object(first)) = linear.first() {
        for (k, v) in first {
            report.insert(k.clone(), v.clone());
        }
    }
    out.json(&format!("{}.metrics.json", chain.stem), &chain.path, &chain.digest, &report)
}

fn gdi(out: &mut Emitter, chain: &Chain) -> Result<(), CliError> {
    let g = compute_gdi(&chain.set, QUORUM)?;
    let mut body = String::from("id,gdi_km,gdi_normalized\n");
    for (v, (raw, norm)) in chain.set.validators().iter().zip(g.raw.iter().zip(&g.normalized)) {
        body.push_str(&format!("{},{raw},{norm}\n", v.id));
    }
    out.commented(&format!("{}.gdi.csv", chain.stem), &chain.path, &chain.digest, &body)
}

fn weights(out: &mut Emitter, cfg: &RunConfig, chain: &Chain) -> Result<(), CliError> {
    let set = &chain.set;
    let g = compute_gdi(set, QUORUM)?;
    let mut columns: Vec<(String, WeightVector)> = Vec::new();
    let mut warnings = Vec::new();
    for &lambda in &cfg.lambdas {
        let w = gpos_power(set, &g, lambda)?;
        warnings.extend(w.warnings);
        columns.push((format!("lambda={}", number_key(lambda)), w.weights));
    }
    for &alpha in &cfg.alphas {
        columns.push((format!("alpha={}", number_key(alpha)), gpos_power_exponential(set, &g, alpha)?));
    }
    let mut body = String::from("id,stake");
    for (name, _) in &columns {
        body.push(',');
        body.push_str(name);
    }
    body.push('\n');
    for (i, v) in set.validators().iter().enumerate() {
        body.push_str(&format!("{},{}", v.id, set.normalized_stakes()[i]));
        for (_, w) in &columns {
            body.push_str(&format!(",{}", w.as_slice()[i]));
        }
        body.push('\n');
    }
    for w in &warnings {
        eprintln!("gpos: warning: {w}");
    }
    out.commented(&format!("{}.weights.csv", chain.stem), &chain.path, &chain.digest, &body)
}

fn attack(out: &mut Emitter, cfg: &RunConfig, chain: &Chain) -> Result<(), CliError> {
    let set = &chain.set;
    let mut coalitions = Vec::new();
    let mut csv = String::from("lambda,threshold,stake_fraction\n");
    for &t in &cfg.thresholds {
        let curve = coalition_curve(set, &cfg.lambdas, t, QUORUM)?;
        for (l, s) in curve.x.iter().zip(&curve.y) {
            csv.push_str(&format!("{l},{t},{s}\n"));
        }
        coalitions.push(curve);
    }
    let mut sybil = Vec::new();
    for &lambda in &cfg.lambdas {
        let params = SybilParams {
            lambda,
            total_stake_fraction: cfg.attack.sybil_stake_fraction,
            placement: SybilPlacement::Ideal,
            min_stake_threshold: cfg.attack.min_stake_threshold,
            quorum: QUORUM,
        };
        sybil.push(sybil_curve(set, &params, &cfg.attack.sybil_counts)?);
    }
    out.commented(&format!("{}.coalition.csv", chain.stem), &chain.path, &chain.digest, &csv)?;
    let report = json!({ "min_coalition_stake": coalitions, "sybil": sybil });
    out.json(&format!("{}.attack.json", chain.stem), &chain.path, &chain.digest, &report)
}

fn reconfig_params(cfg: &RunConfig) -> ReconfigParams {
    let eligibility = match cfg.reconfig.top_k {
        Some(k) => Eligibility::TopK(k),
        None => Eligibility::MinStake(cfg.reconfig.min_stake),
    };
    ReconfigParams::new(cfg.lambdas[0], eligibility)
}

fn ledger_summary(ledger: &Ledger) -> Value {
    let state = ledger.state();
    let active: Vec<Value> = state
        .active_set
        .validators()
        .iter()
        .zip(state.powers.as_slice())
        .map(|(v, p)| json!({ "id": v.id, "power": p }))
        .collect();
    json!({
        "epoch": state.epoch,
        "header_commit": state.header_commit,
        "commit_verified": state.verify_commit(),
        "active": active,
        "candidate_count": state.candidates.len(),
        "initial_total": ledger.initial_total(),
        "current_total": ledger.current_total(),
        "escrowed": ledger.escrowed(),
        "burned": ledger.burned(),
        "conserved": ledger.is_conserved(),
        "disputes": ledger.disputes(),
    })
}

fn reconfig(out: &mut Emitter, cfg: &RunConfig, chain: &Chain) -> Result<(), CliError> {
    let scale = cfg.reconfig.stake_scale;
    let candidates: Vec<Candidate> = chain
        .set
        .validators()
        .iter()
        .map(|v| Candidate {
            id: v.id.clone(),
            coords: v.coords,
            stake: (v.stake * scale).round() as u64,
            country: v.country.clone(),
        })
        .collect();
    let params = reconfig_params(cfg);
    let (mut ledger, mut warnings) = Ledger::genesis(candidates, params)?;
    for _ in 0..cfg.reconfig.epochs {
        warnings.extend(ledger.reconfigure(params)?);
    }
    for w in &warnings {
        eprintln!("gpos: warning: {w}");
    }
    out.commented(&format!("{}.events.jsonl", chain.stem), &chain.path, &chain.digest, &ledger.event_log())?;
    out.json(
        &format!("{}.epoch.json", chain.stem),
        &chain.path,
        &chain.digest,
        &ledger_summary(&ledger),
    )
}

fn replay_events(out: &mut Emitter, cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.reconfig.events.as_ref().expect("checked by caller");
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
    let digest = file_digest(path)?;
    let ledger = Ledger::replay(&text)?;
    out.json(
        &format!("{}.replay.json", stem_of(path)),
        path,
        &digest,
        &ledger_summary(&ledger),
    )
}

/// Gossip fanout cannot exceed the peer count of a small merged set.
fn fit_protocol(protocol: Protocol, n: usize) -> Protocol {
    match protocol {
        Protocol::Gossip { fanout, vote_steps } if n >= 2 && fanout >= n => {
            eprintln!("gpos: warning: gossip fanout {fanout} reduced to {} for {n} validators", n - 1);
            Protocol::Gossip {
                fanout: n - 1,
                vote_steps,
            }
        }
        p => p,
    }
}

fn run_simulation(out: &mut Emitter, cfg: &RunConfig, chain: &Chain) -> Result<(), CliError> {
    let set = &chain.set;
    let sim = &cfg.simulation;
    let latency = latency_matrix(set, &sim.latency)?;
    let g = compute_gdi(set, QUORUM)?;
    let mut runs = BTreeMap::new();
    for &lambda in &cfg.lambdas {
        let config = SimConfig {
            latency: latency.clone(),
            weights: linear_weights(set, &g, lambda)?,
            protocol: fit_protocol(sim.protocol, set.len()),
            batch_size: sim.batch_size,
            processing_ms: sim.processing_ms,
            rounds: sim.rounds,
            seed: cfg.seed,
            record_events: false,
        };
        let result = simulate(&config)?;
        runs.insert(
            number_key(lambda),
            json!({
                "protocol": config.protocol,
                "per_round_latency_ms": result.per_round_latency_ms,
                "mean_latency_ms": result.mean_latency_ms,
                "tps": result.tps,
                "tps_pipelined": result.tps_pipelined,
                "tps_sequential": result.tps_sequential,
                "leaders": result.leaders,
                "min_quorum_weight": result.quorum_weights.iter().cloned().fold(f64::INFINITY, f64::min),
            }),
        );
    }
    let report = json!({
        "validator_count": set.len(),
        "ids": set.validators().iter().map(|v| v.id.as_str()).collect::<Vec<_>>(),
        "by_lambda": runs,
    });
    out.json(&format!("{}.sim.json", chain.stem), &chain.path, &chain.digest, &report)
}

fn sweep(out: &mut Emitter, cfg: &RunConfig, chain: &Chain) -> Result<(), CliError> {
    let sim = &cfg.simulation;
    let sweep = SweepConfig {
        protocol: fit_protocol(sim.protocol, chain.set.len()),
        latency: sim.latency.clone(),
        batch_size: sim.batch_size,
        processing_ms: sim.processing_ms,
        rounds: sim.rounds,
        seed: cfg.seed,
    };
    let rows = sweep_lambda(&chain.set, &cfg.lambdas, &sweep)?;
    out.commented(&format!("{}.sweep.csv", chain.stem), &chain.path, &chain.digest, &sweep_csv(&rows))
}
