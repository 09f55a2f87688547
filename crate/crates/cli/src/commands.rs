//! Subcommand execution: expand the config, run the core operation, render a
//! deterministic CSV, and route results through the cache.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use serde_json::json;

use skw_core::codec::{leakage_exact, leakage_plugin, run_trials, LeakageMethod, LeakageReport};
use skw_core::error::Error as CoreError;
use skw_core::region::{
    grid_oracle, optimize_key_rate, sweep, theorem1_key_rate, separation_key_rate,
    AuxiliaryPair, Baseline, JointSource, RegionPoint, VaryAxis,
};

use crate::cache;
use crate::config::{ExperimentConfig, LeakageChoice, Violation};

/// Process exit statuses: 2 for configuration problems, 3 for infeasible or
/// inapplicable operating points, 1 for everything else.
pub enum CliError {
    Config(Vec<Violation>),
    Infeasible(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        // inapplicable rate bookkeeping surfaces as exit 3
        if let Some(core) = e.downcast_ref::<CoreError>() {
            if matches!(core, CoreError::RatesInapplicable(_)) {
                return CliError::Infeasible(core.to_string());
            }
        }
        CliError::Other(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    pub fn report(&self) {
        match self {
            CliError::Config(violations) => {
                eprintln!("invalid configuration:");
                for v in violations {
                    eprintln!("  {}", v);
                }
            }
            CliError::Infeasible(msg) => eprintln!("infeasible: {}", msg),
            CliError::Other(e) => eprintln!("error: {:#}", e),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub vary: Option<VaryAxis>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
}

pub struct Invocation {
    pub config_path: PathBuf,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub no_cache: bool,
    pub overrides: Overrides,
}

fn load_config(inv: &Invocation) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(&inv.config_path).map_err(|e| {
        CliError::Config(vec![Violation {
            path: "$".into(),
            message: format!("cannot read {}: {}", inv.config_path.display(), e),
        }])
    })?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(CliError::Config)?;
    let o = &inv.overrides;
    if let Some(seed) = o.seed {
        cfg.optimizer.seed = seed;
        cfg.codec.seed = seed;
    }
    if o.r1.is_some() || o.r2.is_some() {
        let mut rates = cfg.rates.unwrap_or(crate::config::RatesSpec {
            r1: crate::config::Prob(0.0),
            r2: crate::config::Prob(0.0),
        });
        if let Some(r1) = o.r1 {
            rates.r1 = crate::config::Prob(r1);
        }
        if let Some(r2) = o.r2 {
            rates.r2 = crate::config::Prob(r2);
        }
        cfg.rates = Some(rates);
    }
    if let Some(n) = o.n {
        cfg.codec.n = n;
    }
    if let Some(trials) = o.trials {
        cfg.codec.trials = trials;
    }
    if o.vary.is_some() || o.from.is_some() || o.to.is_some() || o.steps.is_some() {
        let mut sw = cfg.sweep.unwrap_or(crate::config::SweepSpec {
            vary: VaryAxis::R2,
            from: 0.0,
            to: 1.0,
            steps: 11,
        });
        if let Some(v) = o.vary {
            sw.vary = v;
        }
        if let Some(f) = o.from {
            sw.from = f;
        }
        if let Some(t) = o.to {
            sw.to = t;
        }
        if let Some(s) = o.steps {
            sw.steps = s;
        }
        cfg.sweep = Some(sw);
    }
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(CliError::Config(violations));
    }
    Ok(cfg)
}

fn rates_of(cfg: &ExperimentConfig) -> Result<skw_core::region::RateConstraints, CliError> {
    let rates = cfg.rates.ok_or_else(|| {
        CliError::Config(vec![Violation {
            path: "rates".into(),
            message: "this command needs rates (config or --r1/--r2)".into(),
        }])
    })?;
    skw_core::region::RateConstraints::new(rates.r1.0, rates.r2.0)
        .map_err(|e| CliError::Config(vec![Violation { path: "rates".into(), message: e.to_string() }]))
}

fn witness_digest(witness: &AuxiliaryPair) -> String {
    let canonical = serde_json::to_string(&json!({
        "u": witness.u_given_x().rows(),
        "t": witness.t_given_u().rows(),
    }))
    .expect("witness serializes");
    cache::sha256_hex(canonical.as_bytes())[..16].to_string()
}

fn point_csv(point: &RegionPoint, r1: f64, r2: f64) -> String {
    let mut csv = String::from("key_rate,feasible,i_uy_t,i_uz_t,i_ux_y,i_tx_y,r1,r2,witness_digest\n");
    csv.push_str(&format!(
        "{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
        point.key_rate,
        point.feasible,
        point.terms.i_uy_t,
        point.terms.i_uz_t,
        point.terms.i_ux_y,
        point.terms.i_tx_y,
        r1,
        r2,
        witness_digest(&point.witness),
    ));
    csv
}

fn point_outputs(point: &RegionPoint) -> serde_json::Value {
    json!({
        "key_rate": point.key_rate,
        "feasible": point.feasible,
        "terms": {
            "i_uy_t": point.terms.i_uy_t,
            "i_uz_t": point.terms.i_uz_t,
            "i_ux_y": point.terms.i_ux_y,
            "i_tx_y": point.terms.i_tx_y,
        },
        "witness_digest": witness_digest(&point.witness),
    })
}

struct Produced {
    csv: String,
    outputs: serde_json::Value,
}

fn run_point(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let src = cfg.source().map_err(CliError::from)?;
    let rc = rates_of(cfg)?;
    let baseline = cfg.baseline();
    let point = match cfg.aux_pair().map_err(CliError::from)? {
        Some(aux) => {
            let point = match baseline {
                Baseline::Joint => theorem1_key_rate(&src, &aux, rc),
                Baseline::Separation => separation_key_rate(&src, &aux, rc),
            }
            .map_err(|e| CliError::Other(e.into()))?;
            if !point.feasible {
                return Err(CliError::Infeasible(format!(
                    "fixed auxiliary violates the rate constraints: needs r1 + r2 >= {:.6} and r1 >= {:.6}",
                    point.terms.i_ux_y, point.terms.i_tx_y
                )));
            }
            point
        }
        None => {
            let (card_t, card_u) = cfg.cardinalities(src.card_x());
            optimize_key_rate(&src, rc, card_t, card_u, &cfg.optimizer_config(), baseline, &[])
                .map_err(|e| CliError::Other(e.into()))?
        }
    };
    Ok(Produced { csv: point_csv(&point, rc.r1, rc.r2), outputs: point_outputs(&point) })
}

fn run_oracle(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let src = cfg.source().map_err(CliError::from)?;
    let rc = rates_of(cfg)?;
    // exhaustive enumeration explodes with cardinality; default small
    let (card_t, card_u) = match cfg.cardinalities {
        Some(c) => (c.t, c.u),
        None => (2, 2),
    };
    let point = grid_oracle(
        &src,
        rc,
        card_t,
        card_u,
        cfg.optimizer.grid_resolution,
        cfg.baseline(),
    )
    .map_err(|e| CliError::Other(e.into()))?;
    Ok(Produced { csv: point_csv(&point, rc.r1, rc.r2), outputs: point_outputs(&point) })
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let src = cfg.source().map_err(CliError::from)?;
    let rc = rates_of(cfg)?;
    let spec = cfg.sweep.ok_or_else(|| {
        CliError::Config(vec![Violation {
            path: "sweep".into(),
            message: "sweep needs a range (config or --vary/--from/--to/--steps)".into(),
        }])
    })?;
    let fixed_value = match spec.vary {
        VaryAxis::R1 => rc.r2,
        VaryAxis::R2 => rc.r1,
    };
    let (card_t, card_u) = cfg.cardinalities(src.card_x());
    let points = sweep(
        &src,
        spec.vary,
        fixed_value,
        spec.from,
        spec.to,
        spec.steps,
        card_t,
        card_u,
        &cfg.optimizer_config(),
    )
    .map_err(|e| CliError::Other(e.into()))?;

    let mut csv = String::from("varied_rate,joint_key_rate,separation_key_rate,witness_digest\n");
    let mut rows = Vec::new();
    for p in &points {
        let digest = witness_digest(&p.joint.witness);
        csv.push_str(&format!(
            "{:.6},{:.6},{:.6},{}\n",
            p.varied_rate, p.joint.key_rate, p.separation.key_rate, digest
        ));
        rows.push(json!({
            "varied_rate": p.varied_rate,
            "joint_key_rate": p.joint.key_rate,
            "separation_key_rate": p.separation.key_rate,
            "witness_digest": digest,
        }));
    }
    Ok(Produced { csv, outputs: json!({ "points": rows }) })
}

fn pick_aux(cfg: &ExperimentConfig, src: &JointSource) -> Result<AuxiliaryPair, CliError> {
    if let Some(aux) = cfg.aux_pair().map_err(CliError::from)? {
        return Ok(aux);
    }
    let rc = rates_of(cfg)?;
    let (card_t, card_u) = cfg.cardinalities(src.card_x());
    let point = optimize_key_rate(
        src,
        rc,
        card_t,
        card_u,
        &cfg.optimizer_config(),
        Baseline::Joint,
        &[],
    )
    .map_err(|e| CliError::Other(e.into()))?;
    Ok(point.witness)
}

fn leakage_for(
    cfg: &ExperimentConfig,
    src: &JointSource,
    aux: &AuxiliaryPair,
) -> Result<LeakageReport, CliError> {
    let rc = rates_of(cfg)?;
    let params = cfg.codec_params();
    let run_exact = || leakage_exact(src, aux, rc, &params);
    let run_plugin = || leakage_plugin(src, aux, rc, &params);
    let report = match cfg.codec.leakage {
        LeakageChoice::Exact => run_exact(),
        LeakageChoice::Plugin => run_plugin(),
        LeakageChoice::Auto => match run_exact() {
            Ok(r) => Ok(r),
            Err(CoreError::EnumerationTooLarge { .. }) => run_plugin(),
            Err(e) => Err(e),
        },
    };
    report.map_err(|e| CliError::from(anyhow::Error::from(e)))
}

fn method_name(m: LeakageMethod) -> &'static str {
    match m {
        LeakageMethod::Exact => "exact",
        LeakageMethod::Plugin => "plugin",
    }
}

fn run_simulate(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let src = cfg.source().map_err(CliError::from)?;
    let rc = rates_of(cfg)?;
    let aux = pick_aux(cfg, &src)?;
    let params = cfg.codec_params();
    let report = run_trials(&src, &aux, rc, &params)
        .map_err(|e| CliError::from(anyhow::Error::from(e)))?;
    let leakage = leakage_for(cfg, &src, &aux)?;

    let mut csv = String::from("n,trials,p_e_hat,ci_lo,ci_hi,leakage,leakage_method,seed\n");
    csv.push_str(&format!(
        "{},{},{:.6},{:.6},{:.6},{:.6},{},{}\n",
        params.n,
        report.trials,
        report.p_e_hat,
        report.ci_lo,
        report.ci_hi,
        leakage.leakage_per_symbol,
        method_name(leakage.method),
        params.seed,
    ));
    Ok(Produced {
        csv,
        outputs: json!({
            "report": report,
            "leakage": leakage,
            "aux_digest": witness_digest(&aux),
        }),
    })
}

fn run_leakage(cfg: &ExperimentConfig) -> Result<Produced, CliError> {
    let src = cfg.source().map_err(CliError::from)?;
    let aux = pick_aux(cfg, &src)?;
    let report = leakage_for(cfg, &src, &aux)?;
    let mut csv = String::from("n,method,leakage_per_symbol,samples,seed\n");
    csv.push_str(&format!(
        "{},{},{:.6},{},{}\n",
        report.n,
        method_name(report.method),
        report.leakage_per_symbol,
        report.samples,
        report.codebook_seed,
    ));
    Ok(Produced {
        csv,
        outputs: json!({ "leakage": report, "aux_digest": witness_digest(&aux) }),
    })
}

fn command_seed(command: &str, cfg: &ExperimentConfig) -> u64 {
    match command {
        "simulate" | "leakage" => cfg.codec.seed,
        _ => cfg.optimizer.seed,
    }
}

/// Run one cacheable subcommand end to end.
pub fn execute(command: &str, inv: &Invocation) -> Result<(), CliError> {
    let cfg = load_config(inv)?;
    let canonical = cfg.canonical_json();
    let digest = cache::config_digest(&canonical);
    let seed = command_seed(command, &cfg);
    let key = cache::cache_key(&digest, command, "", seed, cache::TOOL_VERSION);
    let cache_dir = inv.cache_dir.clone().unwrap_or_else(cache::default_cache_dir);

    if !inv.no_cache {
        if let Some(hit) = cache::lookup(&cache_dir, &key) {
            eprintln!("[skw] cache hit {}", &key[..12]);
            emit(inv, &hit.csv)?;
            return Ok(());
        }
    }

    let produced = match command {
        "point" => run_point(&cfg)?,
        "oracle" => run_oracle(&cfg)?,
        "sweep" => run_sweep(&cfg)?,
        "simulate" => run_simulate(&cfg)?,
        "leakage" => run_leakage(&cfg)?,
        other => {
            return Err(CliError::Other(anyhow::anyhow!("unknown command {}", other)));
        }
    };

    if !inv.no_cache {
        let value = cache::CachedResult {
            record: cache::record(&digest, command, "", seed, produced.outputs.clone()),
            csv: produced.csv.clone(),
        };
        cache::store(&cache_dir, &key, &value)
            .with_context(|| format!("cannot write cache under {}", cache_dir.display()))
            .map_err(CliError::Other)?;
    }
    emit(inv, &produced.csv)
}

/// Parse and semantically validate the config, reporting every violation.
pub fn validate_config(inv: &Invocation) -> Result<(), CliError> {
    let cfg = load_config(inv)?;
    let src = cfg.source().map_err(CliError::from)?;
    println!(
        "ok: source alphabet {}x{}x{}",
        src.card_x(),
        src.card_y(),
        src.card_z()
    );
    Ok(())
}

fn emit(inv: &Invocation, csv: &str) -> Result<(), CliError> {
    match &inv.out {
        Some(path) => fs::write(path, csv)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(CliError::Other),
        None => {
            print!("{}", csv);
            Ok(())
        }
    }
}
