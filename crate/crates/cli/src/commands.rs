//! The four subcommands: simulate, estimate, benchmark, graph.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mintt::{
    build_graph, builtin_model, causal_strength, estimate_effect, rule_of_thumb_bandwidths,
    run_benchmark, simulate, BenchmarkConfig, Query, TimeSeries,
};

use crate::config::RunConfig;
use crate::io::{atomic_write, load_csv, preprocess_logdiff, series_to_csv};
use crate::output::{benchmark_table, graph_to_dot, to_json_line, EffectCurveDoc, GraphDoc};

fn write_resolved_config(cfg: &RunConfig) -> Result<()> {
    atomic_write(&cfg.out.join("resolved_config.json"), &cfg.to_json())?;
    eprintln!(
        "{}: resolved configuration written to {}",
        cfg.command,
        cfg.out.join("resolved_config.json").display()
    );
    Ok(())
}

/// Loads the input series: a CSV file or a freshly simulated builtin
/// model, optionally log-differenced.
fn input_series(cfg: &RunConfig) -> Result<TimeSeries> {
    let ts = match (&cfg.input, cfg.model) {
        (Some(path), None) => load_csv(Path::new(path))?,
        (None, Some(id)) => {
            let model = builtin_model(id)?;
            simulate(&model, cfg.n, cfg.seed, cfg.burn_in)?
        }
        (Some(_), Some(_)) => bail!("pass either --input or --model, not both"),
        (None, None) => bail!("one of --input or --model is required"),
    };
    if cfg.logdiff {
        preprocess_logdiff(&ts)
    } else {
        Ok(ts)
    }
}

fn component_index(ts: &TimeSeries, name: &str) -> Result<usize> {
    ts.component_index(name).with_context(|| {
        format!(
            "unknown component `{name}` (available: {})",
            ts.names().join(", ")
        )
    })
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let id = cfg.model.context("--model is required for simulate")?;
    let model = builtin_model(id)?;
    let ts = simulate(&model, cfg.n, cfg.seed, cfg.burn_in)?;
    atomic_write(&cfg.out.join("simulated.csv"), &series_to_csv(&ts))?;
    write_resolved_config(cfg)?;
    println!("{}", cfg.out.join("simulated.csv").display());
    Ok(())
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    let ts = input_series(cfg)?;
    let c1 = component_index(&ts, cfg.c1.as_deref().context("--c1 is required")?)?;
    let c2 = component_index(&ts, cfg.c2.as_deref().context("--c2 is required")?)?;
    let s = cfg.s.context("--s is required")?;
    let xs = cfg.intervention_rule()?.values(&ts.column(c2)?)?;
    let query = Query {
        c1,
        c2,
        s,
        intervention_values: xs,
        transform: cfg.transform_value()?,
        instantaneous: cfg.instantaneous,
    };
    let bw = rule_of_thumb_bandwidths(&ts, &query, cfg.p, cfg.h_mult)?;
    let curve = estimate_effect(&ts, &query, cfg.p, &bw, &cfg.boost_config()?)?;
    let hash = cfg.hash();
    atomic_write(
        &cfg.out.join("effect_curve.json"),
        &to_json_line(&EffectCurveDoc::new(&curve, &hash)),
    )?;
    write_resolved_config(cfg)?;
    println!("{}", cfg.out.join("effect_curve.json").display());
    Ok(())
}

pub fn cmd_benchmark(cfg: &RunConfig) -> Result<()> {
    let id = cfg.model.context("--model is required for benchmark")?;
    let bench_cfg = BenchmarkConfig {
        n: cfg.n,
        p: Some(cfg.p),
        h_multiplier: cfg.h_mult,
        boost: cfg.boost_config()?,
        burn_in: cfg.burn_in,
        reference_reps: cfg.reference_reps,
        oracle_reps: cfg.oracle_reps,
        noise_mode: cfg.noise_mode_value()?,
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(
        id,
        cfg.method_value()?,
        cfg.transform_value()?,
        cfg.intervention_rule()?,
        &bench_cfg,
        cfg.seed,
    )?;
    atomic_write(&cfg.out.join("report.json"), &to_json_line(&report))?;
    atomic_write(&cfg.out.join("table.txt"), &benchmark_table(&report))?;
    write_resolved_config(cfg)?;
    print!("{}", benchmark_table(&report));
    println!("{}", cfg.out.join("report.json").display());
    Ok(())
}

pub fn cmd_graph(cfg: &RunConfig) -> Result<()> {
    let ts = input_series(cfg)?;
    let transform = cfg.transform_value()?;
    let boost_cfg = cfg.boost_config()?;
    let mut queries = Vec::new();
    for c1 in 0..ts.l() {
        for c2 in 0..ts.l() {
            let xs = cfg.intervention_rule()?.values(&ts.column(c2)?)?;
            for s in 1..=cfg.s_max {
                queries.push(Query {
                    c1,
                    c2,
                    s,
                    intervention_values: xs.clone(),
                    transform: transform.clone(),
                    instantaneous: cfg.instantaneous,
                });
            }
        }
    }
    let curves = queries
        .iter()
        .map(|query| {
            let bw = rule_of_thumb_bandwidths(&ts, query, cfg.p, cfg.h_mult)?;
            Ok(estimate_effect(&ts, query, cfg.p, &bw, &boost_cfg)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let cs = causal_strength(&curves, &ts, cfg.s_max)?;
    let graph = build_graph(&cs, ts.names(), cfg.instantaneous)?;
    atomic_write(
        &cfg.out.join("graph.json"),
        &to_json_line(&GraphDoc::new(&graph)),
    )?;
    atomic_write(&cfg.out.join("graph.dot"), &graph_to_dot(&graph))?;
    write_resolved_config(cfg)?;
    println!("{}", cfg.out.join("graph.json").display());
    println!("{}", cfg.out.join("graph.dot").display());
    Ok(())
}
