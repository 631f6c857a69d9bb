use std::path::Path;
use std::time::Instant;

use attraos_core::chaos_sim::*;
use attraos_core::forecaster::{self, backtest, evaluate, rollout, FittedForecaster};
use attraos_core::lyapunov::mle_table;
use attraos_core::psr::*;
use attraos_core::scan::{blelloch_scan_counted, sequential_scan, ScanInput};
use attraos_core::TimeSeries;
use serde_json::json;

use crate::config::{resolve, FitConfig};
use crate::error::CliError;
use crate::io::{read_table, write_json, write_series, write_table, Table};
use crate::{BenchScanArgs, EmbedArgs, EvalArgs, FitArgs, LyapunovArgs, PredictArgs, SimulateArgs, System};

fn time_axis(table: &Table, start: usize, len: usize) -> Vec<f64> {
    match &table.t {
        Some(t) => t[start..start + len].to_vec(),
        None => (start..start + len).map(|i| i as f64).collect(),
    }
}

fn load_model(path: &Path) -> Result<FittedForecaster, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    FittedForecaster::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let traj = match a.system {
        System::Lorenz63 => {
            let p = Lorenz63Params {
                sigma: a.sigma,
                rho: a.rho,
                beta: a.beta,
            };
            let x0 = match a.x0.as_deref() {
                None => [1.0, 1.0, 1.0],
                Some(&[x, y, z]) => [x, y, z],
                Some(v) => return Err(CliError::Usage(format!("--x0 needs 3 values for lorenz63, got {}", v.len()))),
            };
            simulate_lorenz63(&p, x0, a.dt, a.steps)?
        }
        System::Lorenz96 => {
            let p = Lorenz96Params {
                forcing_f: a.forcing,
                dim: a.dim,
            };
            if p.dim < 4 {
                return Err(CliError::Usage(format!("Lorenz96 dimension must be at least 4, got {}", p.dim)));
            }
            let x0 = a.x0.clone().unwrap_or_else(|| {
                let mut x = vec![p.forcing_f; p.dim];
                x[0] += 0.01;
                x
            });
            simulate_lorenz96(&p, &x0, a.dt, a.steps)?
        }
    };
    if a.transient > a.steps {
        return Err(CliError::Usage(format!("--transient {} exceeds --steps {}", a.transient, a.steps)));
    }
    let traj = traj.discard_transient(a.transient);
    let t: Vec<f64> = (a.transient..=a.steps).map(|k| k as f64 * a.dt).collect();
    let series = match a.obs_dim {
        None => traj.to_series(),
        Some(k) => {
            let seed = a
                .seed
                .ok_or_else(|| CliError::Usage("--obs-dim draws a random observation map and needs --seed".into()))?;
            observe(&traj, &ObservationMap::random(k, traj.state_dim(), seed)?)?
        }
    };
    write_series(a.out.as_deref(), &t, &series)
}

pub fn embed(a: EmbedArgs) -> Result<(), CliError> {
    let table = read_table(&a.input)?;
    if a.channel >= table.series.n_channels() {
        return Err(CliError::Usage(format!(
            "--channel {} but the input has {} channel(s)",
            a.channel,
            table.series.n_channels()
        )));
    }
    let x = table.series.channel(a.channel);
    let report = match (a.m, a.tau) {
        (Some(m), Some(tau)) => {
            let params = EmbeddingParams::new(m, tau)?;
            let max_tau = a.max_tau.min(x.len() / 4).max(1);
            EmbeddingReport {
                m: params.m,
                tau: params.tau,
                mi_curve: mutual_information_curve(x, max_tau, default_bins(x.len()))?,
                fnn_fraction_curve: fnn_curve(x, tau, a.max_m, &FnnOptions::default())?,
            }
        }
        _ => {
            let opts = SelectionOptions {
                max_tau: a.max_tau,
                max_m: a.max_m,
                fnn_threshold: a.fnn_threshold,
                ..Default::default()
            };
            select_embedding_report(x, &opts)?
        }
    };
    let traj = delay_embed(x, report.params())?;
    let t = time_axis(&table, report.params().span() - 1, traj.len());
    write_table(Some(&a.out), &t, &traj.points, "x")?;
    let sidecar = a.sidecar.unwrap_or_else(|| a.out.with_extension("json"));
    write_json(Some(&sidecar), &report)?;
    write_json(None, &report)
}

pub fn lyapunov(a: LyapunovArgs) -> Result<(), CliError> {
    let table = read_table(&a.input)?;
    let series = &table.series;
    let params: Vec<EmbeddingParams> = match (a.m, a.tau) {
        (Some(m), Some(tau)) => vec![EmbeddingParams::new(m, tau)?; series.n_channels()],
        _ => select_embedding_channels(series, &SelectionOptions::default())?
            .iter()
            .map(EmbeddingReport::params)
            .collect(),
    };
    let fit_range = a.fit_start.zip(a.fit_end);
    let result = mle_table(series, &params, a.horizon, a.theiler, fit_range)?;
    let mut out = json!({
        "mle_per_channel": result.mle_per_channel(),
        "mean_mle": result.mean_mle,
        "divergence_curve": result.per_channel.iter().map(|e| &e.divergence_curve).collect::<Vec<_>>(),
        "fit_range": result.per_channel[0].fit_range,
        "embedding": params,
    });
    if let Some(dt) = a.dt.or_else(|| table.dt()) {
        if !(dt > 0.0) {
            return Err(CliError::Usage(format!("--dt must be positive, got {dt}")));
        }
        out["dt"] = json!(dt);
        out["mle_per_time_unit"] = json!(result.per_channel.iter().map(|e| e.per_time_unit(dt)).collect::<Vec<_>>());
        out["mean_mle_per_time_unit"] = json!(result.mean_mle / dt);
    }
    write_json(a.out.as_deref(), &out)
}

pub fn fit(a: FitArgs) -> Result<(), CliError> {
    let file = a.config.as_deref().map(FitConfig::load).transpose()?;
    let cfg = resolve(file, &a.overrides)?;
    let table = read_table(&a.input)?;
    let rows = a.train_rows.unwrap_or(table.series.len()).min(table.series.len());
    let train = table.series.slice(0, rows);
    let model = forecaster::fit(&cfg, &train)?;
    let text = model.to_json()?;
    std::fs::write(&a.out, text).map_err(|e| CliError::Data(format!("{}: {e}", a.out.display())))?;
    let summary = json!({
        "model": a.out,
        "train_rows": rows,
        "channels": model.n_channels(),
        "window": model.window(),
        "horizon": model.horizon(),
        "embedding": model.channels.iter().map(|c| c.layout.embedding).collect::<Vec<_>>(),
    });
    write_json(None, &summary)
}

pub fn predict(a: PredictArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let table = read_table(&a.input)?;
    let steps = a.steps.unwrap_or(model.horizon());
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let forecast = rollout(&model, &table.series, steps, None, 0.0)?.predictions;
    let n = table.series.len();
    let t: Vec<f64> = match (&table.t, table.dt()) {
        (Some(t), Some(dt)) => (1..=steps).map(|k| t[n - 1] + k as f64 * dt).collect(),
        _ => (n..n + steps).map(|i| i as f64).collect(),
    };
    write_series(a.out.as_deref(), &t, &forecast)
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    match (a.pred, a.truth, a.model, a.input) {
        (Some(pred), Some(truth), _, _) => {
            let pred = read_table(&pred)?.series;
            let truth = read_table(&truth)?.series;
            write_json(None, &evaluate(&pred, &truth)?)
        }
        (_, _, Some(model), Some(input)) => {
            let model = load_model(&model)?;
            let series: TimeSeries = read_table(&input)?.series;
            let (metrics, windows) = backtest(&model, &series, a.stride)?;
            let mut out = serde_json::to_value(&metrics).map_err(|e| CliError::Data(e.to_string()))?;
            out["windows"] = json!(windows);
            write_json(None, &out)
        }
        _ => Err(CliError::Usage("eval needs --pred and --truth, or --model and --input".into())),
    }
}

pub fn bench_scan(a: BenchScanArgs) -> Result<(), CliError> {
    if a.n == 0 || a.d == 0 {
        return Err(CliError::Usage("--n and --d must be at least 1".into()));
    }
    if a.lengths.is_empty() || a.lengths.contains(&0) {
        return Err(CliError::Usage("--lengths must list positive sequence lengths".into()));
    }
    let repeats = a.repeats.max(1);
    let mut results = Vec::new();
    for &len in &a.lengths {
        let input = ScanInput::random_diagonal(len, a.n, a.d, a.seed);
        let mut best = (f64::INFINITY, f64::INFINITY);
        let (mut seq, mut tree) = (Vec::new(), None);
        for _ in 0..repeats {
            let start = Instant::now();
            seq = sequential_scan(&input);
            best.0 = best.0.min(start.elapsed().as_secs_f64());
            let start = Instant::now();
            tree = Some(blelloch_scan_counted(&input));
            best.1 = best.1.min(start.elapsed().as_secs_f64());
        }
        let tree = tree.expect("at least one repeat");
        let deviation = tree
            .states
            .iter()
            .zip(&seq)
            .map(|(g, w)| (g - w).amax() / w.amax().max(1e-300))
            .fold(0.0, f64::max);
        results.push(json!({
            "length": len,
            "sequential_ms": best.0 * 1e3,
            "tree_ms": best.1 * 1e3,
            "compositions": tree.compositions,
            "max_rel_deviation": deviation,
        }));
    }
    write_json(None, &json!({ "n": a.n, "d": a.d, "repeats": repeats, "results": results }))
}
