//! `timebin`: scenario runner for the time-bin qudit simulator.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use timebin_core::chain::propagated_confusion;
use timebin_core::config::OutputFormat;
use timebin_core::{
    build_measurement_chain, build_report, check_equivalence, confusion_matrix_analytic,
    key_rate_threshold, probabilities, routing_table, run_experiment, secret_key_rate, Apparatus,
    Basis, Error, ExperimentConfig, KeyRateReport, Result, ScenarioConfig, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(name = "timebin", version, about = "Time-bin qudit measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario file; the built-in reference scenario if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Shots per prepared state and basis pair.
    #[arg(long)]
    shots: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Config override, e.g. `hardware.delta_phi_deg=162`. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Analytic,
    Simulate,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo detection counts, probabilities and key rate report.
    Simulate(Common),
    /// Exact confusion matrices and key rate report, no sampling.
    Analytic(Common),
    /// Key rate over a grid of one config parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config key, e.g. `hardware.delta_phi_deg`.
        #[arg(long)]
        sweep_param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[arg(long, value_enum, default_value = "analytic")]
        method: Method,
    },
    /// Checks state propagation against the brute-force chain matrices.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Secret key rate tables.
    Rates {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        dims: Vec<usize>,
        /// Defaults to 0 to 0.2 in steps of 0.01.
        #[arg(long, value_delimiter = ',')]
        qbers: Vec<f64>,
    },
}

/// Resolved configuration plus where and how to write.
struct Run {
    cfg: ScenarioConfig,
    hash: String,
    out: PathBuf,
    format: OutputFormat,
}

impl Run {
    fn new(common: &Common) -> Result<Self> {
        let mut overrides = common.params.clone();
        if let Some(seed) = common.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(shots) = common.shots {
            overrides.push(format!("shots={shots}"));
        }
        if let Some(out) = &common.out {
            overrides.push(format!("output.dir={}", toml_quote(&out.to_string_lossy())));
        }
        if let Some(f) = common.format {
            let name = match f {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            overrides.push(format!("output.format=\"{name}\""));
        }
        let cfg = match &common.config {
            Some(path) => ScenarioConfig::load(path, &overrides)?,
            None => ScenarioConfig::from_toml_str("", &overrides)?,
        };
        let out = PathBuf::from(&cfg.output.dir);
        fs::create_dir_all(&out)?;
        Ok(Run {
            hash: cfg.hash(),
            format: cfg.output.format,
            out,
            cfg,
        })
    }

    fn provenance(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "config_sha256": self.hash,
            "seed": self.cfg.seed,
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# schema_version: {SCHEMA_VERSION}\n# config_sha256: {}\n# seed: {}\n",
            self.hash, self.cfg.seed
        )
    }

    fn write_json(&self, name: &str, body: Value) -> Result<PathBuf> {
        let mut doc = self.provenance();
        if let (Value::Object(doc), Value::Object(body)) = (&mut doc, body) {
            doc.extend(body);
        }
        let text = serde_json::to_string_pretty(&doc).expect("json value serializes") + "\n";
        self.write(name, &text)
    }

    fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let mut text = self.csv_header();
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(name, &text)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_resolved_config(&self) -> Result<PathBuf> {
        let mut cfg = self.cfg.clone();
        cfg.output = Default::default();
        let text = format!(
            "# schema_version: {SCHEMA_VERSION}\n# config_sha256: {}\n{}",
            self.hash,
            cfg.to_toml_string()?
        );
        self.write("config.resolved.toml", &text)
    }
}

fn toml_quote(s: &str) -> String {
    let mut q = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            _ => q.push(c),
        }
    }
    q.push('"');
    q
}

fn tag(a: Basis, b: Basis) -> String {
    format!("{}{}", a.index(), b.index())
}

fn report_json(r: &KeyRateReport) -> Value {
    json!({
        "dimension": r.dimension,
        "fidelities": r.fidelities,
        "mean_fidelity": [r.mean_fidelity(0), r.mean_fidelity(1)],
        "qber": r.qber,
        "rate": r.rate,
        "threshold": r.threshold,
    })
}

fn simulate(run: &Run) -> Result<Vec<PathBuf>> {
    let results = run_experiment(&run.cfg.experiment())?;
    let mut files = vec![run.write_resolved_config()?];
    for t in &results.tables {
        let name = tag(t.prep_basis, t.meas_basis);
        files.push(match run.format {
            OutputFormat::Csv => run.write_csv(&format!("counts_{name}.csv"), "alpha,beta,i,j,count", &t.csv_rows())?,
            OutputFormat::Json => run.write_json(
                &format!("counts_{name}.json"),
                json!({
                    "prep_basis": t.prep_basis.index(),
                    "meas_basis": t.meas_basis.index(),
                    "shots": t.shots,
                    "counts": t.counts,
                }),
            )?,
        });
        files.push(run.write_json(
            &format!("probabilities_{name}.json"),
            json!({
                "method": "monte_carlo",
                "prep_basis": t.prep_basis.index(),
                "meas_basis": t.meas_basis.index(),
                "shots": t.shots,
                "no_window": (0..t.dimension()).map(|i| t.no_window(i)).collect::<Vec<_>>(),
                "probabilities": probabilities(t)?,
            }),
        )?);
    }
    if results.get(0, 0).is_some() && results.get(1, 1).is_some() {
        let report = build_report(&results)?;
        files.push(run.write_json(
            "report.json",
            json!({"method": "monte_carlo", "shots": run.cfg.shots, "report": report_json(&report)}),
        )?);
    }
    Ok(files)
}

fn analytic_report(cfg: &ScenarioConfig) -> Result<KeyRateReport> {
    let hw = cfg.hardware_params();
    let d = cfg.dimension;
    let p0 = confusion_matrix_analytic(d, Basis::Computational, Basis::Computational, &hw)?;
    let p1 = confusion_matrix_analytic(d, Basis::Superposition, Basis::Superposition, &hw)?;
    KeyRateReport::from_matched_probabilities([&p0, &p1])
}

fn analytic(run: &Run) -> Result<Vec<PathBuf>> {
    let hw = run.cfg.hardware_params();
    let mut files = vec![run.write_resolved_config()?];
    for (a, b) in run.cfg.basis_pairs() {
        let p = confusion_matrix_analytic(run.cfg.dimension, a, b, &hw)?;
        files.push(run.write_json(
            &format!("probabilities_{}.json", tag(a, b)),
            json!({
                "method": "analytic",
                "prep_basis": a.index(),
                "meas_basis": b.index(),
                "probabilities": p,
            }),
        )?);
    }
    let report = analytic_report(&run.cfg)?;
    files.push(run.write_json("report.json", json!({"method": "analytic", "report": report_json(&report)}))?);
    Ok(files)
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    qber: f64,
    rate: f64,
    mean_fidelity_computational: f64,
    mean_fidelity_superposition: f64,
}

fn sweep(run: &Run, common: &Common, key: &str, from: f64, to: f64, steps: usize, method: Method) -> Result<Vec<PathBuf>> {
    if steps == 0 {
        return Err(Error::Config("steps must be positive".into()));
    }
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let value = if steps == 1 {
            from
        } else {
            from + (to - from) * k as f64 / (steps - 1) as f64
        };
        let mut point = common.clone();
        point.params.push(format!("{key}={value:?}"));
        let cfg = Run::new(&point)?.cfg;
        let report = match method {
            Method::Analytic => analytic_report(&cfg)?,
            Method::Simulate => {
                let exp = ExperimentConfig {
                    bases: vec![
                        (Basis::Computational, Basis::Computational),
                        (Basis::Superposition, Basis::Superposition),
                    ],
                    ..cfg.experiment()
                };
                build_report(&run_experiment(&exp)?)?
            }
        };
        rows.push(SweepRow {
            value,
            qber: report.qber,
            rate: report.rate,
            mean_fidelity_computational: report.mean_fidelity(0),
            mean_fidelity_superposition: report.mean_fidelity(1),
        });
    }
    let method_name = match method {
        Method::Analytic => "analytic",
        Method::Simulate => "monte_carlo",
    };
    let path = match run.format {
        OutputFormat::Csv => {
            let lines: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{}",
                        r.value, r.qber, r.rate, r.mean_fidelity_computational, r.mean_fidelity_superposition
                    )
                })
                .collect();
            run.write_csv(
                "sweep.csv",
                &format!("# parameter: {key}\n# method: {method_name}\nvalue,qber,rate,mean_fidelity_computational,mean_fidelity_superposition"),
                &lines,
            )?
        }
        OutputFormat::Json => run.write_json(
            "sweep.json",
            json!({"parameter": key, "method": method_name, "rows": rows}),
        )?,
    };
    Ok(vec![path])
}

#[derive(Serialize)]
struct Check {
    name: String,
    error: f64,
    passed: bool,
}

fn validate(run: &Run, samples: usize, tol: f64) -> Result<(Vec<PathBuf>, bool)> {
    let hw = run.cfg.hardware_params();
    let d = run.cfg.dimension;
    let mut checks = Vec::new();
    for basis in Basis::BOTH {
        let chain = build_measurement_chain(d, basis, &hw)?;
        let eq = check_equivalence(&chain, samples, run.cfg.seed)?;
        checks.push(Check {
            name: format!("propagation_vs_matrix_basis{}", basis.index()),
            error: eq.max_state_error,
            passed: eq.max_state_error <= tol,
        });
        if let Some(u) = eq.unitarity_error {
            checks.push(Check {
                name: format!("unitarity_basis{}", basis.index()),
                error: u,
                passed: u <= tol,
            });
        }

        let reference = build_measurement_chain(d, basis, &hw.reference())?;
        let text = serde_json::to_string(&reference).expect("apparatus serializes");
        let reloaded: Apparatus = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let same = routing_table(&reference, basis, hw.window_width_ns)?
            == routing_table(&reloaded, basis, hw.window_width_ns)?;
        checks.push(Check {
            name: format!("apparatus_round_trip_basis{}", basis.index()),
            error: if same { 0.0 } else { 1.0 },
            passed: same,
        });
    }
    for a in Basis::BOTH {
        for b in Basis::BOTH {
            let oracle = confusion_matrix_analytic(d, a, b, &hw)?;
            let modular = propagated_confusion(d, a, b, &hw)?;
            let err = oracle
                .iter()
                .flatten()
                .zip(modular.iter().flatten())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            checks.push(Check {
                name: format!("confusion_{}", tag(a, b)),
                error: err,
                passed: err <= tol,
            });
        }
    }
    let ok = checks.iter().all(|c| c.passed);
    let path = run.write_json(
        "validation.json",
        json!({"tolerance": tol, "samples": samples, "passed": ok, "checks": checks}),
    )?;
    Ok((vec![path], ok))
}

fn rates(run: &Run, dims: &[usize], qbers: &[f64]) -> Result<Vec<PathBuf>> {
    let qbers: Vec<f64> = if qbers.is_empty() {
        (0..=20).map(|k| k as f64 / 100.0).collect()
    } else {
        qbers.to_vec()
    };
    let mut table = Vec::new();
    let mut thresholds = Vec::new();
    for &d in dims {
        thresholds.push((d, key_rate_threshold(d)?));
        for &q in &qbers {
            table.push((d, q, secret_key_rate(d, q)?));
        }
    }
    let path = match run.format {
        OutputFormat::Csv => {
            let mut header = String::new();
            for (d, t) in &thresholds {
                writeln!(header, "# threshold d={d}: {t}").unwrap();
            }
            header.push_str("d,qber,rate");
            let rows: Vec<String> = table.iter().map(|(d, q, r)| format!("{d},{q},{r}")).collect();
            run.write_csv("rates.csv", &header, &rows)?
        }
        OutputFormat::Json => run.write_json(
            "rates.json",
            json!({
                "thresholds": thresholds.iter().map(|(d, t)| json!({"d": d, "qber": t})).collect::<Vec<_>>(),
                "rows": table.iter().map(|(d, q, r)| json!({"d": d, "qber": q, "rate": r})).collect::<Vec<_>>(),
            }),
        )?,
    };
    Ok(vec![path])
}

fn execute(cli: Cli) -> Result<bool> {
    let (files, ok) = match &cli.command {
        Command::Simulate(c) => (simulate(&Run::new(c)?)?, true),
        Command::Analytic(c) => (analytic(&Run::new(c)?)?, true),
        Command::Sweep {
            common,
            sweep_param,
            from,
            to,
            steps,
            method,
        } => (sweep(&Run::new(common)?, common, sweep_param, *from, *to, *steps, *method)?, true),
        Command::Validate {
            common,
            samples,
            tolerance,
        } => validate(&Run::new(common)?, *samples, *tolerance)?,
        Command::Rates { common, dims, qbers } => (rates(&Run::new(common)?, dims, qbers)?, true),
    };
    let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    println!("{}", json!({"ok": ok, "files": files}));
    Ok(ok)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
