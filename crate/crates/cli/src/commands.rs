use std::io::{BufReader, Write};

use boolean_spheres::emptyspace::WeightFunction;
use boolean_spheres::estimators::{estimate as run_estimator, EstimatorConfig, Method, RadiusSet, DEFAULT_GRID_H};
use boolean_spheres::experiment::{run_table_experiment, Cell, ExperimentConfig, COLUMNS};
use boolean_spheres::geometry::GaugeBody;
use boolean_spheres::model::{ModelParams, RadiusDistribution, Realization, Window};
use boolean_spheres::validation::{run_validation_suite, Status, Suite, ValidationConfig};
use boolean_spheres::variance::{
    empirical_variance_curve, sigma2_with, sigma_g2_with, CampaignOptions, QmcConfig, SigmaGResult, VarianceOptions,
    VariancePoint, VarianceResult,
};
use boolean_spheres::{distance, Error};
use serde::Serialize;

use crate::output::{sibling, write_metadata, write_with};
use crate::settings::Settings;
use crate::CliError;

const DEFAULT_GAMMA: f64 = 25.0;
const DEFAULT_RADIUS: &str = "uniform:0.05:0.1";
const DEFAULT_WINDOW: &str = "0:0:1:1";
const DEFAULT_EPSILON: f64 = 0.05;
const DEFAULT_SEED: u64 = 1;

fn io(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn lib(e: Error) -> CliError {
    CliError::from(e)
}

fn radius(s: &Settings) -> Result<RadiusDistribution, CliError> {
    s.parsed(&s.radius_dist, DEFAULT_RADIUS)
}

fn window(s: &Settings) -> Result<Window, CliError> {
    s.parsed(&s.window, DEFAULT_WINDOW)
}

fn gauge(s: &Settings) -> Result<GaugeBody, CliError> {
    s.parsed(&s.gauge, "ball")
}

fn weight(s: &Settings) -> Result<WeightFunction, CliError> {
    WeightFunction::indicator(s.epsilon.unwrap_or(DEFAULT_EPSILON)).map_err(lib)
}

fn seed(s: &Settings) -> u64 {
    s.seed.unwrap_or(DEFAULT_SEED)
}

#[derive(Serialize)]
struct SimulateConfig {
    intensity: f64,
    radius: RadiusDistribution,
    window: String,
    reach: f64,
    seed: u64,
}

#[derive(Serialize)]
struct SimulateOutputs {
    germs: usize,
    margin: f64,
}

pub fn simulate(s: Settings) -> Result<(), CliError> {
    let w = window(&s)?;
    let cfg = SimulateConfig {
        intensity: s.gamma.unwrap_or(DEFAULT_GAMMA),
        radius: radius(&s)?,
        window: w.to_string(),
        reach: s.epsilon.unwrap_or(DEFAULT_EPSILON),
        seed: seed(&s),
    };
    let params = ModelParams::new(cfg.intensity, cfg.radius, w.dim())?;
    let z = Realization::sample(&params, &w, cfg.reach, cfg.seed)?;
    let out = s.out_or("realization.csv");
    write_with(&out, |f| z.write_csv(f).map_err(lib))?;
    let outputs = SimulateOutputs {
        germs: z.len(),
        margin: z.margin(),
    };
    write_metadata(&out, "simulate", cfg.seed, &cfg, &outputs, &[&out])?;
    println!("{} germs written to {}", z.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct EstimateConfig {
    method: Method,
    gauge: String,
    epsilon: f64,
    grid_h: f64,
    /// Stored realization, when not simulating.
    input: Option<String>,
    intensity: Option<f64>,
    radius: Option<RadiusDistribution>,
    window: String,
    replications: usize,
    seed: u64,
}

#[derive(Serialize)]
struct EstimateSummary {
    replication: usize,
    seed: Option<u64>,
    germs: usize,
    total_mass: f64,
    atoms: usize,
    ks: Option<f64>,
    cvm: Option<f64>,
}

pub fn estimate(s: Settings) -> Result<(), CliError> {
    let method: Method = s.parsed(&s.method, "weighted")?;
    let g = gauge(&s)?;
    let f = weight(&s)?;
    let eps = f.support_end();
    let h = s.grid_h.unwrap_or(DEFAULT_GRID_H);
    let est = EstimatorConfig::new(method, g.clone(), f, h)?;
    let (realizations, cfg) = match &s.input {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let z = Realization::read_csv(BufReader::new(file))?;
            let law = match &s.radius_dist {
                Some(r) => Some(r.parse::<RadiusDistribution>()?),
                None => z.params().map(|p| p.radius),
            };
            let cfg = EstimateConfig {
                method,
                gauge: g.to_string(),
                epsilon: eps,
                grid_h: h,
                input: Some(path.display().to_string()),
                intensity: z.params().map(|p| p.intensity),
                radius: law,
                window: z.observed().to_string(),
                replications: 1,
                seed: z.seed().unwrap_or(0),
            };
            (vec![z], cfg)
        }
        None => {
            let w = window(&s)?;
            let cfg = EstimateConfig {
                method,
                gauge: g.to_string(),
                epsilon: eps,
                grid_h: h,
                input: None,
                intensity: Some(s.gamma.unwrap_or(DEFAULT_GAMMA)),
                radius: Some(radius(&s)?),
                window: w.to_string(),
                replications: s.reps.unwrap_or(1),
                seed: seed(&s),
            };
            if cfg.replications == 0 {
                return Err(CliError::Config("at least one replication is needed".into()));
            }
            let params = ModelParams::new(cfg.intensity.unwrap(), cfg.radius.unwrap(), w.dim())?;
            let reach = if method.is_limit() { 0.0 } else { eps };
            let zs = (0..cfg.replications as u64)
                .map(|k| Realization::sample(&params, &w, reach, cfg.seed.wrapping_add(k)))
                .collect::<Result<Vec<_>, Error>>()?;
            (zs, cfg)
        }
    };
    let out = s.out_or("estimate.csv");
    let mut summaries = Vec::new();
    let mut file = crate::output::create(&out)?;
    writeln!(file, "replication,seed,radius,weight").map_err(io)?;
    for (k, z) in realizations.iter().enumerate() {
        let m = run_estimator(z, z.observed(), &est)?;
        let seed_col = z.seed().map(|v| v.to_string()).unwrap_or_default();
        for (r, w) in m.atoms() {
            writeln!(file, "{k},{seed_col},{r},{w}").map_err(io)?;
        }
        summaries.push(EstimateSummary {
            replication: k,
            seed: z.seed(),
            germs: z.len(),
            total_mass: m.total(),
            atoms: m.atoms().len(),
            ks: cfg.radius.map(|law| distance::ks_distance(&m, &law)),
            cvm: cfg.radius.map(|law| distance::cvm_distance(&m, &law)),
        });
    }
    file.flush().map_err(io)?;
    write_metadata(&out, "estimate", cfg.seed, &cfg, &summaries, &[&out])?;
    for r in &summaries {
        match r.ks {
            Some(ks) => println!("replication {}: {} atoms, KS {ks:.4}", r.replication, r.atoms),
            None => println!("replication {}: {} atoms", r.replication, r.atoms),
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct VarianceConfig {
    intensity: f64,
    radius: RadiusDistribution,
    gauge: String,
    epsilon: f64,
    set: String,
    qmc: QmcConfig,
    n: Vec<f64>,
    replications: usize,
    seed: u64,
    sequential: bool,
}

#[derive(Serialize)]
struct VarianceOutputs {
    sigma2: VarianceResult,
    sigma_g2: SigmaGResult,
    empirical: Vec<VariancePoint>,
}

pub fn variance(s: Settings) -> Result<(), CliError> {
    let set: RadiusSet = s.parsed(&s.set, "le:0.075")?;
    let g = gauge(&s)?;
    let f = weight(&s)?;
    let base = QmcConfig::default();
    let reps = s.reps.unwrap_or(0);
    let cfg = VarianceConfig {
        intensity: s.gamma.unwrap_or(DEFAULT_GAMMA),
        radius: radius(&s)?,
        gauge: g.to_string(),
        epsilon: f.support_end(),
        set: set.to_string(),
        qmc: QmcConfig {
            points: s.qmc_points.unwrap_or(base.points),
            shifts: s.qmc_shifts.unwrap_or(base.shifts),
            seed: s.seed.unwrap_or(base.seed),
        },
        n: match (&s.n, reps) {
            (_, 0) => Vec::new(),
            (Some(n), _) => n.clone(),
            (None, _) => vec![2.0],
        },
        replications: reps,
        seed: seed(&s),
        sequential: s.sequential,
    };
    if cfg.qmc.points == 0 || cfg.qmc.shifts < 2 {
        return Err(CliError::Config("need at least one point and two shifts".into()));
    }
    let params = ModelParams::planar(cfg.intensity, cfg.radius)?;
    let vopts = VarianceOptions {
        qmc: cfg.qmc,
        sequential: cfg.sequential,
    };
    let sigma2 = sigma2_with(&set, &params, &g, &f, &vopts)?;
    let sigma_g2 = sigma_g2_with(&set, &params, &g, &f, &vopts)?;
    let empirical = if cfg.n.is_empty() {
        Vec::new()
    } else {
        let opts = CampaignOptions {
            variance: vopts,
            sequential: cfg.sequential,
            ..CampaignOptions::default()
        };
        empirical_variance_curve(&set, &params, &f, &cfg.n, reps, cfg.seed, &opts)?
    };
    let out = s.out_or("variance.csv");
    write_with(&out, |w| {
        writeln!(w, "quantity,n,value,std_error").map_err(io)?;
        let rows = [
            ("sigma2", sigma2.sigma2, sigma2.std_error),
            ("tau1_part", sigma2.tau1_part, sigma2.tau1_error),
            ("tau2_part", sigma2.tau2_part, sigma2.tau2_error),
            ("sigma_g2", sigma_g2.value, sigma_g2.std_error),
            ("sigma_g2_direct", sigma_g2.direct, sigma_g2.direct_error),
            ("g_c", sigma_g2.g_c, 0.0),
            ("beta", sigma_g2.beta, 0.0),
        ];
        for (name, v, e) in rows {
            writeln!(w, "{name},,{v},{e}").map_err(io)?;
        }
        for p in &empirical {
            writeln!(
                w,
                "empirical_variance_per_area,{},{},{}",
                p.n, p.variance_per_area, p.std_error
            )
            .map_err(io)?;
        }
        Ok(())
    })?;
    println!("sigma2 = {:.6} ± {:.2e}", sigma2.sigma2, sigma2.std_error);
    println!("sigma_G2 = {:.6} ± {:.2e}", sigma_g2.value, sigma_g2.std_error);
    for p in &empirical {
        println!(
            "n = {}: Var/|W| = {:.6} ± {:.2e}",
            p.n, p.variance_per_area, p.std_error
        );
    }
    let outputs = VarianceOutputs {
        sigma2,
        sigma_g2,
        empirical,
    };
    write_metadata(&out, "variance", cfg.seed, &cfg, &outputs, &[&out])?;
    Ok(())
}

#[derive(Serialize)]
struct TableRowOutput {
    label: String,
    cells: [Cell; 4],
}

#[derive(Serialize)]
struct TableOutputs {
    columns: [&'static str; 4],
    rows: Vec<TableRowOutput>,
    failed_seeds: Vec<u64>,
}

pub fn table(s: Settings) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::reference(s.gamma.unwrap_or(DEFAULT_GAMMA));
    cfg.radius = radius(&s)?;
    cfg.window = window(&s)?;
    cfg.grid_h = s.grid_h.unwrap_or(cfg.grid_h);
    cfg.replications = s.reps.unwrap_or(cfg.replications);
    cfg.seed = s.seed.unwrap_or(cfg.seed);
    cfg.sequential = s.sequential;
    cfg.validate()?;
    let result = run_table_experiment(&cfg)?;
    let out = s.out_or("table.csv");
    let reps_path = sibling(&out, "replications");
    write_with(&out, |w| result.write_summary_csv(w).map_err(lib))?;
    write_with(&reps_path, |w| result.write_replications_csv(w).map_err(lib))?;
    let outputs = TableOutputs {
        columns: COLUMNS,
        rows: result
            .rows
            .iter()
            .map(|r| TableRowOutput {
                label: r.label.clone(),
                cells: r.cells,
            })
            .collect(),
        failed_seeds: result.failed_seeds.clone(),
    };
    write_metadata(&out, "table", cfg.seed, &cfg, &outputs, &[&out, &reps_path])?;
    print_table(&outputs);
    Ok(())
}

fn print_table(t: &TableOutputs) {
    println!(
        "{:<22}{:>16}{:>16}{:>16}{:>16}",
        "estimator", "sph KS", "lin KS", "sph CvMx1000", "lin CvMx1000"
    );
    for r in &t.rows {
        print!("{:<22}", r.label);
        for c in &r.cells {
            print!("{:>16}", format!("{:.3}±{:.3}", c.mean, c.std_error));
        }
        println!();
    }
}

fn parse_suite(name: &str) -> Result<Suite, CliError> {
    serde_json::from_value(serde_json::Value::String(name.trim().to_string()))
        .map_err(|_| CliError::Config(format!("unknown suite {name:?}")))
}

pub fn validate(s: Settings) -> Result<(), CliError> {
    let d = ValidationConfig::default();
    let n = s.n.as_ref().and_then(|v| v.first().copied());
    let cfg = ValidationConfig {
        intensity: s.gamma.unwrap_or(d.intensity),
        radius: match &s.radius_dist {
            Some(r) => r.parse()?,
            None => d.radius,
        },
        epsilon: s.epsilon.unwrap_or(d.epsilon),
        grid_h: s.grid_h.unwrap_or(d.grid_h),
        replications: s.reps.unwrap_or(d.replications),
        seed: s.seed.unwrap_or(d.seed),
        suites: match &s.suites {
            Some(names) => names.iter().map(|n| parse_suite(n)).collect::<Result<_, _>>()?,
            None => d.suites.clone(),
        },
        variance_n: n.unwrap_or(d.variance_n),
        variance_replications: s.campaign_reps.unwrap_or(d.variance_replications),
        clt_n: n.unwrap_or(d.clt_n),
        clt_replications: s.campaign_reps.unwrap_or(d.clt_replications),
        sequential: s.sequential,
        density_scale: 1.0,
    };
    ModelParams::planar(cfg.intensity, cfg.radius)?;
    WeightFunction::indicator(cfg.epsilon)?;
    let report = run_validation_suite(&cfg);
    let out = s.out_or("validation.csv");
    write_with(&out, |w| {
        writeln!(w, "suite,status,check,passed,observed,expected,tolerance").map_err(io)?;
        for suite in &report.suites {
            let name = serde_json::to_value(suite.suite).map_err(|e| CliError::Runtime(e.to_string()))?;
            let status = serde_json::to_value(suite.status).map_err(|e| CliError::Runtime(e.to_string()))?;
            let (name, status) = (name.as_str().unwrap_or(""), status.as_str().unwrap_or(""));
            if suite.checks.is_empty() {
                writeln!(
                    w,
                    "{name},{status},{},,,,",
                    suite.error.as_deref().unwrap_or("").replace(',', ";")
                )
                .map_err(io)?;
            }
            for c in &suite.checks {
                writeln!(
                    w,
                    "{name},{status},{},{},{},{},{}",
                    c.name.replace(',', ";"),
                    c.passed,
                    c.observed,
                    c.expected,
                    c.tolerance
                )
                .map_err(io)?;
            }
        }
        Ok(())
    })?;
    write_metadata(&out, "validate", cfg.seed, &cfg, &report, &[&out])?;
    for suite in &report.suites {
        println!("{:?}: {:?}", suite.suite, suite.status);
    }
    match report.status {
        Status::Pass => Ok(()),
        Status::Fail => Err(CliError::Validation("at least one suite failed".into())),
        Status::Skipped => Err(CliError::Validation("every suite was skipped".into())),
    }
}
