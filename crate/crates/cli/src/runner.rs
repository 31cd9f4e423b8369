//! Executes configured runs and renders the fixed-format CSV table and the
//! JSON-lines iteration log.

use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::json;

use qdmet_core::dmet::{run_dmet, SolverKind};
use qdmet_core::fci::fci_ground_state;
use qdmet_core::integrals::{build_hubbard, parse_fcidump};
use qdmet_core::meanfield::run_rhf;
use qdmet_core::vqe::esvqe_solve;
use qdmet_core::IntegralSet;

use crate::config::{InputSpec, Method, RunConfig};

pub const CSV_HEADER: [&str; 8] = [
    "label",
    "method",
    "energy_hartree",
    "mu_star",
    "converged",
    "n_qubits",
    "wall_seconds",
    "error",
];

/// One CSV row; optional columns render as empty fields.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub label: String,
    pub method: Method,
    pub energy: Option<f64>,
    pub mu_star: Option<f64>,
    pub converged: Option<bool>,
    pub n_qubits: Option<usize>,
    pub wall_seconds: f64,
    pub error: Option<String>,
    /// JSON-lines entries describing the iteration trace of this row.
    pub log_lines: Vec<String>,
}

impl RunRow {
    pub fn record(&self) -> [String; 8] {
        [
            self.label.clone(),
            self.method.label().to_string(),
            self.energy.map(|e| format!("{e:.12e}")).unwrap_or_default(),
            self.mu_star
                .map(|m| format!("{m:.10e}"))
                .unwrap_or_default(),
            self.converged.map(|c| c.to_string()).unwrap_or_default(),
            self.n_qubits.map(|n| n.to_string()).unwrap_or_default(),
            format!("{:.3}", self.wall_seconds),
            self.error.clone().unwrap_or_default(),
        ]
    }

    pub fn is_ok_and_converged(&self) -> bool {
        self.error.is_none() && self.converged.unwrap_or(false)
    }
}

fn load_input(spec: &InputSpec) -> Result<IntegralSet> {
    if let Some(path) = &spec.fcidump {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        return Ok(parse_fcidump(&text)?);
    }
    let hubbard = spec.hubbard.as_ref().expect("validated input");
    Ok(build_hubbard(
        hubbard.n_sites,
        hubbard.t,
        hubbard.u,
        hubbard.periodic,
        hubbard.n_electrons,
    )?)
}

struct Computed {
    energy: f64,
    mu_star: Option<f64>,
    converged: bool,
    n_qubits: usize,
    log_lines: Vec<String>,
}

fn execute_inner(spec: &InputSpec, config: &RunConfig, method: Method) -> Result<Computed> {
    let ints = load_input(spec)?;
    let label = spec.label();
    match method {
        Method::Rhf => {
            let state = run_rhf(&ints, None, &config.scf_config())?;
            Ok(Computed {
                energy: state.energy,
                mu_star: None,
                converged: true,
                n_qubits: 0,
                log_lines: Vec::new(),
            })
        }
        Method::Fci => {
            let ms2 = (ints.n_electrons() % 2) as i32;
            let solution = fci_ground_state(&ints, ints.n_electrons(), ms2)?;
            Ok(Computed {
                energy: solution.energy,
                mu_star: None,
                converged: true,
                n_qubits: 2 * ints.n_spatial(),
                log_lines: Vec::new(),
            })
        }
        Method::Vqe => {
            let solution = esvqe_solve(
                &ints,
                ints.n_electrons(),
                &config.vqe_config(),
                &config.scf_config(),
            )?;
            Ok(Computed {
                energy: solution.energy,
                mu_star: None,
                converged: solution.outcome.converged,
                n_qubits: solution.n_qubits,
                log_lines: Vec::new(),
            })
        }
        Method::DmetFci | Method::DmetEsvqe => {
            let partition = config.partition()?;
            let kind = if method == Method::DmetFci {
                SolverKind::Fci
            } else {
                SolverKind::Esvqe
            };
            let result = run_dmet(
                &ints,
                &partition,
                kind,
                &config.dmet_config()?,
                &config.scf_config(),
                &config.vqe_config(),
            )?;
            let mut log_lines = Vec::new();
            for it in &result.iterations {
                log_lines.push(
                    json!({
                        "label": label,
                        "iteration": it.iteration,
                        "mu": it.mu,
                        "deviation": it.deviation,
                        "fragment_energies": it.fragment_energies,
                        "wall_seconds": it.wall_seconds,
                    })
                    .to_string(),
                );
            }
            Ok(Computed {
                energy: result.total_energy,
                mu_star: Some(result.mu_star),
                converged: result.converged,
                n_qubits: result.n_qubits,
                log_lines,
            })
        }
    }
}

/// Runs one input, capturing failures in the row's error column.
pub fn execute_entry(spec: &InputSpec, config: &RunConfig, method: Method) -> RunRow {
    let start = Instant::now();
    let label = spec.label();
    match execute_inner(spec, config, method) {
        Ok(computed) => RunRow {
            label,
            method,
            energy: Some(computed.energy),
            mu_star: computed.mu_star,
            converged: Some(computed.converged),
            n_qubits: Some(computed.n_qubits),
            wall_seconds: start.elapsed().as_secs_f64(),
            error: None,
            log_lines: computed.log_lines,
        },
        Err(error) => RunRow {
            label,
            method,
            energy: None,
            mu_star: None,
            converged: None,
            n_qubits: None,
            wall_seconds: start.elapsed().as_secs_f64(),
            error: Some(format!("{error:#}")),
            log_lines: Vec::new(),
        },
    }
}

/// Sequential (or bounded-parallel) execution over scan entries; row order
/// always matches input order.
pub fn execute_scan(
    inputs: &[InputSpec],
    config: &RunConfig,
    method: Method,
    workers: Option<usize>,
) -> Result<Vec<RunRow>> {
    match workers {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("cannot build worker pool")?;
            Ok(pool.install(|| {
                inputs
                    .par_iter()
                    .map(|spec| execute_entry(spec, config, method))
                    .collect()
            }))
        }
        _ => Ok(inputs
            .iter()
            .map(|spec| execute_entry(spec, config, method))
            .collect()),
    }
}

/// Renders rows as CSV with the fixed header.
pub fn rows_to_csv(rows: &[RunRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    let bytes = writer.into_inner().context("csv flush")?;
    String::from_utf8(bytes).context("csv utf-8")
}
