//! Command-line front end: stability bound tables, amplification sweeps,
//! and convergence studies.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use adi_diffusion::adi::SchemeKind;
use adi_diffusion::harness::{
    bound_table, convergence_order, default_step_densities, run_convergence,
    write_convergence_csv, write_sweep_csv, ConvergenceConfig, ThetaPolicy,
};
use adi_diffusion::model::ProblemSpec;
use adi_diffusion::symbol::{logspace, SweepSampling};
use adi_diffusion::{Error, Result};

#[derive(Parser)]
#[command(
    name = "adi",
    version,
    about = "ADI time stepping for diffusion with mixed derivatives:\n\
             stability bounds, amplification sweeps, convergence studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the theta stability bounds of all four schemes.
    Bounds {
        /// Space dimension (>= 2; sufficient bounds exist up to 3).
        #[arg(long)]
        k: usize,
        /// Relative mixed-derivative size in [0, 1].
        #[arg(long)]
        gamma: f64,
    },
    /// Scan the amplification factor over Fourier modes and mesh ratios.
    Sweep {
        /// Scheme to analyze: do, cs, mcs or hv.
        #[arg(long)]
        scheme: SchemeKind,
        /// Fixed theta (alternative to --theta-policy).
        #[arg(long, conflicts_with = "theta_policy")]
        theta: Option<f64>,
        /// Policy: sufficient, necessary, fraction:F, value:V, preset-2d,
        /// preset-3d.
        #[arg(long)]
        theta_policy: Option<String>,
        /// Problem description file (key = value lines).
        #[arg(long, conflicts_with = "template")]
        problem: Option<PathBuf>,
        /// Built-in problem family: 2d-gamma or 3d-gamma.
        #[arg(long)]
        template: Option<String>,
        /// Substitution parameter for templates and `gamma` entries in
        /// problem files.
        #[arg(long)]
        gamma: Option<f64>,
        /// Angles per direction.
        #[arg(long, default_value_t = 64)]
        nphi: usize,
        /// Smallest mesh ratio dt/dx^2.
        #[arg(long, default_value_t = 1e-2)]
        rmin: f64,
        /// Largest mesh ratio.
        #[arg(long, default_value_t = 1e6)]
        rmax: f64,
        /// Number of log-spaced mesh ratios.
        #[arg(long, default_value_t = 25)]
        rcount: usize,
        /// Write every sample as CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run schemes against the exact semidiscrete solution and record
    /// errors per step size.
    Converge {
        /// Built-in problem family: 2d-gamma or 3d-gamma.
        #[arg(long, conflicts_with = "problem")]
        template: Option<String>,
        /// Problem description file (key = value lines).
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Substitution parameter for templates and problem files.
        #[arg(long)]
        gamma: Option<f64>,
        /// Uniform grid sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// Schemes to run (default: all four).
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<SchemeKind>,
        /// Theta selection policy.
        #[arg(long, default_value = "sufficient")]
        theta_policy: String,
        /// Integration end time.
        #[arg(long, default_value_t = 5.0)]
        t_final: f64,
        /// Steps per unit time, comma separated (default: ~25 log-spaced
        /// values from 1 to 1000).
        #[arg(long, value_delimiter = ',')]
        steps_per_unit: Vec<usize>,
        /// Output CSV path.
        #[arg(long, required = true)]
        out: PathBuf,
    },
}

fn load_problem(
    template: &Option<String>,
    problem: &Option<PathBuf>,
    gamma: Option<f64>,
) -> Result<ProblemSpec> {
    match (template, problem) {
        (Some(name), None) => {
            let gamma = gamma.ok_or_else(|| {
                Error::Config("templates need --gamma".into())
            })?;
            ProblemSpec::template(name, gamma)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            ProblemSpec::from_config_str(&text, gamma)
        }
        _ => Err(Error::Config(
            "specify exactly one of --template or --problem".into(),
        )),
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Bounds { k, gamma } => {
            write!(stdout, "{}", bound_table(k, gamma)?)?;
        }
        Command::Sweep {
            scheme,
            theta,
            theta_policy,
            problem,
            template,
            gamma,
            nphi,
            rmin,
            rmax,
            rcount,
            out,
        } => {
            let spec = load_problem(&template, &problem, gamma)?;
            let theta = match (theta, theta_policy) {
                (Some(t), None) => t,
                (None, Some(p)) => {
                    let policy: ThetaPolicy = p.parse()?;
                    policy.resolve(scheme, spec.k(), spec.d.gamma_min()?)?
                }
                (None, None) => {
                    return Err(Error::Config(
                        "specify --theta or --theta-policy".into(),
                    ))
                }
                (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
            };
            if !(rmin > 0.0 && rmax >= rmin) || rcount == 0 {
                return Err(Error::Config(
                    "mesh ratio range needs 0 < rmin <= rmax and rcount >= 1".into(),
                ));
            }
            let sampling = SweepSampling {
                n_phi: nphi,
                mesh_ratios: logspace(rmin, rmax, rcount),
                anisotropy: None,
            };
            let result = match out {
                Some(path) => {
                    let mut file = BufWriter::new(File::create(&path)?);
                    let result =
                        write_sweep_csv(scheme, theta, &spec, &sampling, &mut file)?;
                    file.flush()?;
                    writeln!(stdout, "wrote {} samples to {}", result.samples, path.display())?;
                    result
                }
                None => adi_diffusion::symbol::stability_sweep(
                    scheme,
                    theta,
                    &spec.d,
                    &spec.beta,
                    &sampling,
                )?,
            };
            writeln!(
                stdout,
                "scheme {} theta {:.6}: max |M| = {:.6e} at r = {:.3e}, phi = ({})",
                scheme,
                theta,
                result.max_abs_amplification,
                result.argmax_mesh_ratio,
                result
                    .argmax_angles
                    .iter()
                    .map(|p| format!("{p:.4}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )?;
            writeln!(
                stdout,
                "verdict: {}",
                if result.is_stable() { "stable" } else { "UNSTABLE" }
            )?;
        }
        Command::Converge {
            template,
            problem,
            gamma,
            m,
            schemes,
            theta_policy,
            t_final,
            steps_per_unit,
            out,
        } => {
            let spec = load_problem(&template, &problem, gamma)?;
            let kinds = if schemes.is_empty() {
                SchemeKind::ALL.to_vec()
            } else {
                schemes
            };
            let policy: ThetaPolicy = theta_policy.parse()?;
            let resolved = policy.resolve_all(&kinds, spec.k(), spec.d.gamma_min()?)?;
            for cfg in &resolved {
                writeln!(stdout, "scheme {} theta {:.6}", cfg.kind, cfg.theta)?;
            }
            let densities = if steps_per_unit.is_empty() {
                default_step_densities()
            } else {
                steps_per_unit
            };
            let config = ConvergenceConfig {
                problem: spec,
                grid_sizes: m.clone(),
                schemes: resolved,
                t_final,
                step_densities: densities,
            };
            let records = run_convergence(&config)?;
            let mut file = BufWriter::new(File::create(&out)?);
            write_convergence_csv(&records, &mut file)?;
            file.flush()?;
            writeln!(stdout, "wrote {} records to {}", records.len(), out.display())?;
            for kind in &kinds {
                for &mm in &m {
                    if let Some(order) = convergence_order(&records, *kind, mm, 1e-3, 1e-1) {
                        writeln!(
                            stdout,
                            "observed order {} (m = {}): {:.3}",
                            kind, mm, order
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
