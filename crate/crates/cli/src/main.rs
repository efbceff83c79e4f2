use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use magiso::geom::{asymmetry_report, quant_iso_check, AsymmetryKind, PlanarDomain, StarShape};
use magiso::harness::{
    comparison_property_run, convergence_study, init_thread_pool, verify_theorem1, write_contour_svg, ExperimentConfig,
};
use magiso::magfem::domain_eigenvalue;
use magiso::radial::{disk_energy, lambda_disk, PotentialProfile, RadialGrid};
use magiso::rearr::{build_profile, rearrangement_lower_bound};

#[derive(Parser)]
#[command(name = "magiso", version, about = "Magnetic Dirichlet eigenvalues, asymmetries and stability checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DomainArgs {
    /// Domain JSON file.
    #[arg(long, conflicts_with = "shape")]
    domain: Option<PathBuf>,
    /// Analytic domain: disk:R, ellipse:A,B, square:S, stadium:L,R or perturbed:R,EPS,K.
    #[arg(long)]
    shape: Option<String>,
    /// Boundary vertices for --shape.
    #[arg(long, default_value_t = 256)]
    samples: usize,
}

#[derive(Args, Clone)]
struct MeshArgs {
    /// Coarsest mesh size.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Number of nested meshes.
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Relative eigen-residual.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenvalue of one domain.
    Solve {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long = "B", default_value_t = 0.0)]
        b: f64,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Write the finest mesh as JSON.
        #[arg(long)]
        mesh_out: Option<PathBuf>,
        /// Write the finest eigenfunction as JSON.
        #[arg(long)]
        eigen_out: Option<PathBuf>,
        /// Write a contour plot of |f|.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Radial disk eigenvalue or disk energy of a potential.
    Disk {
        #[arg(long = "B", default_value_t = 0.0)]
        b: f64,
        #[arg(long = "R", default_value_t = 1.0)]
        r: f64,
        /// Potential JSON {R, samples}; prints its disk energy instead.
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long = "N", default_value_t = 2048)]
        n: usize,
    },
    /// Asymmetries and isoperimetric deficit of a domain.
    Asymmetry {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value = "interior")]
        kind: AsymmetryKind,
    },
    /// Rearranged profile of the principal eigenfunction.
    Rearrange {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long = "B", default_value_t = 0.0)]
        b: f64,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 256)]
        n_levels: usize,
        #[arg(long, default_value = "interior")]
        kind: AsymmetryKind,
        /// Profile CSV output.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full sweep over a corpus and field strengths.
    Verify {
        /// Config JSON; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        svg_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Comparison-lemma property run over seeded potential pairs.
    Compare {
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        #[arg(long = "N", default_value_t = 2048)]
        n: usize,
        #[arg(long = "R", default_value_t = 1.0)]
        r: f64,
    },
    /// Refinement table for one domain.
    Converge {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long = "B", default_value_t = 0.0)]
        b: f64,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Known eigenvalue to measure errors against.
        #[arg(long)]
        target: Option<f64>,
    },
}

fn parse_shape(spec: &str) -> Result<StarShape, String> {
    let (name, args) = spec.split_once(':').ok_or_else(|| format!("expected NAME:ARGS, got `{spec}`"))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    let want = |n: usize| {
        if nums.len() == n {
            Ok(())
        } else {
            Err(format!("`{name}` takes {n} numbers, got {}", nums.len()))
        }
    };
    match name {
        "disk" => want(1).map(|_| StarShape::Disk { radius: nums[0] }),
        "ellipse" => want(2).map(|_| StarShape::Ellipse { a: nums[0], b: nums[1] }),
        "square" => want(1).map(|_| StarShape::Square { side: nums[0] }),
        "stadium" => want(2).map(|_| StarShape::Stadium {
            half_length: nums[0],
            radius: nums[1],
        }),
        "perturbed" => want(3).and_then(|_| {
            let k = nums[2];
            if k.fract() != 0.0 || k < 1.0 {
                return Err(format!("perturbation frequency must be a positive integer, got {k}"));
            }
            Ok(StarShape::PerturbedDisk {
                radius: nums[0],
                epsilon: nums[1],
                k: k as u32,
            })
        }),
        other => Err(format!("unknown shape `{other}`")),
    }
}

fn load_domain(args: &DomainArgs) -> Result<PlanarDomain, String> {
    match (&args.domain, &args.shape) {
        (Some(path), _) => PlanarDomain::load(path).map_err(|e| e.to_string()),
        (None, Some(spec)) => {
            let shape = parse_shape(spec)?;
            PlanarDomain::from_shape(spec.clone(), shape, [0.0, 0.0], args.samples).map_err(|e| e.to_string())
        }
        (None, None) => Err("give --domain FILE or --shape SPEC".into()),
    }
}

fn print(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
}

/// `Ok(true)` when every asserted check passed.
fn run(cli: Cli) -> Result<bool, String> {
    let err = |e: magiso::Error| e.to_string();
    match cli.command {
        Command::Solve {
            domain,
            b,
            mesh,
            mesh_out,
            eigen_out,
            svg,
        } => {
            let d = load_domain(&domain)?;
            let refined = domain_eigenvalue(&d, b, mesh.h, mesh.levels, mesh.tol).map_err(err)?;
            if let Some(p) = mesh_out {
                refined.finest.mesh.save(p).map_err(err)?;
            }
            if let Some(p) = eigen_out {
                let f = &refined.finest.eigenfunction;
                let dump = json!({
                    "lambda": refined.finest.lambda,
                    "re": f.iter().map(|v| v.re).collect::<Vec<_>>(),
                    "im": f.iter().map(|v| v.im).collect::<Vec<_>>(),
                });
                std::fs::write(p, serde_json::to_string(&dump).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            }
            if let Some(p) = svg {
                let top = refined.finest.modulus().iter().cloned().fold(0.0, f64::max);
                let levels: Vec<f64> = (1..8).map(|i| top * i as f64 / 8.0).collect();
                write_contour_svg(&refined.finest, &levels, p).map_err(err)?;
            }
            print(json!({
                "label": d.label(),
                "B": b,
                "lambda": refined.extrapolation.value,
                "error_bar": refined.extrapolation.error_bar,
                "observed_order": refined.extrapolation.observed_order,
                "levels": refined.levels,
            }));
            Ok(true)
        }
        Command::Disk { b, r, potential, n } => {
            match potential {
                Some(p) => {
                    let a = PotentialProfile::load(p).map_err(err)?;
                    let grid = RadialGrid::new(a.r_max, n).map_err(err)?;
                    let coarse = disk_energy(&a, &grid).map_err(err)?;
                    let fine = disk_energy(&a, &grid.doubled()).map_err(err)?;
                    print(json!({
                        "R": a.r_max,
                        "energy": fine.energy,
                        "energy_coarse": coarse.energy,
                        "difference": (fine.energy - coarse.energy).abs(),
                        "hopf": coarse.hopf_holds() && fine.hopf_holds(),
                    }));
                    Ok(coarse.hopf_holds() && fine.hopf_holds())
                }
                None => {
                    let grid = RadialGrid::new(r, n).map_err(err)?;
                    let state = disk_energy(&PotentialProfile::homogeneous(b, &grid), &grid).map_err(err)?;
                    let value = lambda_disk(b, r).map_err(err)?;
                    print(json!({
                        "B": b,
                        "R": r,
                        "lambda": value.value,
                        "lambda_coarse": value.coarse,
                        "lambda_fine": value.fine,
                        "difference": value.difference,
                        "hopf": state.hopf_holds(),
                    }));
                    Ok(state.hopf_holds())
                }
            }
        }
        Command::Asymmetry { domain, kind } => {
            let d = load_domain(&domain)?;
            let report = asymmetry_report(&d);
            let iso = quant_iso_check(&d, kind);
            print(json!({
                "label": d.label(),
                "area": d.area(),
                "perimeter": d.perimeter(),
                "asymmetry": report,
                "isoperimetric": iso,
            }));
            Ok(iso.floor_holds)
        }
        Command::Rearrange {
            domain,
            b,
            mesh,
            n_levels,
            kind,
            out,
        } => {
            let d = load_domain(&domain)?;
            let refined = domain_eigenvalue(&d, b, mesh.h, mesh.levels, mesh.tol).map_err(err)?;
            let profile = build_profile(&refined.finest, n_levels, kind).map_err(err)?;
            profile.save_csv(&out).map_err(err)?;
            let bound = rearrangement_lower_bound(&profile, 0.0).map_err(err)?;
            let sandwich = profile.sandwich_violation();
            print(json!({
                "label": d.label(),
                "B": b,
                "lambda": refined.extrapolation.value,
                "bound_c0": bound,
                "sandwich_violation": sandwich,
                "layer_cake_defect": profile.layer_cake_defect,
            }));
            Ok(sandwich <= 1e-8)
        }
        Command::Verify {
            config,
            csv,
            json: json_out,
            svg_dir,
            seed,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(p).map_err(err)?,
                None => ExperimentConfig::default(),
            };
            if csv.is_some() {
                cfg.outputs.csv = csv;
            }
            if json_out.is_some() {
                cfg.outputs.json = json_out;
            }
            if svg_dir.is_some() {
                cfg.outputs.svg_dir = svg_dir;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(err)?;
            let report = verify_theorem1(&cfg).map_err(err)?;
            let failed: Vec<String> = report
                .rows
                .iter()
                .filter(|r| !r.passed())
                .map(|r| format!("{} B={}", r.label, r.b))
                .collect();
            print(json!({
                "rows": report.rows.len(),
                "noise_floor": report.noise_floor,
                "min_c_weak": report.min_c_weak,
                "min_c_strong": report.min_c_strong,
                "failed": failed,
                "all_pass": report.all_pass,
            }));
            Ok(report.all_pass)
        }
        Command::Compare { seeds, n, r } => {
            let run = comparison_property_run(seeds, n, r).map_err(err)?;
            print(json!({
                "seeds": run.seeds,
                "N": n,
                "monotone": format!("{}/{}", run.monotone_passes, run.seeds),
                "quantitative": format!("{}/{}", run.quantitative_passes, run.seeds),
                "failures": run.failures,
                "largest_slack": run.largest_slack,
            }));
            Ok(run.all_pass())
        }
        Command::Converge { domain, b, mesh, target } => {
            let d = load_domain(&domain)?;
            let table = convergence_study(&d, b, mesh.h, mesh.levels, mesh.tol, target).map_err(err)?;
            print(serde_json::to_value(&table).map_err(|e| e.to_string())?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_specs() {
        assert_eq!(parse_shape("disk:1").unwrap(), StarShape::Disk { radius: 1.0 });
        assert_eq!(parse_shape("ellipse:2,0.5").unwrap(), StarShape::Ellipse { a: 2.0, b: 0.5 });
        assert!(parse_shape("perturbed:1,0.1,2.5").is_err());
        assert!(parse_shape("ellipse:2").is_err());
        assert!(parse_shape("blob:1").is_err());
        assert!(parse_shape("disk").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
