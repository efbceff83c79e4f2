//! Corpus generation, the verification sweep and the supporting studies.

mod config;
mod studies;
mod svg;
mod verify;

pub use config::{generate_corpus, ExperimentConfig, FamilySpec, Outputs, Tolerances, MAX_BR2};
pub use studies::{
    comparison_property_run, convergence_study, erdos_bounds_study, generate_subset_pairs, scaling_check,
    subset_property_run, ComparisonRun, ConvergenceTable, ErdosStudy, ScalingCheck, SubsetPair,
    ERDOS_SLOPE_BRACKET,
};
pub use svg::{contour_svg, write_contour_svg};
pub use verify::{
    asymmetry_noise_floor, verify_row, verify_theorem1, RearrangementSummary, SweepReport, VerificationRow,
    CSV_COLUMNS,
};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MAGISO_THREADS";

/// Sizes the global thread pool from `MAGISO_THREADS` when set; returns the pool size.
pub fn init_thread_pool() -> usize {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // A second initialization keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    rayon::current_num_threads()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{AsymmetryKind, StarShape};
    use std::f64::consts::PI;

    #[test]
    fn default_corpus_shape() {
        let cfg = ExperimentConfig::default();
        let corpus = generate_corpus(&cfg).unwrap();
        let disks = corpus.iter().filter(|d| config::is_disk(d)).count();
        assert_eq!(disks, 1);
        assert!(corpus.len() - disks >= 12);
        for d in &corpus {
            assert!((d.exact_area() - PI).abs() < 1e-12, "{}", d.label());
        }
    }

    #[test]
    fn perturbed_disk_area() {
        let cfg = ExperimentConfig {
            families: vec![FamilySpec::PerturbedDisks {
                radius: 1.0,
                epsilons: vec![0.0, 0.1],
                ks: vec![3],
            }],
            target_area: None,
            ..Default::default()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        assert!(matches!(corpus[0].shape(), Some(StarShape::Disk { .. })));
        let want = PI * (1.0 + 0.01 / 2.0);
        assert!((corpus[1].area() - want).abs() / want < 1e-2);
        // The perturbed disk has its own area and so its own control.
        assert_eq!(corpus.len(), 3);
        assert!((corpus[2].exact_area() - want).abs() < 1e-12);
    }

    #[test]
    fn control_disk_added_and_squares_exact() {
        let cfg = ExperimentConfig {
            families: vec![FamilySpec::Squares { sides: vec![1.0] }],
            target_area: None,
            ..Default::default()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus[0].area(), 1.0);
        assert!(corpus[1].label().starts_with("disk-control"));
        assert!((corpus[1].exact_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation_and_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, back);
        let partial = ExperimentConfig::from_json(r#"{"b_values": [1.0], "mesh_h": 0.2}"#).unwrap();
        assert_eq!(partial.levels, 3);
        assert!(ExperimentConfig::from_json(
            r#"{"families": [{"family": "perturbed_disks", "radius": 1, "epsilons": [0.1], "ks": [4]}]}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(r#"{"mesh_h": -1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"unknown": 1}"#).is_err());
    }

    #[test]
    fn corpus_is_deterministic() {
        let cfg = ExperimentConfig {
            random_perturbed: 3,
            seed: 11,
            ..Default::default()
        };
        let a = generate_corpus(&cfg).unwrap();
        let b = generate_corpus(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label(), y.label());
            assert_eq!(x.vertices(), y.vertices());
        }
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            families: vec![FamilySpec::Ellipses { axes: vec![[2.0, 0.5]] }],
            b_values: vec![0.0, 1.0],
            mesh_h: 0.15,
            levels: 3,
            n_levels: 48,
            ..Default::default()
        }
    }

    #[test]
    fn small_sweep_passes_and_is_reproducible() {
        let cfg = small_config();
        let a = verify_theorem1(&cfg).unwrap();
        assert_eq!(a.rows.len(), 4);
        for r in &a.rows {
            assert!(r.passed(), "{r:?}");
        }
        let ellipse = &a.rows[0];
        assert!(ellipse.deficit > 0.0);
        assert!(ellipse.c_emp_thm1_weak.unwrap() > 0.0);
        let disk = &a.rows[2];
        assert!(disk.is_disk && disk.c_emp_thm1_strong.is_none());
        assert!(disk.deficit.abs() <= 1e-3, "{}", disk.deficit);
        let b = verify_theorem1(&cfg).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let text = String::from_utf8(ca).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn scaling_identity_at_unit_factor() {
        let d = PlanarDomain::from_shape("e", StarShape::Ellipse { a: 1.5, b: 1.0 }, [0.0, 0.0], 128).unwrap();
        let s = scaling_check(&d, 1.0, 1.0, 0.2, 1, 1e-10).unwrap();
        assert!(s.relative_error < 1e-12);
    }

    #[test]
    fn subset_pairs_meet_precondition() {
        let pairs = generate_subset_pairs(6, 3, AsymmetryKind::Interior).unwrap();
        assert_eq!(pairs.len(), 6);
        let (holds, checked) = subset_property_run(&pairs, AsymmetryKind::Interior).unwrap();
        assert_eq!(checked, 6);
        assert_eq!(holds, 6);
    }

    #[test]
    fn svg_is_well_formed() {
        let d = PlanarDomain::from_shape("d", StarShape::Disk { radius: 1.0 }, [0.0, 0.0], 64).unwrap();
        let mesh = crate::mesh::mesh_star_domain(&d, 0.3).unwrap();
        let res = crate::magfem::principal_eigenpair(&crate::magfem::assemble(&mesh, 1.0).unwrap(), 1e-8).unwrap();
        let top = res.modulus().iter().cloned().fold(0.0, f64::max);
        let svg = contour_svg(&res, &[0.5 * top]).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline"));
    }

    use crate::geom::PlanarDomain;
}
