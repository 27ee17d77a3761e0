//! Dataset generator integration: determinism, internal label consistency,
//! and trajectory shape.

use dens_core::data::{generate_dataset, lj_energy_forces, load_split, GenConfig, Split};

fn small_config(seed: u64) -> GenConfig {
    GenConfig {
        master_seed: seed,
        n_train: 12,
        n_val: 3,
        n_test: 3,
        ..Default::default()
    }
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("dens-data-{tag}-{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    dir
}

#[test]
fn regeneration_is_byte_identical() {
    let d1 = tmp_dir("regen1");
    let d2 = tmp_dir("regen2");
    generate_dataset(&small_config(7), &d1).unwrap();
    generate_dataset(&small_config(7), &d2).unwrap();
    for name in ["train.xyz", "val.xyz", "test.xyz", "manifest.toml"] {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical-seed runs");
    }
    let d3 = tmp_dir("regen3");
    generate_dataset(&small_config(8), &d3).unwrap();
    assert_ne!(
        std::fs::read(d1.join("train.xyz")).unwrap(),
        std::fs::read(d3.join("train.xyz")).unwrap(),
        "different seeds should differ"
    );
    for d in [d1, d2, d3] {
        std::fs::remove_dir_all(d).ok();
    }
}

#[test]
fn splits_load_with_validated_labels_and_monotone_energies() {
    let dir = tmp_dir("load");
    let cfg = small_config(3);
    generate_dataset(&cfg, &dir).unwrap();

    let mut seen_trajectories = std::collections::BTreeMap::new();
    for split in Split::all() {
        // load_split itself re-validates stored labels against the analytic
        // potential at 1e-10, and the manifest assignment.
        let (manifest, frames) = load_split(&dir, split).unwrap();
        assert_eq!(manifest.generator, cfg);
        assert!(!frames.is_empty());
        for f in &frames {
            seen_trajectories
                .entry(f.trajectory)
                .or_insert_with(std::collections::BTreeSet::new)
                .insert(split);
        }
        // Frame energies within a trajectory are non-increasing, and the
        // final frame is converged.
        let mut by_traj: std::collections::BTreeMap<usize, Vec<&dens_core::data::Structure>> =
            Default::default();
        for f in &frames {
            by_traj.entry(f.trajectory).or_default().push(f);
        }
        for (t, fs) in by_traj {
            for w in fs.windows(2) {
                assert!(
                    w[1].energy <= w[0].energy,
                    "trajectory {t}: energy increased between recorded frames"
                );
            }
            let last = fs.last().unwrap();
            let max_f = last
                .forces
                .iter()
                .map(|f| (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt())
                .fold(0.0, f64::max);
            assert!(max_f <= cfg.relax.f_max_stop, "trajectory {t}: final frame not converged");
        }
    }
    // Trajectory-level split disjointness.
    for (t, splits) in seen_trajectories {
        assert_eq!(splits.len(), 1, "trajectory {t} appears in {splits:?}");
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn forces_equal_negative_energy_gradient_on_stored_frames() {
    let dir = tmp_dir("fd");
    let cfg = small_config(5);
    generate_dataset(&cfg, &dir).unwrap();
    let (_, frames) = load_split(&dir, Split::Val).unwrap();
    let h = 1e-6;
    for s in frames.iter().take(4) {
        for i in 0..s.n_atoms() {
            for k in 0..3 {
                let mut p = s.positions.clone();
                p[i][k] += h;
                let (ep, _) = lj_energy_forces(&s.species, &p, &cfg.pair).unwrap();
                p[i][k] -= 2.0 * h;
                let (em, _) = lj_energy_forces(&s.species, &p, &cfg.pair).unwrap();
                let numeric = -(ep - em) / (2.0 * h);
                let rel = (s.forces[i][k] - numeric).abs() / numeric.abs().max(1.0);
                assert!(rel <= 1e-8, "frame {} atom {i}.{k}: rel {rel}", s.frame);
            }
        }
    }
    std::fs::remove_dir_all(dir).ok();
}
