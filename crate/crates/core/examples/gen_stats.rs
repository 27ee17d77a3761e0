// scratch: frame-count stats + timing for the default manifest
use dens_core::data::{generate_dataset, load_split, GenConfig, Split};
fn main() {
    let dir = std::path::PathBuf::from("/tmp/dens-default-probe");
    std::fs::remove_dir_all(&dir).ok();
    let cfg = GenConfig::default();
    let t0 = std::time::Instant::now();
    let m = generate_dataset(&cfg, &dir).unwrap();
    let gen_t = t0.elapsed().as_secs_f64();
    let t1 = std::time::Instant::now();
    let (_, train) = load_split(&dir, Split::Train).unwrap();
    let load_t = t1.elapsed().as_secs_f64();
    let total: usize = m.frame_counts.values().sum();
    println!("gen {:.1}s, load+validate train {:.1}s, frames {:?} total {}", gen_t, load_t, m.frame_counts, total);
    // frames per trajectory distribution
    let mut per: std::collections::BTreeMap<usize, usize> = Default::default();
    for f in &train { *per.entry(f.trajectory).or_default() += 1; }
    let counts: Vec<usize> = per.values().copied().collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let mn = counts.iter().min().unwrap();
    let mx = counts.iter().max().unwrap();
    println!("train frames/traj: mean {:.1}, min {}, max {}", mean, mn, mx);
    // energy stats
    let es: Vec<f64> = train.iter().map(|s| s.energy).collect();
    let mu = es.iter().sum::<f64>() / es.len() as f64;
    let sd = (es.iter().map(|e| (e-mu)*(e-mu)).sum::<f64>() / es.len() as f64).sqrt();
    println!("energy mean {:.2} std {:.2}, min {:.2} max {:.2}", mu, sd,
        es.iter().cloned().fold(f64::INFINITY, f64::min), es.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let fs: Vec<f64> = train.iter().flat_map(|s| s.forces.iter().flatten().copied()).collect();
    let fmu = fs.iter().sum::<f64>() / fs.len() as f64;
    let fsd = (fs.iter().map(|v| (v-fmu)*(v-fmu)).sum::<f64>() / fs.len() as f64).sqrt();
    println!("force comp mean {:.3} std {:.3}", fmu, fsd);
}
