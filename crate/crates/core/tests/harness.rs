use std::fs;
use std::path::Path;

use oam_qkd::harness::{analyze, export_csv, run_campaign, CampaignConfig, ConjugationMode, EnsembleStore};
use oam_qkd::quantum::{CrosstalkMatrix, EncodingSubspace};

/// Coarse, fast configuration: 128² grid at 5 cm with a 30 cm waist.
fn tiny_config() -> CampaignConfig {
    let mut c = CampaignConfig::desk();
    c.geometry.satellite_altitudes = vec![2e5, 3e5];
    c.geometry.zenith_angles = vec![0.0];
    c.optics.waist = 0.3;
    c.optics.aperture_radii = vec![1.0, 2.5];
    c.numerics.grid_size = 128;
    c.numerics.grid_spacing = 0.05;
    c.monte_carlo.realizations = 4;
    c.analysis.dimensions = vec![2, 3];
    c.analysis.misalignments = vec![0.0, 0.1];
    c.analysis.infidelities = vec![0.0, 0.1];
    c
}

fn vacuum_config() -> CampaignConfig {
    let mut c = tiny_config();
    c.numerics.turbulent = false;
    c.geometry.satellite_altitudes = vec![2e5];
    c.monte_carlo.realizations = 2;
    c
}

fn bytes(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap()
}

#[test]
fn campaign_is_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let summary = run_campaign(&config, &a).unwrap();
    assert_eq!(summary.written, 8);
    run_campaign(&config, &b).unwrap();
    assert_eq!(bytes(&a), bytes(&b));

    // Rerunning a complete store writes nothing.
    let again = run_campaign(&config, &a).unwrap();
    assert_eq!((again.written, again.skipped), (0, 8));

    // Interrupted mid-record: keep two full lines plus half of the next.
    let full = bytes(&a);
    let text = String::from_utf8(full.clone()).unwrap();
    let mut cut = 0;
    for _ in 0..3 {
        cut += text[cut..].find('\n').unwrap() + 1;
    }
    let partial_end = cut + (text[cut..].find('\n').unwrap() / 2);
    fs::write(&b, &full[..partial_end]).unwrap();
    let resumed = run_campaign(&config, &b).unwrap();
    assert_eq!(resumed.written, 6);
    assert_eq!(bytes(&b), full);
}

#[cfg(feature = "parallel")]
#[test]
fn store_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config();
    let run = |threads: usize, name: &str| {
        let path = dir.path().join(name);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_campaign(&config, &path)).unwrap();
        bytes(&path)
    };
    assert_eq!(run(1, "one.jsonl"), run(3, "three.jsonl"));
}

#[test]
fn store_rejects_a_different_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let config = vacuum_config();
    run_campaign(&config, &path).unwrap();
    let mut other = config.clone();
    other.monte_carlo.master_seed += 1;
    assert!(run_campaign(&other, &path).is_err());
    // More realizations of the same campaign extend the store.
    let mut more = config.clone();
    more.monte_carlo.realizations = 3;
    assert_eq!(run_campaign(&more, &path).unwrap().written, 1);
}

#[test]
fn vacuum_store_is_the_identity_channel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vac.jsonl");
    let config = vacuum_config();
    run_campaign(&config, &path).unwrap();
    let store = EnsembleStore::open(&path).unwrap();
    let identity = CrosstalkMatrix::identity(EncodingSubspace::full());
    for c in store.ensemble(0, 2.5, 0.0).unwrap() {
        assert!((c.matrix() - identity.matrix()).camax() < 1e-3);
    }
}

#[test]
fn vacuum_analysis_gives_perfect_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vac.jsonl");
    let config = vacuum_config();
    run_campaign(&config, &path).unwrap();
    let before = bytes(&path);
    let store = EnsembleStore::open(&path).unwrap();
    let records = analyze(&store, &config).unwrap();
    assert_eq!(bytes(&path), before, "analysis must not touch the store");

    let r = records
        .iter()
        .find(|r| r.d == 2 && r.aperture_radius == 2.5 && r.misalignment == 0.0 && r.infidelity == 0.0 && !r.conjugated)
        .unwrap();
    assert!(r.q < 1e-6, "Q = {}", r.q);
    assert!((r.t - 1.0).abs() < 1e-6, "T = {}", r.t);
    assert!((r.k.unwrap() - 1.0).abs() < 1e-4, "K = {:?}", r.k);

    for r in records.iter().filter(|r| r.conjugated && r.misalignment == 0.0 && r.infidelity == 0.0) {
        assert!(r.q < 1e-9, "conjugated Q = {} at d={} r_a={}", r.q, r.d, r.aperture_radius);
    }
}

#[test]
fn turbulent_conjugation_removes_all_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let mut config = tiny_config();
    config.analysis.conjugation = ConjugationMode::Both;
    run_campaign(&config, &path).unwrap();
    let records = analyze(&EnsembleStore::open(&path).unwrap(), &config).unwrap();
    // 2 geometries x 2 apertures x 2 dims x 2 misalignments x 2 infidelities x 2 variants.
    assert_eq!(records.len(), 64);
    for r in records.iter().filter(|r| r.conjugated && r.misalignment == 0.0 && r.infidelity == 0.0) {
        assert!(r.q < 1e-9, "Q = {}", r.q);
        assert!(r.t <= 1.0);
    }
    let csv_path = dir.path().join("r.csv");
    export_csv(&records, &csv_path).unwrap();
    let text = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), records.len() + 1);
    assert!(text.starts_with("satellite_altitude,"));
}

#[test]
fn analysis_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let config = tiny_config();
    run_campaign(&config, &path).unwrap();
    let store = EnsembleStore::open(&path).unwrap();
    let strip = |mut v: Vec<oam_qkd::harness::ResultRecord>| {
        v.iter_mut().for_each(|r| r.wall_time_s = 0.0);
        v
    };
    assert_eq!(strip(analyze(&store, &config).unwrap()), strip(analyze(&store, &config).unwrap()));
}
