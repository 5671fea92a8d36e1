mod common;

use smoothmc::rng::rng_from_seed;
use smoothmc::simbench::{
    generate_with_rng, median_error, paired_comparison, read_results_csv, replicate_data, run_benchmark,
    summarize, write_results_csv, write_summary_csv, BenchConfig, GridSpec, Method, ModelKind, ModelSpec,
    ReplicationResult,
};
use smoothmc::Error;

fn index_config(replications: usize) -> BenchConfig {
    BenchConfig::new(
        vec![GridSpec {
            model: ModelKind::M2,
            methods: vec![Method::Adetf, Method::Sir, Method::Save, Method::Ade],
            n: vec![60],
            d: vec![3],
            param: vec![0.0, 1.0],
        }],
        replications,
        3,
    )
}

#[test]
fn model_values() {
    let m1 = ModelSpec::new(ModelKind::M1, 2, 1, 0.0).unwrap();
    let b: Vec<f64> = m1.beta.column(0).iter().copied().collect();
    assert!((m1.link(&b) - 1f64.sin()).abs() < 1e-15);
    assert!((m1.link(&b) - 0.84147).abs() < 1e-5);
    let m2 = ModelSpec::new(ModelKind::M2, 2, 1, 0.0).unwrap();
    assert_eq!(m2.link(&[0.0, 5.0]), 1.0);
    let m4 = ModelSpec::new(ModelKind::M4, 2, 1, 0.5).unwrap();
    assert_eq!(m4.link(&[0.0, -1.0]), 0.0);
    assert!(ModelSpec::new(ModelKind::M4, 1, 10, 0.5).is_err());
    assert!(ModelSpec::new(ModelKind::M3, 2, 10, 0.0).is_err());
}

#[test]
fn response_reconstructs_from_noise() {
    for kind in [ModelKind::M1, ModelKind::M2, ModelKind::M3, ModelKind::M4] {
        let spec = ModelSpec::new(kind, 4, 200, kind.default_param()).unwrap();
        let data = generate_with_rng(&spec, &mut rng_from_seed(9));
        let y = data.sample.response().unwrap();
        for (i, x) in data.sample.rows().enumerate() {
            assert_eq!(y[i].to_bits(), (spec.link(x) + spec.noise_sd * data.noise[i]).to_bits());
        }
    }
}

#[test]
fn paired_datasets_share_checksum() {
    let config = index_config(3);
    for cell in config.cells() {
        for r in 0..3 {
            let (s1, a) = replicate_data(&cell, 42, r);
            let (s2, b) = replicate_data(&cell, 42, r);
            assert_eq!(s1, s2);
            assert_eq!(a.checksum(), b.checksum());
        }
    }
    let results = run_benchmark(&config, 42).unwrap();
    // every method of a replicate records the same seed
    for chunk in results.chunks(4) {
        assert!(chunk.iter().all(|r| r.seed == chunk[0].seed && r.replicate == chunk[0].replicate));
    }
}

#[test]
fn seed_determinism_byte_exact() {
    let config = index_config(4);
    let csv = |seed: u64, threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let results = pool.install(|| run_benchmark(&config, seed)).unwrap();
        let mut out = Vec::new();
        write_results_csv(&mut out, &results).unwrap();
        out
    };
    let a = csv(5, 1);
    assert_eq!(a, csv(5, 1));
    assert_eq!(a, csv(5, 4));
    assert_ne!(a, csv(6, 1));
    let back = read_results_csv(a.as_slice()).unwrap();
    assert_eq!(back.len(), 2 * 4 * 4);
    let mut again = Vec::new();
    write_results_csv(&mut again, &back).unwrap();
    assert_eq!(a, again);
}

#[test]
fn zero_replications_give_empty_stream() {
    assert!(run_benchmark(&index_config(0), 1).unwrap().is_empty());
}

#[test]
fn config_parsing() {
    let text = r#"{ "replications": 2, "grid": [ { "model": "m1", "methods": ["adetf", "save"], "n": [50], "d": [3] } ] }"#;
    let cfg = BenchConfig::from_json(text).unwrap();
    assert_eq!(cfg.cells().len(), 1);
    assert_eq!(cfg.seed, 0);
    let unknown = r#"{ "grid": [], "bogus": 1 }"#;
    assert!(matches!(BenchConfig::from_json(unknown), Err(Error::Config(_))));
    let mismatch = r#"{ "grid": [ { "model": "m1", "methods": ["ksbc"], "n": [50], "d": [3] } ] }"#;
    assert!(matches!(BenchConfig::from_json(mismatch), Err(Error::Config(_))));
    for name in ["fig0", "fig1", "fig2", "fig3", "fig4"] {
        let path = format!("{}/examples/configs/{name}.json", env!("CARGO_MANIFEST_DIR"));
        BenchConfig::from_path(path.as_ref()).unwrap();
    }
}

fn result(method: &str, replicate: usize, error: Option<f64>) -> ReplicationResult {
    ReplicationResult {
        model: "m1".into(),
        method: method.into(),
        n: 10,
        d: 2,
        param: 0.0,
        replicate,
        seed: replicate as u64,
        error,
        ms: None,
    }
}

#[test]
fn summary_statistics() {
    let one = summarize(&[result("adetf", 0, Some(0.5))]);
    assert_eq!((one[0].min, one[0].q1, one[0].median, one[0].q3, one[0].max), (0.5, 0.5, 0.5, 0.5, 0.5));
    let five: Vec<_> = (0..5).map(|r| result("sir", r, Some(r as f64 + 1.0))).collect();
    let row = &summarize(&five)[0];
    assert_eq!((row.q1, row.median, row.q3, row.mean), (2.0, 3.0, 4.0, 3.0));
    assert!(summarize(&[]).is_empty());
    let mut with_gap = five.clone();
    with_gap.push(result("sir", 5, None));
    let row = &summarize(&with_gap)[0];
    assert_eq!((row.count, row.missing), (5, 1));
    assert_eq!(median_error(&summarize(&five), "m1", "sir", 10, 2, 0.0), Some(3.0));
    let mut out = Vec::new();
    write_summary_csv(&mut out, &summarize(&five)).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
}

#[test]
fn paired_sign_counts() {
    let mut rs = Vec::new();
    for (r, (a, b)) in [(0.1, 0.2), (0.3, 0.2), (0.1, 0.5), (0.4, 0.4)].into_iter().enumerate() {
        rs.push(result("adetf", r, Some(a)));
        rs.push(result("ade", r, Some(b)));
    }
    let cmp = &paired_comparison(&rs, "adetf", "ade")[0];
    assert_eq!((cmp.pairs, cmp.first_better, cmp.second_better, cmp.ties), (4, 2, 1, 1));
}
