mod common;

use nalgebra::DMatrix;
use smoothmc::indexspace::{
    adaptive_adetf, ade, adetf, adetf_candidates, adetf_transformed, beta_psi, dependence_score, equal_count_bins,
    extract_subspace, stretch_matrix, test_function_gradient, AdaptiveConfig, AdetfConfig, CandidateSet,
    TestFunction,
};
use smoothmc::kernels::default_bandwidth_adetf;
use smoothmc::linalg::{is_projector, subspace_error};
use smoothmc::simbench::{generate, ModelKind, ModelSpec};
use smoothmc::stats::median;
use smoothmc::{Error, KernelSpec, Sample, SubspaceEstimate};

#[test]
fn test_function_gradient_cases() {
    let tf = TestFunction::new(vec![0.5, -0.5], 0.8).unwrap();
    assert_eq!(test_function_gradient(&tf, &[0.5, -0.5]), vec![0.0, 0.0]);
    assert_eq!(test_function_gradient(&tf, &[1.5, -0.5]), vec![0.0, 0.0]);
    assert_eq!(test_function_gradient(&tf, &[1.3, -0.5]), vec![0.0, 0.0]);
    assert_eq!(tf.value(&[0.5, -0.5]), 1.0);
    assert!(TestFunction::new(vec![0.0], 0.0).is_err());
}

#[test]
fn test_function_gradient_matches_finite_differences() {
    let tf = TestFunction::new(vec![0.2, -0.1, 0.3], 1.5).unwrap();
    let step = 1e-5;
    for x in common::normal_points(100, 3, 3).chunks_exact(3) {
        let g = test_function_gradient(&tf, x);
        let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-4);
        for c in 0..3 {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[c] += step;
            dn[c] -= step;
            let fd = (tf.value(&up) - tf.value(&dn)) / (2.0 * step);
            assert!((fd - g[c]).abs() <= 1e-6 * scale, "{x:?}: {fd} vs {}", g[c]);
        }
    }
}

#[test]
fn beta_psi_trivial_cases() {
    let x = common::normal_sample(100, 2, 4);
    let k = KernelSpec::epanechnikov(2);
    let bw = smoothmc::Bandwidth::new(0.8).unwrap();
    let zero = x.clone().with_response(vec![0.0; 100]).unwrap();
    let tf = TestFunction::new(vec![0.0, 0.0], 1.0).unwrap();
    assert_eq!(beta_psi(&zero, &tf, &k, bw).unwrap(), vec![0.0, 0.0]);
    let y: Vec<f64> = x.rows().map(|r| r[0]).collect();
    let s = x.with_response(y).unwrap();
    let far = TestFunction::new(vec![100.0, 100.0], 1.0).unwrap();
    assert_eq!(beta_psi(&s, &far, &k, bw).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn beta_psi_collinear_with_linear_index() {
    let x = common::normal_sample(2000, 2, 5);
    let beta0 = [0.6, 0.8];
    let y: Vec<f64> = x.rows().map(|r| beta0[0] * r[0] + beta0[1] * r[1]).collect();
    let s = x.with_response(y).unwrap();
    let k = KernelSpec::epanechnikov(2);
    let bw = default_bandwidth_adetf(s.n(), 2, s.spread()).unwrap();
    let tf = TestFunction::new(vec![0.0, 0.0], s.spread()).unwrap();
    let b = beta_psi(&s, &tf, &k, bw).unwrap();
    let angle = common::line_angle_deg(&b, &beta0);
    assert!(angle < 5.0, "angle {angle} deg");
    // integration by parts: the direction is -beta0
    assert!(b[0] * beta0[0] + b[1] * beta0[1] < 0.0);
}

#[test]
fn dependence_score_cases() {
    let y: Vec<f64> = (0..16).map(|i| i as f64).collect();
    assert!((dependence_score(&y, &y, 4).unwrap() - 3.0).abs() < 1e-12);
    // balanced table: z cycles through its bins within every y bin
    let z: Vec<f64> = (0..16).map(|i| (i % 4) as f64 * 4.0 + (i / 4) as f64).collect();
    assert!(dependence_score(&y, &z, 4).unwrap().abs() < 1e-12);
    assert_eq!(dependence_score(&y, &[1.0; 16], 4).unwrap(), 0.0);
    assert!(dependence_score(&y, &y, 1).is_err());
    assert!(dependence_score(&y[..3], &y[..3], 4).is_err());
    // rank based: invariant under strictly monotone maps
    let w: Vec<f64> = common::normal_points(50, 1, 6);
    let v: Vec<f64> = w.iter().zip(common::normal_points(50, 1, 7)).map(|(a, b)| a + 0.5 * b).collect();
    let base = dependence_score(&w, &v, 5).unwrap();
    let mapped_w: Vec<f64> = w.iter().map(|t| t.exp()).collect();
    let mapped_v: Vec<f64> = v.iter().map(|t| 3.0 * t.powi(3) - 1.0).collect();
    assert_eq!(dependence_score(&mapped_w, &mapped_v, 5).unwrap(), base);
}

#[test]
fn equal_count_binning() {
    assert_eq!(equal_count_bins(&[3.0, 1.0, 2.0, 0.0, 5.0, 4.0, 6.0], 3), vec![1, 0, 1, 0, 2, 2, 2]);
    // ties broken by index
    assert_eq!(equal_count_bins(&[1.0, 1.0, 1.0, 1.0], 2), vec![0, 0, 1, 1]);
}

fn index_sample(n: usize, d: usize, seed: u64) -> Sample {
    let x = common::normal_sample(n, d, seed);
    let y: Vec<f64> = x.rows().map(|r| (r[0] + 0.5 * r[1]).powi(2) + 0.3 * r[2]).collect();
    x.with_response(y).unwrap()
}

#[test]
fn rotation_equivariance() {
    let s = index_sample(150, 4, 8);
    let q = common::random_orthogonal(4, 9);
    let rotated = s.map_linear(&q).unwrap();
    let cfg = AdetfConfig::default();
    let a = adetf(&s, 2, &cfg).unwrap();
    let b = adetf(&rotated, 2, &cfg).unwrap();
    let expected = &q * a.projector() * q.transpose();
    let diff = (b.projector() - expected).amax();
    assert!(diff < 1e-8, "max deviation {diff}");
}

#[test]
fn projector_laws() {
    let s = index_sample(120, 5, 10);
    for p in 1..=3 {
        let est = adetf(&s, p, &AdetfConfig::default()).unwrap();
        let proj = est.projector();
        assert!(is_projector(proj, 1e-10));
        assert!((proj.trace() - p as f64).abs() < 1e-10);
        let gram = est.basis().transpose() * est.basis();
        assert!((gram - DMatrix::<f64>::identity(p, p)).amax() < 1e-10);
        let ev = est.eigenvalues();
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }
    assert!(matches!(adetf(&s, 0, &AdetfConfig::default()), Err(Error::InvalidArgument(_))));
    assert!(matches!(adetf(&s, 6, &AdetfConfig::default()), Err(Error::InvalidArgument(_))));
    let tiny = index_sample(8, 3, 1);
    assert!(adetf(&tiny, 1, &AdetfConfig::default()).is_err());
}

#[test]
fn pca_matches_jacobi_oracle() {
    let d = 5;
    let pts = common::normal_points(12 * d, 1, 11);
    let betas = DMatrix::from_row_slice(12, d, &pts);
    let design = common::normal_sample(40, d, 12);
    let y: Vec<f64> = design.rows().map(|r| r[0] * r[1]).collect();
    let cands = CandidateSet::score_and_select(betas, &design, &y, 4, 7).unwrap();
    let m = cands.outer_product_sum();
    let est = extract_subspace(&cands, 3).unwrap();
    let (values, vectors) = common::jacobi_eigen(&m);
    for (a, b) in est.eigenvalues().iter().zip(&values) {
        assert!((a - b).abs() < 1e-10 * values[0], "{a} vs {b}");
    }
    let oracle = vectors.columns(0, 3).into_owned();
    let p_oracle = &oracle * oracle.transpose();
    assert!((est.projector() - p_oracle).amax() < 1e-10);
    // a hand-built rank-one set
    let e1 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let set = CandidateSet { betas: e1, scores: vec![1.0; 3], selected: vec![0, 1, 2] };
    let est = extract_subspace(&set, 1).unwrap();
    assert_eq!(est.basis().column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
    // {e1, e2} span the plane
    let plane = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let set = CandidateSet { betas: plane, scores: vec![1.0; 2], selected: vec![0, 1] };
    let est = extract_subspace(&set, 2).unwrap();
    assert!(subspace_error(est.projector(), &DMatrix::identity(2, 2)).unwrap() < 1e-15);
}

#[test]
fn selection_is_scale_invariant() {
    let s = index_sample(100, 3, 13);
    let cands = adetf_candidates(&s, &AdetfConfig::default()).unwrap();
    assert_eq!(cands.selected.len(), 10);
    for factor in [1e-3, 7.5, 1e4] {
        let scaled = CandidateSet::score_and_select(
            &cands.betas * factor,
            &s,
            s.response().unwrap(),
            10,
            10,
        )
        .unwrap();
        assert_eq!(scaled.selected, cands.selected);
    }
}

#[test]
fn identity_transform_reproduces_plain() {
    let s = index_sample(100, 3, 14);
    let cfg = AdetfConfig::default();
    let plain = adetf(&s, 1, &cfg).unwrap();
    let same = adetf_transformed(&s, &DMatrix::identity(3, 3), 1, &cfg, 1.0).unwrap();
    assert_eq!(plain, same);
    let b = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    assert!(matches!(stretch_matrix(&b, 0.0), Err(Error::InvalidArgument(_))));
    let cfg = AdaptiveConfig { eps: 0.0, ..AdaptiveConfig::default() };
    assert!(matches!(adaptive_adetf(&s, 1, &cfg), Err(Error::InvalidArgument(_))));
}

#[test]
fn ade_cases() {
    let x = common::normal_sample(2000, 2, 15);
    let k = KernelSpec::epanechnikov(2);
    let bw = default_bandwidth_adetf(2000, 2, x.spread()).unwrap();
    let flat = x.clone().with_response(vec![1.0; 2000]).unwrap();
    let b = ade(&flat, &k, bw, 0.0).unwrap();
    let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 0.1, "norm {norm}");
    let zero = x.with_response(vec![0.0; 2000]).unwrap();
    assert_eq!(ade(&zero, &k, bw, 0.0).unwrap(), vec![0.0, 0.0]);
    let far = Sample::new(vec![0.0, 0.0, 10.0, 10.0], 2, Some(vec![1.0, 2.0])).unwrap();
    assert!(matches!(ade(&far, &k, bw, 0.0), Err(Error::EstimationFailed(_))));
}

#[test]
fn adaptive_not_worse_on_model_iv() {
    let spec = ModelSpec::new(ModelKind::M4, 6, 200, 0.5).unwrap();
    let truth = spec.true_projector();
    let cfg = AdaptiveConfig::default();
    let (mut plain, mut adaptive) = (Vec::new(), Vec::new());
    for seed in 0..100 {
        let data = generate(&spec, 1000 + seed);
        plain.push(adetf(&data, 2, &cfg.base).unwrap().error_against(&truth).unwrap());
        adaptive.push(adaptive_adetf(&data, 2, &cfg).unwrap().error_against(&truth).unwrap());
    }
    let (mp, ma) = (median(&plain), median(&adaptive));
    assert!(ma <= mp, "adaptive {ma} vs plain {mp}");
}

#[test]
fn subspace_error_cases() {
    let e1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let e2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    assert!((subspace_error(&e1, &e2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(subspace_error(&e1, &e1).unwrap(), 0.0);
    // complementary subspaces of R^4 with p = d - p = 2
    let a = SubspaceEstimate::from_basis(&DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]), vec![]).unwrap();
    let b = SubspaceEstimate::from_basis(&DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]), vec![]).unwrap();
    assert!((subspace_error(a.projector(), b.projector()).unwrap() - 2.0).abs() < 1e-15);
    assert!(subspace_error(&(e1.clone() * 2.0), &e1).is_err());
}
