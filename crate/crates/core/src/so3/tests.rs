use rand::Rng;
use rand_distr::StandardNormal;

use super::cg::{coupling, coupling_matrix};
use super::*;
use crate::autodiff::{Tape, Tensor};
use crate::rng::{substream, Stream};

fn rand_unit(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn randn_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// -- spherical harmonics ----------------------------------------------------

#[test]
fn sph_degree0_is_one() {
    assert_eq!(real_sph_harm(0, [0.0, 0.0, 1.0]).unwrap(), vec![1.0]);
}

#[test]
fn sph_degree1_is_identity_on_unit_vectors() {
    let y = real_sph_harm(1, [0.0, 0.0, 1.0]).unwrap();
    assert_eq!(y, vec![0.0, 0.0, 1.0]);
    let mut rng = substream(0, Stream::Check { key: 10 });
    let u = rand_unit(&mut rng);
    let y = real_sph_harm(1, u).unwrap();
    assert!(max_abs_diff(&y, &u) < 1e-15);
}

#[test]
fn sph_rejects_non_unit() {
    assert!(matches!(real_sph_harm(2, [0.0, 0.0, 2.0]), Err(So3Error::NotUnit(_))));
}

#[test]
fn sph_unit_norm_all_degrees() {
    let mut rng = substream(0, Stream::Check { key: 11 });
    for _ in 0..20 {
        let u = rand_unit(&mut rng);
        for l in 0..=4 {
            let y = real_sph_harm(l, u).unwrap();
            let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-12, "degree {l}: norm {n}");
        }
    }
}

#[test]
fn sph_equivariance_under_wigner_d() {
    let mut rng = substream(0, Stream::Check { key: 12 });
    for _ in 0..20 {
        let u = rand_unit(&mut rng);
        let r = Rotation::random(&mut rng);
        for l in [2usize, 3] {
            let y_rot_arg = real_sph_harm(l, r.apply(u)).unwrap();
            let y = real_sph_harm(l, u).unwrap();
            let d = wigner_d(l, &r).unwrap();
            let m = 2 * l + 1;
            let mut dy = vec![0.0; m];
            for i in 0..m {
                for j in 0..m {
                    dy[i] += d.data[i * m + j] * y[j];
                }
            }
            assert!(max_abs_diff(&y_rot_arg, &dy) <= 1e-10);
        }
    }
}

// -- Wigner-D ---------------------------------------------------------------

#[test]
fn wigner_identity_rotation_gives_identity_matrix() {
    for l in 0..=4 {
        let d = wigner_d(l, &Rotation::identity()).unwrap();
        let m = 2 * l + 1;
        for i in 0..m {
            for j in 0..m {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d.data[i * m + j] - expect).abs() <= 1e-12, "l={l}");
            }
        }
    }
}

#[test]
fn wigner_degree1_is_rotation_matrix() {
    let mut rng = substream(0, Stream::Check { key: 13 });
    let r = Rotation::random(&mut rng);
    let d = wigner_d(1, &r).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(d.data[i * 3 + j], r.matrix()[i][j]);
        }
    }
}

#[test]
fn wigner_homomorphism_and_orthogonality() {
    let mut rng = substream(0, Stream::Check { key: 14 });
    for _ in 0..5 {
        let r1 = Rotation::random(&mut rng);
        let r2 = Rotation::random(&mut rng);
        let r12 = r1.compose(&r2);
        for l in 0..=4 {
            let m = 2 * l + 1;
            let d1 = wigner_d(l, &r1).unwrap().data;
            let d2 = wigner_d(l, &r2).unwrap().data;
            let d12 = wigner_d(l, &r12).unwrap().data;
            // homomorphism: D(r1 r2) = D(r1) D(r2)
            let mut prod = vec![0.0; m * m];
            for i in 0..m {
                for k in 0..m {
                    let v = d1[i * m + k];
                    for j in 0..m {
                        prod[i * m + j] += v * d2[k * m + j];
                    }
                }
            }
            assert!(max_abs_diff(&prod, &d12) <= 1e-10, "homomorphism failed at l={l}");
            // orthogonality: D^T D = I
            let mut gram = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    let mut acc = 0.0;
                    for k in 0..m {
                        acc += d1[k * m + i] * d1[k * m + j];
                    }
                    gram[i * m + j] = acc;
                }
            }
            for i in 0..m {
                for j in 0..m {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[i * m + j] - expect).abs() <= 1e-10, "orthogonality failed at l={l}");
                }
            }
        }
    }
}

#[test]
fn wigner_rejects_invalid_rotation() {
    let bad = Rotation::from_matrix([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    assert!(bad.is_err());
}

// -- Clebsch-Gordan couplings -------------------------------------------------

#[test]
fn cg_110_is_scaled_kronecker_delta() {
    let k = coupling(1, 1, 0);
    let dense = k.to_dense();
    let s = 1.0 / 3.0_f64.sqrt();
    for a in 0..3 {
        for b in 0..3 {
            let expect = if a == b { s } else { 0.0 };
            assert!((dense[a * 3 + b] - expect).abs() <= 1e-10, "K[{a},{b},0]");
        }
    }
}

#[test]
fn cg_111_is_scaled_levi_civita() {
    let k = coupling(1, 1, 1);
    let dense = k.to_dense();
    let s = 1.0 / 6.0_f64.sqrt();
    let eps = |a: usize, b: usize, c: usize| -> f64 {
        match (a, b, c) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let expect = s * eps(a, b, c);
                let got = dense[(a * 3 + b) * 3 + c];
                assert!((got - expect).abs() <= 1e-10, "K[{a},{b},{c}] = {got}, expected {expect}");
            }
        }
    }
}

#[test]
fn cg_selection_rule_gives_zeros() {
    let k = coupling(1, 1, 3);
    assert!(k.nnz.is_empty());
}

#[test]
fn cg_unit_frobenius_norm() {
    for &(l1, l2, l3) in &[(1, 1, 2), (2, 1, 2), (2, 2, 2), (2, 2, 4), (3, 1, 4)] {
        let k = coupling(l1, l2, l3);
        let f: f64 = k.nnz.iter().map(|&(_, _, _, v)| v * v).sum::<f64>().sqrt();
        assert!((f - 1.0).abs() <= 1e-10, "({l1},{l2},{l3}): Frobenius {f}");
    }
}

/// The defining identity, checked over 20 random rotations:
/// sum_ab K[a,b,c] (D1 u)_a (D2 v)_b = sum_c' D3[c,c'] (K(u ⊗ v))_c'
#[test]
fn cg_equivariance_identity() {
    let mut rng = substream(0, Stream::Check { key: 15 });
    let triples: Vec<(usize, usize, usize)> = allowed_paths(3, 3, 4)
        .into_iter()
        .filter(|&(l1, l2, _)| l1 <= 3 && l2 <= 3)
        .collect();
    for &(l1, l2, l3) in &triples {
        let k = coupling(l1, l2, l3);
        let (d1, d2, d3) = k.dims;
        for _ in 0..20 {
            let u = randn_vec(&mut rng, d1);
            let v = randn_vec(&mut rng, d2);
            let r = Rotation::random(&mut rng);
            let w1 = wigner_d(l1, &r).unwrap().data;
            let w2 = wigner_d(l2, &r).unwrap().data;
            let w3 = wigner_d(l3, &r).unwrap().data;
            let du: Vec<f64> = (0..d1)
                .map(|i| (0..d1).map(|j| w1[i * d1 + j] * u[j]).sum())
                .collect();
            let dv: Vec<f64> = (0..d2)
                .map(|i| (0..d2).map(|j| w2[i * d2 + j] * v[j]).sum())
                .collect();
            let contract = |x: &[f64], y: &[f64]| -> Vec<f64> {
                let mut out = vec![0.0; d3];
                for &(a, b, c, val) in &k.nnz {
                    out[c as usize] += val * x[a as usize] * y[b as usize];
                }
                out
            };
            let lhs = contract(&du, &dv);
            let base = contract(&u, &v);
            let rhs: Vec<f64> = (0..d3)
                .map(|i| (0..d3).map(|j| w3[i * d3 + j] * base[j]).sum())
                .collect();
            assert!(
                max_abs_diff(&lhs, &rhs) <= 1e-10,
                "identity failed for ({l1},{l2},{l3})"
            );
        }
    }
}

/// Coupling columns are orthogonal with equal norms (Schur), so the
/// restriction used by wigner_d is well-posed.
#[test]
fn cg_columns_orthonormal_after_rescale() {
    for &(l1, l2, l3) in &[(1, 1, 2), (2, 1, 3), (2, 2, 2), (3, 1, 4)] {
        let k = coupling(l1, l2, l3);
        let m = coupling_matrix(&k) * ((2 * l3 + 1) as f64).sqrt();
        let gram = m.transpose() * &m;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[(i, j)] - expect).abs() <= 1e-10,
                    "({l1},{l2},{l3}) gram[{i},{j}] = {}",
                    gram[(i, j)]
                );
            }
        }
    }
}

// -- rotate_feature -----------------------------------------------------------

fn random_feature(rng: &mut impl Rng, layout: &IrrepsLayout, nodes: usize) -> IrrepsFeature {
    let data = Tensor::new(vec![nodes, layout.width()], randn_vec(rng, nodes * layout.width()));
    IrrepsFeature::new(layout.clone(), data).unwrap()
}

#[test]
fn rotate_feature_identity_is_noop() {
    let mut rng = substream(0, Stream::Check { key: 16 });
    let layout = IrrepsLayout::uniform(2, 3);
    let x = random_feature(&mut rng, &layout, 4);
    let y = rotate_feature(&x, &Rotation::identity());
    assert!(max_abs_diff(&x.data.data, &y.data.data) <= 1e-12);
}

#[test]
fn rotate_feature_scalars_invariant() {
    let mut rng = substream(0, Stream::Check { key: 17 });
    let layout = IrrepsLayout::uniform(0, 5);
    let x = random_feature(&mut rng, &layout, 3);
    let r = Rotation::random(&mut rng);
    let y = rotate_feature(&x, &r);
    assert_eq!(x.data.data, y.data.data);
}

#[test]
fn rotate_feature_inverse_roundtrip() {
    let mut rng = substream(0, Stream::Check { key: 18 });
    let layout = IrrepsLayout::uniform(3, 2);
    let x = random_feature(&mut rng, &layout, 5);
    let r = Rotation::random(&mut rng);
    let y = rotate_feature(&rotate_feature(&x, &r), &r.inverse());
    assert!(max_abs_diff(&x.data.data, &y.data.data) <= 1e-12);
}

// -- equivariance harness ------------------------------------------------------

/// max over >=20 random (x, R) pairs of |op(rotate(x)) - rotate(op(x))|.
fn equivariance_err(
    layout_in: &IrrepsLayout,
    layout_out: &IrrepsLayout,
    key: u64,
    mut op: impl FnMut(&IrrepsFeature) -> IrrepsFeature,
) -> f64 {
    let mut rng = substream(0, Stream::Check { key });
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = random_feature(&mut rng, layout_in, 3);
        let r = Rotation::random(&mut rng);
        let op_then_rot = rotate_feature(&op(&x), &r);
        let rot_then_op = op(&rotate_feature(&x, &r));
        assert_eq!(op_then_rot.layout, *layout_out);
        worst = worst.max(max_abs_diff(&op_then_rot.data.data, &rot_then_op.data.data));
    }
    worst
}

// -- so3_linear ---------------------------------------------------------------

fn run_so3_linear(spec: &So3LinearSpec, weights: &[Tensor], bias: Option<&Tensor>, x: &IrrepsFeature) -> IrrepsFeature {
    let mut tape = Tape::new();
    let staged = StagedSo3Linear {
        weights: weights.iter().map(|w| tape.constant(w)).collect(),
        bias: bias.map(|b| tape.constant(b)),
    };
    let xid = tape.constant(&x.data);
    let out = so3_linear(&mut tape, spec, &staged, xid).unwrap();
    IrrepsFeature::new(spec.output.clone(), tape.to_tensor(out)).unwrap()
}

#[test]
fn so3_linear_identity_weights_are_noop() {
    let layout = IrrepsLayout::uniform(2, 3);
    let spec = So3LinearSpec::new(layout.clone(), layout.clone(), true).unwrap();
    let weights: Vec<Tensor> = (0..=2)
        .map(|_| {
            let mut eye = vec![0.0; 9];
            for i in 0..3 {
                eye[i * 3 + i] = 1.0;
            }
            Tensor::new(vec![3, 3], eye)
        })
        .collect();
    let bias = Tensor::zeros(vec![3]);
    let mut rng = substream(0, Stream::Check { key: 19 });
    let x = random_feature(&mut rng, &layout, 4);
    let y = run_so3_linear(&spec, &weights, Some(&bias), &x);
    assert!(max_abs_diff(&x.data.data, &y.data.data) <= 1e-14);
}

#[test]
fn so3_linear_scales_degree1() {
    // Single degree-1 channel, weight [[2.0]]: output doubles the vector.
    let layout = IrrepsLayout::new(vec![0, 1]);
    let spec = So3LinearSpec::new(layout.clone(), layout.clone(), false).unwrap();
    let w = Tensor::new(vec![1, 1], vec![2.0]);
    let f = IrrepsFeature::new(
        layout.clone(),
        Tensor::new(vec![1, 3], vec![0.5, -1.0, 2.0]),
    )
    .unwrap();
    let y = run_so3_linear(&spec, &[w], None, &f);
    assert_eq!(y.data.data, vec![1.0, -2.0, 4.0]);
}

#[test]
fn so3_linear_commutes_with_rotation() {
    let mut rng = substream(0, Stream::Check { key: 20 });
    let inp = IrrepsLayout::uniform(2, 3);
    let outp = IrrepsLayout::uniform(2, 2);
    let spec = So3LinearSpec::new(inp.clone(), outp.clone(), true).unwrap();
    let weights: Vec<Tensor> = spec
        .weight_shapes()
        .iter()
        .map(|&(_, co, ci)| Tensor::new(vec![co, ci], randn_vec(&mut rng, co * ci)))
        .collect();
    let bias = Tensor::new(vec![2], randn_vec(&mut rng, 2));
    let err = equivariance_err(&inp, &outp, 21, |x| run_so3_linear(&spec, &weights, Some(&bias), x));
    assert!(err <= 1e-10, "so3_linear equivariance err {err}");
}

#[test]
fn so3_linear_rejects_weight_layout_mismatch() {
    let layout = IrrepsLayout::uniform(1, 2);
    let spec = So3LinearSpec::new(layout.clone(), layout.clone(), false).unwrap();
    let mut tape = Tape::new();
    let w_bad = tape.constant(&Tensor::zeros(vec![3, 2]));
    let w_ok = tape.constant(&Tensor::zeros(vec![2, 2]));
    let x = tape.constant(&Tensor::zeros(vec![1, layout.width()]));
    let staged = StagedSo3Linear { weights: vec![w_bad, w_ok], bias: None };
    assert!(so3_linear(&mut tape, &spec, &staged, x).is_err());
}

// -- depthwise tensor product ---------------------------------------------------

#[test]
fn dtp_scalar_path_is_scalar_multiply() {
    // Path (0,0->0) with unit weight: out = x0 * y0 * K where K = 1 (scalar
    // coupling is trivially normalized to 1).
    let spec = build_block_spec(1, &[(0, 0, 0)], 0, 0, 0).unwrap();
    let mut tape = Tape::new();
    let x = tape.constant(&Tensor::new(vec![2, 1], vec![3.0, -2.0]));
    let y = tape.constant(&Tensor::new(vec![2, 1], vec![0.5, 4.0]));
    let w = tape.constant(&Tensor::new(vec![2, 1], vec![1.0, 1.0]));
    let out = depthwise_tensor_product(&mut tape, &spec, x, y, w).unwrap();
    assert!(max_abs_diff(tape.value(out), &[1.5, -8.0]) <= 1e-14);
}

#[test]
fn dtp_zero_weights_give_zero_output() {
    let mut rng = substream(0, Stream::Check { key: 22 });
    let c = 3;
    let paths = allowed_paths(2, 2, 2);
    let spec = build_block_spec(c, &paths, 2, 2, 2).unwrap();
    let mut tape = Tape::new();
    let x = tape.constant(&Tensor::new(vec![2, spec.x_width()], randn_vec(&mut rng, 2 * spec.x_width())));
    let y = tape.constant(&Tensor::new(vec![2, spec.y_width()], randn_vec(&mut rng, 2 * spec.y_width())));
    let w = tape.constant(&Tensor::zeros(vec![2, spec.w_width()]));
    let out = depthwise_tensor_product(&mut tape, &spec, x, y, w).unwrap();
    assert!(tape.value(out).iter().all(|&v| v == 0.0));
}

#[test]
fn dtp_rejects_illegal_path() {
    assert!(matches!(
        build_block_spec(2, &[(1, 1, 3)], 2, 2, 3),
        Err(So3Error::IllegalPath { .. })
    ));
    assert!(matches!(
        build_block_spec(2, &[(2, 2, 3)], 2, 2, 2),
        Err(So3Error::IllegalPath { .. })
    ));
}

#[test]
fn dtp_equivariance_under_simultaneous_rotation() {
    let mut rng = substream(0, Stream::Check { key: 23 });
    let c = 2;
    let l_max = 2;
    let paths = allowed_paths(l_max, l_max, l_max);
    let spec = build_block_spec(c, &paths, l_max, l_max, l_max).unwrap();
    let layout = IrrepsLayout::uniform(l_max, c);
    let edge_layout = IrrepsLayout::uniform(l_max, 1);
    let w = Tensor::new(vec![3, spec.w_width()], randn_vec(&mut rng, 3 * spec.w_width()));

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = random_feature(&mut rng, &layout, 3);
        let y = random_feature(&mut rng, &edge_layout, 3);
        let r = Rotation::random(&mut rng);
        let run = |xf: &IrrepsFeature, yf: &IrrepsFeature| -> IrrepsFeature {
            let mut tape = Tape::new();
            let xi = tape.constant(&xf.data);
            let yi = tape.constant(&yf.data);
            let wi = tape.constant(&w);
            let out = depthwise_tensor_product(&mut tape, &spec, xi, yi, wi).unwrap();
            IrrepsFeature::new(layout.clone(), tape.to_tensor(out)).unwrap()
        };
        let rot_after = rotate_feature(&run(&x, &y), &r);
        let rot_before = run(&rotate_feature(&x, &r), &rotate_feature(&y, &r));
        worst = worst.max(max_abs_diff(&rot_after.data.data, &rot_before.data.data));
    }
    assert!(worst <= 1e-10, "dtp equivariance err {worst}");
}

// -- gate activation -------------------------------------------------------------

fn run_gate(output: &IrrepsLayout, x: &IrrepsFeature) -> IrrepsFeature {
    let mut tape = Tape::new();
    let xid = tape.constant(&x.data);
    let out = gate_activation(&mut tape, output, xid).unwrap();
    IrrepsFeature::new(output.clone(), tape.to_tensor(out)).unwrap()
}

#[test]
fn gate_saturated_gate_passes_channel_through() {
    let output = IrrepsLayout::uniform(1, 1);
    let input = gated_input_layout(&output);
    // [feat0, gate(l=1), (x,y,z)]
    let x = IrrepsFeature::new(
        input,
        Tensor::new(vec![1, 5], vec![0.0, 50.0, 1.0, -2.0, 3.0]),
    )
    .unwrap();
    let y = run_gate(&output, &x);
    // sigmoid(50) ~ 1: degree-1 block unchanged to double precision.
    assert!(max_abs_diff(&y.data.data[1..], &[1.0, -2.0, 3.0]) <= 1e-12);
}

#[test]
fn gate_zero_gate_halves_channel() {
    let output = IrrepsLayout::uniform(1, 1);
    let input = gated_input_layout(&output);
    let x = IrrepsFeature::new(
        input,
        Tensor::new(vec![1, 5], vec![0.0, 0.0, 1.0, -2.0, 3.0]),
    )
    .unwrap();
    let y = run_gate(&output, &x);
    assert!(max_abs_diff(&y.data.data[1..], &[0.5, -1.0, 1.5]) <= 1e-15);
}

#[test]
fn gate_rejects_missing_gate_channels() {
    let output = IrrepsLayout::uniform(1, 2);
    let mut tape = Tape::new();
    // Width of the *output* layout, i.e. without the gate scalars.
    let x = tape.constant(&Tensor::zeros(vec![1, output.width()]));
    assert!(gate_activation(&mut tape, &output, x).is_err());
}

#[test]
fn gate_equivariance() {
    let output = IrrepsLayout::uniform(2, 2);
    let input = gated_input_layout(&output);
    let err = equivariance_err(&input, &output, 24, |x| run_gate(&output, x));
    assert!(err <= 1e-10, "gate equivariance err {err}");
}

// -- equivariant rms norm ----------------------------------------------------------

fn run_rms(layout: &IrrepsLayout, x: &IrrepsFeature, eps: f64) -> IrrepsFeature {
    let mut tape = Tape::new();
    let xid = tape.constant(&x.data);
    let out = equivariant_rms_norm(&mut tape, layout, xid, eps).unwrap();
    IrrepsFeature::new(layout.clone(), tape.to_tensor(out)).unwrap()
}

#[test]
fn rms_norm_degree0_arithmetic() {
    let layout = IrrepsLayout::uniform(0, 2);
    let eps = 1e-3;
    let x = IrrepsFeature::new(layout.clone(), Tensor::new(vec![1, 2], vec![3.0, 4.0])).unwrap();
    let y = run_rms(&layout, &x, eps);
    let denom = 12.5_f64.sqrt() + eps;
    assert!(max_abs_diff(&y.data.data, &[3.0 / denom, 4.0 / denom]) <= 1e-15);
}

#[test]
fn rms_norm_zero_feature_stays_zero() {
    let layout = IrrepsLayout::uniform(2, 3);
    let x = IrrepsFeature::zeros(layout.clone(), 2);
    let y = run_rms(&layout, &x, 1e-3);
    assert!(y.data.data.iter().all(|&v| v == 0.0));
}

#[test]
fn rms_norm_equivariance() {
    let layout = IrrepsLayout::uniform(2, 3);
    let err = equivariance_err(&layout, &layout, 25, |x| run_rms(&layout, x, 1e-3));
    assert!(err <= 1e-10, "rms norm equivariance err {err}");
}

// -- tape spherical harmonics ----------------------------------------------------

#[test]
fn sph_stack_tape_matches_plain() {
    let mut rng = substream(0, Stream::Check { key: 26 });
    let l_max = 3;
    let us: Vec<[f64; 3]> = (0..4).map(|_| rand_unit(&mut rng)).collect();
    let mut flat = Vec::new();
    for u in &us {
        flat.extend_from_slice(u);
    }
    let mut tape = Tape::new();
    let uid = tape.constant(&Tensor::new(vec![4, 3], flat));
    let stack = sph_stack_tape(&mut tape, l_max, uid).unwrap();
    let w = (l_max + 1) * (l_max + 1);
    for (i, u) in us.iter().enumerate() {
        let plain = sph_stack(l_max, *u);
        let row = &tape.value(stack)[i * w..(i + 1) * w];
        assert!(max_abs_diff(row, &plain) <= 1e-14);
    }
}
