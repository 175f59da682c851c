use nalgebra::{DMatrix, SymmetricEigen};
use ttcross::{tt_svd, DenseTensor, Shape, TensorTrain, Truncation};

fn index_tensor() -> DenseTensor {
    let shape = Shape::new(vec![2, 2, 2]).unwrap();
    DenseTensor::from_fn(shape, 1 << 10, |idx| (4 * idx[0] + 2 * idx[1] + idx[2]) as f64).unwrap()
}

/// Singular values via the eigenvalues of `M M^T`, independent of the SVD
/// used inside the library.
fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let gram = m * m.transpose();
    let mut ev: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

fn relative_frobenius(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / a.frobenius_norm()
}

#[test]
fn unfolding_entry_by_hand() {
    let a = index_tensor();
    let u = a.unfold(1).unwrap();
    assert_eq!((u.rows(), u.cols()), (2, 4));
    // row i=2, column (j=1, l=2): little-endian column index j + 2 l
    assert_eq!(u.get(1, 2), 5.0);
}

#[test]
fn unfolding_of_a_matrix_is_the_matrix() {
    let shape = Shape::new(vec![3, 4]).unwrap();
    let a = DenseTensor::from_fn(shape, 64, |idx| (10 * idx[0] + idx[1]) as f64).unwrap();
    let m = a.unfold(1).unwrap().to_matrix();
    for i in 0..3 {
        for j in 0..4 {
            assert_eq!(m[(i, j)], (10 * i + j) as f64);
        }
    }
}

#[test]
fn unfolding_sizes_cover_every_entry() {
    let a = TensorTrain::random(&Shape::new(vec![2, 3, 4, 5]).unwrap(), &[2, 2, 2], 4)
        .unwrap()
        .to_dense()
        .unwrap();
    for k in 1..4 {
        let u = a.unfold(k).unwrap();
        assert_eq!(u.rows() * u.cols(), 120);
    }
    assert!(a.unfold(0).is_err());
    assert!(a.unfold(4).is_err());
}

#[test]
fn norms_small_example() {
    let a = DenseTensor::new(Shape::new(vec![2, 2]).unwrap(), vec![1.0, 2.0, -3.0, 0.0]).unwrap();
    assert_eq!(a.chebyshev_norm(), 3.0);
    assert!((a.frobenius_norm() - 14f64.sqrt()).abs() < 1e-15);
    let z = DenseTensor::zeros(Shape::uniform(3, 2).unwrap()).unwrap();
    assert_eq!((z.chebyshev_norm(), z.frobenius_norm()), (0.0, 0.0));
}

#[test]
fn norms_match_a_plain_loop() {
    let a = TensorTrain::random(&Shape::uniform(4, 3).unwrap(), &[2, 3, 2], 11)
        .unwrap()
        .to_dense()
        .unwrap();
    let mut cheb = 0.0f64;
    let mut sq = 0.0;
    for &v in a.values() {
        cheb = cheb.max(v.abs());
        sq += v * v;
    }
    assert_eq!(a.chebyshev_norm(), cheb);
    assert!((a.frobenius_norm() - sq.sqrt()).abs() <= 1e-14 * sq.sqrt());
}

#[test]
fn tt_svd_recovers_exact_ranks() {
    let shape = Shape::new(vec![3, 4, 5]).unwrap();
    let a = TensorTrain::random(&shape, &[2, 2], 5).unwrap().to_dense().unwrap();
    let tt = tt_svd(&a, &Truncation::Ranks(vec![2, 2])).unwrap();
    assert_eq!(tt.ranks(), vec![2, 2]);
    assert!(relative_frobenius(&a, &tt.to_dense().unwrap()) <= 1e-12);
}

#[test]
fn tt_svd_of_zeros_clamps_ranks_to_one() {
    let a = DenseTensor::zeros(Shape::uniform(3, 3).unwrap()).unwrap();
    let tt = tt_svd(&a, &Truncation::Tolerance(1e-10)).unwrap();
    assert_eq!(tt.ranks(), vec![1, 1]);
    assert_eq!(tt.to_dense().unwrap().chebyshev_norm(), 0.0);
}

#[test]
fn tt_svd_rejects_bad_ranks() {
    let a = DenseTensor::zeros(Shape::uniform(3, 2).unwrap()).unwrap();
    assert!(tt_svd(&a, &Truncation::Ranks(vec![1])).is_err());
    assert!(tt_svd(&a, &Truncation::Ranks(vec![3, 1])).is_err());
    assert!(tt_svd(&a, &Truncation::Ranks(vec![0, 1])).is_err());
    assert!(tt_svd(&a, &Truncation::Tolerance(-1.0)).is_err());
}

#[test]
fn tt_svd_tolerance_meets_its_budget() {
    let shape = Shape::uniform(5, 3).unwrap();
    let a = TensorTrain::random(&shape, &[3; 4], 9).unwrap().to_dense().unwrap();
    for delta in [1e-1, 1e-3, 1e-8] {
        let tt = tt_svd(&a, &Truncation::Tolerance(delta)).unwrap();
        assert!(relative_frobenius(&a, &tt.to_dense().unwrap()) <= delta * (1.0 + 1e-10));
    }
}

fn rank_one_residual(m: &DMatrix<f64>) -> f64 {
    singular_values(m)[1..].iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Rank-1 TT-SVD of random 4x4x4 tensors, sandwiched between the optimal
/// rank-1 residuals of the two unfoldings.
#[test]
fn tt_svd_rank_one_error_is_sandwiched_by_unfolding_residuals() {
    use rand::{Rng, SeedableRng};
    for seed in 0..50 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape::uniform(3, 4).unwrap();
        let a = DenseTensor::new(shape, (0..64).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let first = rank_one_residual(&a.unfold(1).unwrap().to_matrix());
        let second = rank_one_residual(&a.unfold(2).unwrap().to_matrix());
        let tt = tt_svd(&a, &Truncation::Ranks(vec![1, 1])).unwrap();
        let err = a.sub(&tt.to_dense().unwrap()).unwrap().frobenius_norm();
        let lower = first.max(second);
        let upper = (first * first + second * second).sqrt();
        assert!(err >= lower * (1.0 - 1e-10), "seed {seed}: {err} below {lower}");
        assert!(err <= upper * (1.0 + 1e-10), "seed {seed}: {err} above {upper}");
    }
}

#[test]
fn random_tt_is_deterministic() {
    let shape = Shape::uniform(4, 3).unwrap();
    let a = TensorTrain::random(&shape, &[2, 2, 2], 3).unwrap();
    let b = TensorTrain::random(&shape, &[2, 2, 2], 3).unwrap();
    let c = TensorTrain::random(&shape, &[2, 2, 2], 4).unwrap();
    for k in 0..4 {
        assert_eq!(a.cores()[k].data(), b.cores()[k].data());
    }
    assert_ne!(a.cores()[0].data(), c.cores()[0].data());
    assert!(a
        .cores()
        .iter()
        .flat_map(|c| c.data())
        .all(|&v| (0.0..1.0).contains(&v)));
}

#[test]
fn rank_one_tt_has_vanishing_minors() {
    let shape = Shape::uniform(4, 3).unwrap();
    let a = TensorTrain::random(&shape, &[1, 1, 1], 2).unwrap().to_dense().unwrap();
    for k in 1..4 {
        let m = a.unfold(k).unwrap().to_matrix();
        for (i1, i2) in (0..m.nrows()).flat_map(|i| (i + 1..m.nrows()).map(move |j| (i, j))) {
            for (j1, j2) in (0..m.ncols()).flat_map(|i| (i + 1..m.ncols()).map(move |j| (i, j))) {
                let minor = m[(i1, j1)] * m[(i2, j2)] - m[(i1, j2)] * m[(i2, j1)];
                assert!(minor.abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn random_tt_unfolding_ranks() {
    let shape = Shape::uniform(6, 2).unwrap();
    let a = TensorTrain::random(&shape, &[2, 3, 3, 3, 2], 8)
        .unwrap()
        .to_dense()
        .unwrap();
    for k in 2..5 {
        let sigma = singular_values(&a.unfold(k).unwrap().to_matrix());
        assert!(sigma[2] > 1e-8 * sigma[0]);
        assert!(
            sigma[3..].iter().all(|&s| s <= 1e-6 * sigma[0]),
            "unfolding {k}: {sigma:?}"
        );
    }
    let tt = tt_svd(&a, &Truncation::Tolerance(1e-12)).unwrap();
    assert_eq!(tt.ranks(), vec![2, 3, 3, 3, 2]);
}

#[test]
fn scaling_a_core_scales_entries() {
    let shape = Shape::uniform(3, 3).unwrap();
    let tt = TensorTrain::random(&shape, &[2, 2], 1).unwrap();
    let mut scaled = tt.clone();
    scaled.core_mut(1).data_mut().iter_mut().for_each(|v| *v *= -2.5);
    for idx in shape.indices() {
        let (x, y) = (tt.evaluate(&idx).unwrap(), scaled.evaluate(&idx).unwrap());
        assert!((y + 2.5 * x).abs() <= 1e-14 * x.abs().max(1.0));
    }
}

#[test]
fn text_container_round_trip() {
    let shape = Shape::new(vec![2, 3, 4]).unwrap();
    let tt = TensorTrain::random(&shape, &[2, 3], 6).unwrap();
    let mut buf = Vec::new();
    tt.write_text(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("ttcross-tt 1\nd 3\nshape 2 3 4\nranks 1 2 3 1\ncore 1\n"));
    let back = TensorTrain::read_text(&buf[..]).unwrap();
    assert_eq!(back.ranks(), tt.ranks());
    for k in 0..3 {
        assert_eq!(back.cores()[k].data(), tt.cores()[k].data());
    }
    assert!(TensorTrain::read_text(&b"ttcross-tt 2\n"[..]).is_err());
}
