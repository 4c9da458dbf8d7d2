use std::panic::{self, AssertUnwindSafe};

use ndarray::{ArrayD, IxDyn};
use quadshare::tensor::IoStats;
use quadshare::{broadcast, Engine, EngineConfig, Error, LargeArray, NetStats, Shape, ShareTensor, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dims(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let rank = rng.gen_range(0..=4);
    (0..rank).map(|_| rng.gen_range(1..=4)).collect()
}

/// Mostly-compatible partner: each trailing axis keeps, collapses to 1 or
/// takes a random size.
fn partner(rng: &mut ChaCha8Rng, a: &[usize]) -> Vec<usize> {
    let rank = rng.gen_range(0..=4);
    let mut out = Vec::with_capacity(rank);
    for k in (0..rank).rev() {
        let d = if k < a.len() { a[a.len() - 1 - k] } else { rng.gen_range(1..=4) };
        out.push(match rng.gen_range(0..10) {
            0..=5 => d,
            6..=7 => 1,
            _ => rng.gen_range(1..=4),
        });
    }
    out
}

fn nd(dims: &[usize], data: Vec<f64>) -> ArrayD<f64> {
    ArrayD::from_shape_vec(IxDyn(dims), data).unwrap()
}

#[test]
fn broadcasting_matches_ndarray_on_200_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut e = Engine::new(EngineConfig::default().with_seed(1));
    let quiet = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let (mut ok, mut bad) = (0, 0);
    for _ in 0..200 {
        let da = random_dims(&mut rng);
        let db = partner(&mut rng, &da);
        let va: Vec<f64> = (0..da.iter().product()).map(|_| rng.gen_range(-8..8) as f64).collect();
        let vb: Vec<f64> = (0..db.iter().product()).map(|_| rng.gen_range(-8..8) as f64).collect();
        let (na, nb) = (nd(&da, va.clone()), nd(&db, vb.clone()));
        let reference = panic::catch_unwind(AssertUnwindSafe(|| &na + &nb)).ok();
        let ours = broadcast(&Shape::new(&da), &Shape::new(&db));
        match (reference, ours) {
            (Some(r), Ok(s)) => {
                ok += 1;
                assert_eq!(r.shape(), s.dims(), "{da:?} vs {db:?}");
                let a = ShareTensor::public(&e, &Tensor::new(da.as_slice(), va).unwrap()).unwrap();
                let b = ShareTensor::public(&e, &Tensor::new(db.as_slice(), vb).unwrap()).unwrap();
                let sum = a.add(&b).unwrap().reveal(&mut e).unwrap();
                assert_eq!(sum.data, r.iter().copied().collect::<Vec<_>>(), "{da:?} vs {db:?}");
            }
            (None, Err(Error::Shape { axis, .. })) => {
                bad += 1;
                assert!(axis < da.len().max(db.len()));
            }
            (r, o) => {
                panic::set_hook(quiet);
                panic!("{da:?} vs {db:?}: reference {:?}, ours {o:?}", r.map(|r| r.shape().to_vec()));
            }
        }
    }
    panic::set_hook(quiet);
    assert!(ok >= 50 && bad >= 10, "corpus too one-sided: {ok} compatible, {bad} not");
}

#[test]
fn random_matrices_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut e = Engine::new(EngineConfig::default().with_seed(8));
    let cfg = e.ring();
    let n = 8;
    let enc = |v: f64| cfg.encode(v).unwrap().to_f64();
    for _ in 0..5 {
        let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let want = nd(&[n, n], a.iter().map(|v| enc(*v)).collect())
            .into_dimensionality::<ndarray::Ix2>()
            .unwrap()
            .dot(&nd(&[n, n], b.iter().map(|v| enc(*v)).collect()).into_dimensionality::<ndarray::Ix2>().unwrap());
        let x = ShareTensor::input(&mut e, 0, &Tensor::new([n, n], a).unwrap()).unwrap();
        let y = ShareTensor::input(&mut e, 0, &Tensor::new([n, n], b).unwrap()).unwrap();
        let before = e.stats();
        let got = x.dot(&mut e, &y).unwrap();
        let d = NetStats::diff(&before, &e.stats());
        assert_eq!(d.total_rounds, 1);
        assert_eq!(d.max_server_bytes(), (2 * n * n * cfg.element_bytes()) as u64);
        let got = got.reveal(&mut e).unwrap().data;
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() <= n as f64 * cfg.ulp(), "{g} vs {w}");
        }
    }
}

#[test]
fn tile_and_repeat_match_ndarray_factorization_usage() {
    // user vector tiled against item rows, as in a factorization update
    let mut e = Engine::new(EngineConfig::default().with_seed(2));
    let u = Tensor::new([4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let su = ShareTensor::public(&e, &u).unwrap();
    let tiled = su.tile(&[3, 1]).reveal(&mut e).unwrap();
    let nu = nd(&[4], u.data.clone());
    let want: ArrayD<f64> = ndarray::stack(ndarray::Axis(0), &[nu.view(), nu.view(), nu.view()]).unwrap();
    assert_eq!(tiled.shape.dims(), want.shape());
    assert_eq!(tiled.data, want.iter().copied().collect::<Vec<_>>());

    let col = su.reshape(&[Some(4), Some(1)]).unwrap().repeat(3, Some(1)).unwrap();
    let col = col.reveal(&mut e).unwrap();
    assert_eq!(col.shape.dims(), &[4, 3]);
    let want: Vec<f64> = u.data.iter().flat_map(|v| [*v; 3]).collect();
    assert_eq!(col.data, want);
}

#[test]
fn large_array_batch_equals_in_memory_slice() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut e = Engine::new(EngineConfig::default().with_seed(64));
    let (rows, cols) = (10_000, 64);
    let vals: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
    let t = ShareTensor::input(&mut e, 0, &Tensor::new([rows, cols], vals).unwrap()).unwrap();
    let mut la = LargeArray::create_with_chunk_rows(dir.path(), &t, 512).unwrap();
    let written: IoStats = la.io_stats();
    assert_eq!(written.bytes_written, (4 * rows * cols * la.record_bytes()) as u64);
    let batch: Vec<usize> = (0..128).map(|_| rng.gen_range(0..rows)).collect();
    let before = e.stats();
    let got = la.get_batch(&batch).unwrap();
    assert_eq!(NetStats::diff(&before, &e.stats()).total_messages(), 0);
    assert_eq!(got, t.take(&batch, 0).unwrap());
    let io = la.io_stats();
    assert!(io.chunk_loads > 0 && io.bytes_read > 0);
    assert!(io.io_time > std::time::Duration::ZERO);
}
