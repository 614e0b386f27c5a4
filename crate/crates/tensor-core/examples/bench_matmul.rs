// Temporary throughput probe for the matmul kernels.
use std::time::Instant;
use tensor_core::{matmul, matmul_nt, matmul_tn, Rng, Tensor};

fn rand_t(shape: &[usize], rng: &mut Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.normal()).collect()).unwrap()
}

fn main() {
    let mut rng = Rng::new(1);
    let a = rand_t(&[65, 64], &mut rng);
    let b = rand_t(&[64, 192], &mut rng);
    let reps = 2000;
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..reps {
        sink += matmul(&a, &b).unwrap().data()[0];
    }
    let dt = t0.elapsed().as_secs_f64();
    let flops = 2.0 * 65.0 * 64.0 * 192.0 * reps as f64;
    println!("matmul 65x64x192: {:.2} GFLOP/s (sink {sink:.3})", flops / dt / 1e9);

    let c = rand_t(&[65, 64], &mut rng);
    let d = rand_t(&[65, 64], &mut rng);
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..reps {
        sink += matmul_tn(&c, &d).unwrap().data()[0];
    }
    let dt = t0.elapsed().as_secs_f64();
    let flops = 2.0 * 64.0 * 65.0 * 64.0 * reps as f64;
    println!("matmul_tn 64x65x64: {:.2} GFLOP/s (sink {sink:.3})", flops / dt / 1e9);

    let e = rand_t(&[65, 32], &mut rng);
    let f = rand_t(&[65, 32], &mut rng);
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..reps {
        sink += matmul_nt(&e, &f).unwrap().data()[0];
    }
    let dt = t0.elapsed().as_secs_f64();
    let flops = 2.0 * 65.0 * 65.0 * 32.0 * reps as f64;
    println!("matmul_nt 65x65x32: {:.2} GFLOP/s (sink {sink:.3})", flops / dt / 1e9);
}
