// Temporary profiling probe: forward / backward / param-grad timings.
use std::time::Instant;
use tensor_core::Tensor;
use vit_net::{backward, backward_with_param_grads, cross_entropy, forward, ViTModel};
use zoo_train::{default_zoo, generate_synthetic};

fn main() {
    let data = generate_synthetic(10, 2, 32, 1).unwrap();
    let zoo = default_zoo();
    let cfg = zoo.get("vit-a").unwrap().clone();
    let model = ViTModel::init_random(cfg, 42).unwrap();
    let img: &Tensor = &data.images[0];

    let reps = 200;
    let t0 = Instant::now();
    for _ in 0..reps {
        let _ = forward(&model, img).unwrap();
    }
    println!("forward: {:.2} ms", t0.elapsed().as_secs_f64() * 1e3 / reps as f64);

    let (logits, cache) = forward(&model, img).unwrap();
    let (_, lg) = cross_entropy(&logits, 0).unwrap();
    let t0 = Instant::now();
    for _ in 0..reps {
        let _ = backward(&model, &cache, &lg, None).unwrap();
    }
    println!("backward: {:.2} ms", t0.elapsed().as_secs_f64() * 1e3 / reps as f64);

    let t0 = Instant::now();
    for _ in 0..reps {
        let _ = backward_with_param_grads(&model, &cache, &lg, None).unwrap();
    }
    println!(
        "backward+params: {:.2} ms",
        t0.elapsed().as_secs_f64() * 1e3 / reps as f64
    );
}
