// Temporary probe: per-parameter gradient norms on one batch at init.
use vit_net::{backward_with_param_grads, cross_entropy, forward, ViTConfig, ViTModel, ViTParams};
use zoo_train::generate_synthetic;

fn main() {
    let full = generate_synthetic(10, 8, 32, 1).unwrap();
    let keep: Vec<usize> = (0..full.len())
        .filter(|&i| full.labels[i] == 0 || full.labels[i] == 2)
        .collect();
    let mut data = full.select(&keep);
    data.labels = data.labels.iter().map(|&l| l / 2).collect();
    data.num_classes = 2;

    let cfg = ViTConfig {
        embed_dim: 32,
        num_heads: 2,
        depth: 2,
        num_classes: 2,
        ..Default::default()
    };
    let model = ViTModel::init_random(cfg.clone(), 7).unwrap();
    let mut total = ViTParams::zeros(&cfg);
    for i in 0..data.len() {
        let (logits, cache) = forward(&model, &data.images[i]).unwrap();
        let (_, lg) = cross_entropy(&logits, data.labels[i]).unwrap();
        let (_, g) = backward_with_param_grads(&model, &cache, &lg, None).unwrap();
        let mut src = Vec::new();
        g.for_each(|_, t| src.push(t));
        for (dst, s) in total.tensors_mut().into_iter().zip(src) {
            dst.accumulate(s).unwrap();
        }
    }
    let n = data.len() as f64;
    total.for_each(|name, t| {
        let rms = (t.sum_squares() / t.len() as f64).sqrt() / n;
        println!("{name:24} rms {rms:9.3e}");
    });
}
