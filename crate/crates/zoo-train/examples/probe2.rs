// Temporary probe: can the net overfit 2 same-palette shape classes at all?
use tensor_core::Tensor;
use vit_net::{ViTConfig, ViTModel};
use zoo_train::{evaluate, generate_synthetic, train, Dataset, Optimizer, Split, TrainConfig};

fn main() {
    // Classes 0 (disk, warm) and 2 (frame, warm): same palette, shape-only.
    let full = generate_synthetic(10, 40, 32, 1).unwrap();
    let keep: Vec<usize> = (0..full.len())
        .filter(|&i| full.labels[i] == 0 || full.labels[i] == 2)
        .collect();
    let mut data = full.select(&keep);
    // Relabel to 0/1 for a 2-class head.
    data.labels = data.labels.iter().map(|&l| l / 2).collect();
    data.num_classes = 2;
    let data = Dataset { split: Split::Train, ..data };
    println!("samples: {}", data.len());

    let cfg = ViTConfig {
        embed_dim: 32,
        num_heads: 2,
        depth: 2,
        num_classes: 2,
        ..Default::default()
    };
    for (lr, epochs) in [(1e-3, 30), (3e-3, 30)] {
        let model = ViTModel::init_random(cfg.clone(), 7).unwrap();
        let out = train(
            model,
            &data,
            &TrainConfig {
                epochs,
                batch_size: 8,
                learning_rate: lr,
                weight_decay: 0.0,
                optimizer: Optimizer::AdamLite,
                seed: 3,
            },
        )
        .unwrap();
        let acc = evaluate(&out.model, &data).unwrap();
        let show: Vec<f64> = out
            .loss_history
            .iter()
            .step_by(3)
            .map(|v| (v * 1000.0).round() / 1000.0)
            .collect();
        println!("lr {lr}: losses(every 3rd) {show:?} final train acc {acc:.1}%");
    }
}
