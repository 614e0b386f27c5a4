// Temporary calibration probe: learning-rate sweep on a small dataset.
use std::time::Instant;
use vit_net::ViTModel;
use zoo_train::{default_zoo, evaluate, generate_synthetic, train, Optimizer, TrainConfig};

fn main() {
    let data = generate_synthetic(10, 20, 32, 1).unwrap();
    let (train_split, eval_split) = data.split_train_eval();
    println!("train {} eval {}", train_split.len(), eval_split.len());
    let zoo = default_zoo();
    let cfg_a = &zoo.get("vit-a").unwrap().clone();
    for (opt, lr) in [
        (Optimizer::AdamLite, 1e-3),
        (Optimizer::AdamLite, 3e-3),
        (Optimizer::AdamLite, 1e-2),
        (Optimizer::SgdMomentum, 1e-2),
        (Optimizer::SgdMomentum, 1e-1),
    ] {
        let t0 = Instant::now();
        let model = ViTModel::init_random(cfg_a.clone(), 42).unwrap();
        let out = train(
            model,
            &train_split,
            &TrainConfig {
                epochs: 8,
                batch_size: 16,
                learning_rate: lr,
                weight_decay: 0.0,
                optimizer: opt,
                seed: 0,
            },
        )
        .unwrap();
        let acc = evaluate(&out.model, &eval_split).unwrap();
        println!(
            "{opt:?} lr={lr}: {:.1?}; losses {:?}; train acc {:?}; eval {:.1}%",
            t0.elapsed(),
            out.loss_history
                .iter()
                .map(|v| (v * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            out.accuracy_history
                .iter()
                .map(|v| v.round())
                .collect::<Vec<_>>(),
            acc
        );
    }
}
