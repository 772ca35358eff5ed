//! Trains the default network on linearly separable synthetic features and
//! reports accuracy and the epoch chosen by validation Kendall τ.

use lceval::experiments::{separable_set, synthetic_manifest};
use lceval::model::{classification_accuracy, train, NetworkConfig, TrainConfig};

fn main() -> lceval::Result<()> {
    let d = 12;
    let manifest = synthetic_manifest(d)?;
    let train_set = separable_set(d, 500, 1);
    let held_out = separable_set(d, 500, 2);

    let net = NetworkConfig::new(d, vec![12]);
    let cfg = TrainConfig {
        max_epochs: 100,
        ..TrainConfig::default()
    };
    let (model, history) = train(&train_set, &held_out, &manifest, &net, &cfg)?;

    for e in history.epochs.iter().step_by(10) {
        println!(
            "epoch {:>3}  loss {:.4}  train acc {:.4}  val tau {:.4}",
            e.epoch, e.train_loss, e.train_accuracy, e.val_tau
        );
    }
    println!("best epoch {} (tau {:.4})", history.best_epoch, history.best_tau);
    println!(
        "train accuracy    {:.4}",
        classification_accuracy(&model, &train_set)?.unwrap_or(0.0)
    );
    println!(
        "held-out accuracy {:.4}",
        classification_accuracy(&model, &held_out)?.unwrap_or(0.0)
    );
    Ok(())
}
