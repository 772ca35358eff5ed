//! Compares a mean-of-features baseline with linear and hidden-layer models
//! on a set whose target depends nonlinearly on two features.

use lceval::experiments::{architecture_comparison, disc_set, disc_train_config, synthetic_manifest};

fn main() -> lceval::Result<()> {
    let train = disc_set(1000, 1);
    let validation = disc_set(400, 2);
    let manifest = synthetic_manifest(2)?;
    let architectures = [vec![], vec![12], vec![12, 12]];
    let table = architecture_comparison(&train, &validation, &manifest, &architectures, 7, &disc_train_config())?;
    print!("{table}");
    Ok(())
}
