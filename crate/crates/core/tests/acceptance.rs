//! Acceptance criteria, each checked against an oracle written here rather
//! than against the library's own helpers. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use lceval::corpus::{load_records, write_records, Caption};
use lceval::experiments::{architecture_comparison, disc_set, disc_train_config, separable_set, synthetic_manifest};
use lceval::features::{
    extract_all, extract_features, read_features, write_features, Aggregation, FeatureManifest, DEFAULT_FEATURES,
};
use lceval::lexical::{meteor_lite, ngram_precision, rouge_l, rouge_l_single, unigram_recall};
use lceval::model::{
    classification_accuracy, gradients, load_model, loss, save_model, train, Example, Model, NetworkConfig, TrainConfig,
};
use lceval::semantic::{solve_transport, wmd_distance};
use lceval::stats::{
    kendall_tau_b, pairwise_accuracy, refcount_sweep, system_level, Choice, ForcedChoiceCase, ScoredItem,
};
use lceval::text::{lcs_length, tokenize, TokenSeq};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{parsed_caption, random_record, random_table, random_words, resources, words, VOCAB};

type Check = Result<String, String>;

/// Name, runtime limit and check.
type Criterion = (&'static str, Option<Duration>, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: lceval::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- criterion 1

/// Longest common subsequence by trying every subsequence of `a`.
fn lcs_exhaustive(a: &[String], b: &[String]) -> usize {
    let is_subseq = |sub: &[&String]| {
        let mut it = b.iter();
        sub.iter().all(|s| it.any(|t| t == *s))
    };
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if is_subseq(&sub) {
            best = len;
        }
    }
    best
}

/// τ-b from explicit pair counts.
fn tau_b_pairs(x: &[f64], y: &[f64]) -> f64 {
    let (mut c, mut d, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1.0;
            } else if dy == 0.0 {
                ty += 1.0;
            } else if (dx > 0.0) == (dy > 0.0) {
                c += 1.0;
            } else {
                d += 1.0;
            }
        }
    }
    (c - d) / ((c + d + tx) * (c + d + ty)).sqrt()
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let a = random_words(&mut rng, 1, 8);
        let b = random_words(&mut rng, 1, 8);
        let (ta, tb) = (TokenSeq::from_words(&a).unwrap(), TokenSeq::from_words(&b).unwrap());
        let lcs = lcs_exhaustive(&a, &b);
        ensure(lcs_length(&ta, &tb) == lcs, || {
            format!("lcs {a:?} / {b:?}: oracle {lcs}")
        })?;
        let (p, r) = (lcs as f64 / a.len() as f64, lcs as f64 / b.len() as f64);
        let expected = if lcs == 0 {
            0.0
        } else {
            (1.0 + 1.44) * p * r / (r + 1.44 * p)
        };
        let got = rouge_l_single(&ta, &tb, 1.2);
        ensure(got == expected, || format!("rougeL {a:?} / {b:?}: {got} vs {expected}"))?;
    }

    let abc = words("a b c");
    let abd = words("a b d");
    let exact = [
        (
            "p1",
            lib(ngram_precision(&abc, std::slice::from_ref(&abd), 1))?,
            2.0 / 3.0,
        ),
        ("p2", lib(ngram_precision(&abc, std::slice::from_ref(&abd), 2))?, 0.5),
        ("recall", unigram_recall(&abc, std::slice::from_ref(&abd)), 2.0 / 3.0),
        ("recall max", unigram_recall(&abc, &[abd.clone(), abc.clone()]), 1.0),
        ("rougeL", rouge_l(&words("a b c d"), &[words("a c b d")], 1.2), 0.75),
        (
            "meteor identity",
            meteor_lite(&words("a b c d"), &[words("a b c d")]),
            0.9921875,
        ),
        ("meteor swap", meteor_lite(&words("a b"), &[words("b a")]), 0.5),
    ];
    for (name, got, want) in exact {
        ensure(got == want, || format!("{name}: {got} vs {want}"))?;
    }

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=50);
        // Small integer ranges force ties in both variables.
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        let oracle = tau_b_pairs(&x, &y);
        match kendall_tau_b(&x, &y) {
            Ok(t) => worst = worst.max((t - oracle).abs()),
            Err(_) => ensure(!oracle.is_finite(), || format!("tau-b refused a defined case {x:?}"))?,
        }
    }
    ensure(worst <= 1e-12, || format!("tau-b off by {worst:e}"))?;
    Ok(format!(
        "200 LCS pairs exact, 7 worked values exact, tau-b max error {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 2

fn transport_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let table = random_table(&mut rng, &VOCAB, 8);
    let sentence = |rng: &mut ChaCha8Rng| TokenSeq::from_words(random_words(rng, 2, 6)).unwrap();
    let (mut asym, mut excess): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for _ in 0..200 {
        let (a, b, c) = (sentence(&mut rng), sentence(&mut rng), sentence(&mut rng));
        let d = |x: &TokenSeq, y: &TokenSeq| lib(wmd_distance(x, y, &table)).map(|d| d.expect("all words embedded"));
        let (ab, ba, bc, ac) = (d(&a, &b)?, d(&b, &a)?, d(&b, &c)?, d(&a, &c)?);
        asym = asym.max((ab - ba).abs());
        excess = excess.max(ac - ab - bc);
    }
    ensure(asym <= 1e-6, || format!("asymmetry {asym:e}"))?;
    ensure(excess <= 1e-6, || format!("triangle violated by {excess:e}"))?;

    // A 2×2 plan has one free entry t = T[0][0]; the optimum sits at an end
    // of its feasible interval.
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let s0: f64 = rng.gen_range(0.0..1.0);
        let d0: f64 = rng.gen_range(0.0..1.0);
        let supply = [s0, 1.0 - s0];
        let demand = [d0, 1.0 - d0];
        let cost: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..2).map(|_| rng.gen_range(0.0..3.0)).collect())
            .collect();
        let plan_cost =
            |t: f64| t * cost[0][0] + (s0 - t) * cost[0][1] + (d0 - t) * cost[1][0] + (1.0 - s0 - d0 + t) * cost[1][1];
        let lo = (s0 + d0 - 1.0).max(0.0);
        let hi = s0.min(d0);
        let oracle = plan_cost(lo).min(plan_cost(hi));
        let got = lib(solve_transport(&supply, &demand, &cost))?.cost;
        worst = worst.max((got - oracle).abs());
    }
    ensure(worst <= 1e-9, || format!("2×2 solver off by {worst:e}"))?;
    Ok(format!(
        "max asymmetry {asym:.1e}, max triangle excess {excess:.1e}, 2×2 max error {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 3

fn random_model(rng: &mut ChaCha8Rng, input_dim: usize, hidden: &[usize], l2: f64) -> Model {
    let manifest = synthetic_manifest(input_dim).unwrap();
    let mut net = NetworkConfig::new(input_dim, hidden.to_vec());
    net.seed = rng.gen();
    net.l2 = l2;
    let mut model = Model::init(&net, manifest).unwrap();
    for layer in &mut model.layers {
        for b in &mut layer.bias {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    model
}

/// Smallest |pre-activation| of any hidden unit over the batch.
fn kink_margin(model: &Model, xs: &[Vec<f64>]) -> f64 {
    let mut margin = f64::INFINITY;
    for x in xs {
        let mut a = x.clone();
        for layer in &model.layers[..model.layers.len() - 1] {
            let z: Vec<f64> = (0..layer.outputs)
                .map(|r| (0..layer.inputs).map(|c| layer.weight(r, c) * a[c]).sum::<f64>() + layer.bias[r])
                .collect();
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    margin
}

fn gradient_check() -> Check {
    const H: f64 = 1e-5;
    // Magnitudes below this are compared absolutely; finite differences carry
    // about 1e-11 of rounding noise.
    const FLOOR: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let configs: [&[usize]; 4] = [&[], &[5], &[12], &[8, 8]];
    let (mut draws, mut params, mut worst) = (0, 0, 0.0f64);
    for round in 0..2 {
        for hidden in configs {
            for batch in [1usize, 7, 75] {
                let d = rng.gen_range(2..=12);
                let l2 = if round == 0 { 1e-4 } else { 1e-2 };
                let (model, xs, classes) = loop {
                    let model = random_model(&mut rng, d, hidden, l2);
                    let xs: Vec<Vec<f64>> = (0..batch).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
                    // Finite differences are meaningless across a ReLU kink.
                    if kink_margin(&model, &xs) > 1e-3 {
                        let classes: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..2)).collect();
                        break (model, xs, classes);
                    }
                };
                let examples: Vec<Example> = xs
                    .iter()
                    .zip(&classes)
                    .map(|(x, &class)| Example { x, class })
                    .collect();
                let grads = lib(gradients(&model, &examples))?;
                for (li, layer) in model.layers.iter().enumerate() {
                    let n_w = layer.weights.len();
                    for p in 0..n_w + layer.bias.len() {
                        let nudge = |delta: f64| -> Result<f64, String> {
                            let mut m = model.clone();
                            let l = &mut m.layers[li];
                            if p < n_w {
                                l.weights[p] += delta;
                            } else {
                                l.bias[p - n_w] += delta;
                            }
                            lib(loss(&m, &examples))
                        };
                        let numeric = (nudge(H)? - nudge(-H)?) / (2.0 * H);
                        let g = &grads.layers[li];
                        let analytic = if p < n_w { g.weights[p] } else { g.bias[p - n_w] };
                        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
                        worst = worst.max(rel);
                        ensure(rel <= 1e-4, || {
                            format!("hidden {hidden:?} batch {batch} layer {li} param {p}: {analytic} vs {numeric}")
                        })?;
                        params += 1;
                    }
                }
                draws += 1;
            }
        }
    }
    Ok(format!(
        "{draws} draws, {params} parameters, max relative error {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 4

fn zero_model_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst_zero: f64 = 0.0;
    for hidden in [vec![], vec![5], vec![12], vec![8, 8]] {
        let d = rng.gen_range(1..=12);
        let mut net = NetworkConfig::new(d, hidden);
        net.l2 = 0.0;
        let model = lib(Model::zeros(&net, synthetic_manifest(d).unwrap()))?;
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect())
            .collect();
        for x in &xs {
            let p = lib(model.forward(x))?.probs;
            worst_zero = worst_zero.max((p[0] - 0.5).abs()).max((p[1] - 0.5).abs());
        }
        let examples: Vec<Example> = xs
            .iter()
            .map(|x| Example {
                x,
                class: rng.gen_range(0..2),
            })
            .collect();
        for size in [1, 7, 40] {
            let l = lib(loss(&model, &examples[..size]))?;
            worst_zero = worst_zero.max((l - std::f64::consts::LN_2).abs());
        }
    }
    ensure(worst_zero <= 1e-12, || format!("zero model off by {worst_zero:e}"))?;

    let mut worst_sum: f64 = 0.0;
    for i in 0..1000 {
        let d = rng.gen_range(1..=12);
        let hidden = [vec![], vec![5], vec![12], vec![8, 8]][i % 4].clone();
        let mut model = random_model(&mut rng, d, &hidden, 1e-4);
        // Large weights push the logits towards saturation.
        let scale = rng.gen_range(0.1..50.0);
        for layer in &mut model.layers {
            layer.weights.iter_mut().for_each(|w| *w *= scale);
        }
        let x: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        let score = lib(model.score(&x))?;
        let machine = lib(model.forward(&x))?.probs[0];
        worst_sum = worst_sum.max((score + machine - 1.0).abs());
    }
    ensure(worst_sum <= 1e-9, || format!("score + P(machine) off by {worst_sum:e}"))?;
    Ok(format!(
        "zero-model max error {worst_zero:.1e}, complement max error {worst_sum:.1e} over 1000 inputs"
    ))
}

// ---------------------------------------------------------------- criterion 5

fn synthetic_training() -> Check {
    let manifest = lib(synthetic_manifest(12))?;
    let train_set = separable_set(12, 500, 1);
    let validation = separable_set(12, 500, 2);
    let held_out = separable_set(12, 500, 3);
    let cfg = TrainConfig {
        max_epochs: 100,
        ..TrainConfig::default()
    };
    ensure(cfg.adam.learning_rate == 0.0005 && cfg.batch_size == 75, || {
        "defaults changed".into()
    })?;
    let net = NetworkConfig::new(12, vec![12]);
    let (model, history) = lib(train(&train_set, &validation, &manifest, &net, &cfg))?;
    let train_acc = lib(classification_accuracy(&model, &train_set))?.unwrap();
    let held_acc = lib(classification_accuracy(&model, &held_out))?.unwrap();
    ensure(train_acc >= 0.95, || format!("training accuracy {train_acc}"))?;
    ensure(held_acc >= 0.95, || format!("held-out accuracy {held_acc}"))?;

    let taus: Vec<f64> = history.epochs.iter().map(|e| e.val_tau).collect();
    let mut argmax = 0;
    for (i, t) in taus.iter().enumerate() {
        if *t > taus[argmax] {
            argmax = i;
        }
    }
    ensure(history.best_epoch == argmax + 1, || {
        format!("best epoch {} vs argmax {}", history.best_epoch, argmax + 1)
    })?;
    ensure(history.best_tau == taus[argmax], || {
        "best tau differs from history".into()
    })?;
    let scores: Vec<f64> = validation.iter().map(|v| model.score(&v.values).unwrap()).collect();
    let human: Vec<f64> = validation.iter().map(|v| v.human_score.unwrap()).collect();
    let tau = lib(kendall_tau_b(&scores, &human))?;
    ensure(tau == history.best_tau, || {
        format!("returned model has tau {tau}, history says {}", history.best_tau)
    })?;
    Ok(format!(
        "train {train_acc:.3}, held-out {held_acc:.3}, best epoch {} of {} (tau {:.4})",
        history.best_epoch,
        taus.len(),
        history.best_tau
    ))
}

// ---------------------------------------------------------------- criterion 6

fn architecture_ordering() -> Check {
    let manifest = lib(synthetic_manifest(2))?;
    let architectures = [vec![], vec![12], vec![12, 12]];
    let table = lib(architecture_comparison(
        &disc_set(1000, 1),
        &disc_set(400, 2),
        &manifest,
        &architectures,
        7,
        &disc_train_config(),
    ))?;
    for line in table.to_string().lines() {
        println!("    {line}");
    }
    ensure(table.row("mean-features").is_some(), || "baseline row missing".into())?;
    let tau = |name: &str| table.row(name).map(|r| r.val_tau).ok_or(format!("row {name} missing"));
    let linear = tau("linear")?;
    for name in ["hidden [12]", "hidden [12, 12]"] {
        let t = tau(name)?;
        ensure(t > linear, || format!("{name} tau {t} not above linear {linear}"))?;
    }
    Ok(format!("linear tau {linear:.4} below both hidden-layer models"))
}

// ---------------------------------------------------------------- criterion 7

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["lceval"];
    full.extend_from_slice(args);
    match lceval::cli::run(full) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", args.join(" "))),
    }
}

/// pair → extract → train → score in `dir`; returns the main outputs.
fn pipeline(dir: &Path, workers: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let features = "p1,p2,p3,p4,recall1,rougeL,meteorLite,ciderD,mowe,wmd";
    run_cli(&[
        "--seed",
        "5",
        "pair",
        "--images",
        &format!("{data}/images.jsonl"),
        "--out",
        &p("pairs.jsonl"),
    ])?;
    run_cli(&[
        "extract",
        "--records",
        &p("pairs.jsonl"),
        "--embeddings",
        &format!("{data}/embeddings.txt"),
        "--features",
        features,
        "--workers",
        workers,
        "--out",
        &p("train.features"),
    ])?;
    run_cli(&[
        "extract",
        "--records",
        &format!("{data}/judged.jsonl"),
        "--embeddings",
        &format!("{data}/embeddings.txt"),
        "--features",
        features,
        "--workers",
        workers,
        "--out",
        &p("val.features"),
    ])?;
    run_cli(&[
        "--seed",
        "5",
        "train",
        "--train",
        &p("train.features"),
        "--validation",
        &p("val.features"),
        "--max-epochs",
        "30",
        "--out",
        &p("model.txt"),
    ])?;
    run_cli(&[
        "score",
        "--model",
        &p("model.txt"),
        "--features",
        &p("val.features"),
        "--out",
        &p("scores.jsonl"),
    ])?;
    [
        "pairs.jsonl",
        "train.features",
        "val.features",
        "model.txt",
        "scores.jsonl",
    ]
    .iter()
    .map(|f| {
        std::fs::read(dir.join(f))
            .map(|b| (f.to_string(), b))
            .map_err(|e| e.to_string())
    })
    .collect()
}

fn invariance_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let table = random_table(&mut rng, &VOCAB, 8);
    let records: Vec<_> = (0..60)
        .map(|i| {
            let refs = rng.gen_range(1..=5);
            random_record(&mut rng, &format!("r{i}"), refs)
        })
        .collect();
    let res = resources(&records, table);
    let manifest = lib(FeatureManifest::new(&DEFAULT_FEATURES))?;
    let no_cider: Vec<&str> = DEFAULT_FEATURES.iter().copied().filter(|f| *f != "ciderD").collect();
    let max_manifest = lib(FeatureManifest::new(&no_cider))?;

    let (mut perm_worst, mut dup_worst) = (0.0f64, 0.0f64);
    for (i, record) in records.iter().enumerate() {
        let base = lib(extract_features(record, i, &res, &manifest))?;
        let mut shuffled = record.clone();
        shuffled.references.shuffle(&mut rng);
        let perm = lib(extract_features(&shuffled, i, &res, &manifest))?;
        perm_worst = perm_worst.max(max_diff(&base.values, &perm.values));

        // ciderD averages over references, so a duplicate reweights it.
        let base = lib(extract_features(record, i, &res, &max_manifest))?;
        let mut dup = record.clone();
        let extra = dup.references.choose(&mut rng).unwrap().clone();
        dup.references.push(extra);
        let with_dup = lib(extract_features(&dup, i, &res, &max_manifest))?;
        dup_worst = dup_worst.max(max_diff(&base.values, &with_dup.values));
    }
    // Reordering the references only reorders the ciderD sum.
    ensure(perm_worst <= 1e-12, || {
        format!("permutation changed a feature by {perm_worst:e}")
    })?;
    ensure(dup_worst == 0.0, || {
        format!("duplicate changed a feature by {dup_worst:e}")
    })?;
    ensure(max_manifest.with_aggregation(Aggregation::Max).len() == 11, || {
        "manifest".into()
    })?;

    let alphabet: Vec<char> = "aBc dE,.!?'-\t\"xYz ".chars().collect();
    for _ in 0..500 {
        let n = rng.gen_range(0..40);
        let s: String = (0..n).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
        let once = tokenize(&s);
        ensure(tokenize(&once.joined()) == once, || {
            format!("tokenize not idempotent on {s:?}")
        })?;
    }

    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline(a.path(), "1")?;
    let second = pipeline(b.path(), "4")?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok(format!(
        "permutation max diff {perm_worst:.1e}, duplicate diff 0, tokenize idempotent, {} pipeline outputs byte-identical",
        first.len()
    ))
}

// ---------------------------------------------------------------- criterion 8

fn harness_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let cases: Vec<ForcedChoiceCase> = (0..300)
        .filter_map(|i| {
            let refs: Vec<Caption> = (0..5).map(|_| parsed_caption(&mut rng, 2, 6)).collect();
            let a = parsed_caption(&mut rng, 2, 6);
            let b = parsed_caption(&mut rng, 2, 6);
            let pref = if rng.gen_bool(0.5) { Choice::A } else { Choice::B };
            ForcedChoiceCase::new(format!("c{i}"), refs, a, b, pref).ok()
        })
        .collect();
    // A coarse deterministic scorer so that ties occur.
    let salt: u64 = rng.gen();
    let f = move |c: &Caption, refs: &[Caption]| -> lceval::Result<f64> {
        let mut h = salt;
        for byte in c.text().bytes().chain(refs.iter().flat_map(|r| r.text().bytes())) {
            h = (h ^ byte as u64).wrapping_mul(0x100000001b3);
        }
        Ok((h % 4) as f64)
    };
    let neg = move |c: &Caption, refs: &[Caption]| f(c, refs).map(|v| -v);

    let plain = lib(pairwise_accuracy(&cases, f))?;
    let sweep = lib(refcount_sweep(&cases, 5, f))?;
    let last = sweep.last().unwrap();
    ensure(last.references == 5, || "sweep skipped full k".into())?;
    ensure(last.accuracy.to_bits() == plain.accuracy.to_bits(), || {
        format!("sweep {} vs pairwise {}", last.accuracy, plain.accuracy)
    })?;
    let flipped = lib(pairwise_accuracy(&cases, neg))?;
    let total = plain.accuracy + flipped.accuracy + plain.tie_fraction();
    ensure((total - 1.0).abs() <= 1e-12, || format!("accuracies sum to {total}"))?;
    ensure(plain.overall.ties > 0, || "scorer produced no ties".into())?;

    let human: BTreeMap<String, f64> = [("s1", 0.2), ("s2", 0.4), ("s3", 0.7), ("s4", 0.9)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let mut items = Vec::new();
    for (id, &h) in &human {
        for offset in [-0.1, 0.0, 0.1] {
            items.push(ScoredItem {
                metric_score: h + offset,
                human_score: 0.0,
                system_id: Some(id.clone()),
            });
        }
    }
    let report = lib(system_level(&items, &human))?;
    ensure((report.pearson - 1.0).abs() <= 1e-12, || {
        format!("system Pearson {}", report.pearson)
    })?;
    Ok(format!(
        "sweep k=5 equals pairwise ({:.4}), f/-f/ties sum {total}, system Pearson {}",
        plain.accuracy, report.pearson
    ))
}

// ---------------------------------------------------------------- criterion 9

fn round_trip(
    dir: &Path,
    name: &str,
    write: impl Fn(&Path) -> lceval::Result<()>,
    reread_and_write: impl Fn(&Path, &Path) -> lceval::Result<()>,
) -> Result<(), String> {
    let first = dir.join(format!("{name}.1"));
    let second = dir.join(format!("{name}.2"));
    lib(write(&first))?;
    lib(reread_and_write(&first, &second))?;
    let (x, y) = (std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    ensure(x == y, || format!("{name}: second write differs"))
}

fn format_round_trips() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    let mut records = lib(load_records(format!("{data}/judged.jsonl")))?;
    records.extend(lib(load_records(format!("{data}/parsed.jsonl")))?);
    records.extend((0..20).map(|i| random_record(&mut rng, &format!("rand{i}"), 3)));
    round_trip(
        dir.path(),
        "records",
        |p| write_records(p, &records),
        |a, b| write_records(b, &load_records(a)?),
    )?;

    let table = random_table(&mut rng, &VOCAB, 8);
    let parsed: Vec<_> = (0..30).map(|i| random_record(&mut rng, &format!("f{i}"), 4)).collect();
    let res = resources(&parsed, table);
    let manifest = lib(FeatureManifest::new(&DEFAULT_FEATURES))?;
    let vectors: Vec<_> = lib(extract_all(&parsed, &res, &manifest, 1).into_iter().collect())?;
    round_trip(
        dir.path(),
        "features",
        |p| write_features(p, &manifest, &vectors),
        |a, b| {
            let (m, v) = read_features(a, Some(&manifest))?;
            write_features(b, &m, &v)
        },
    )?;

    let sep = separable_set(4, 40, 5);
    let m4 = lib(synthetic_manifest(4))?;
    let cfg = TrainConfig {
        max_epochs: 5,
        ..TrainConfig::default()
    };
    let (model, _) = lib(train(
        &sep,
        &separable_set(4, 20, 6),
        &m4,
        &NetworkConfig::new(4, vec![8, 8]),
        &cfg,
    ))?;
    round_trip(
        dir.path(),
        "model",
        |p| save_model(p, &model),
        |a, b| save_model(b, &load_model(a)?),
    )?;
    let reloaded = lib(load_model(dir.path().join("model.1")))?;
    ensure(reloaded == model, || "reloaded model differs".into())?;
    Ok(format!(
        "{} records, {} feature vectors and a 2-hidden-layer model round-trip byte-identically",
        records.len(),
        vectors.len()
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 9] = [
        ("metric oracles", Some(Duration::from_secs(10)), metric_oracles),
        ("transport", Some(Duration::from_secs(10)), transport_suite),
        ("gradient check", Some(Duration::from_secs(30)), gradient_check),
        ("zero-model identities", None, zero_model_identities),
        ("synthetic training", Some(Duration::from_secs(60)), synthetic_training),
        (
            "architecture ordering",
            Some(Duration::from_secs(120)),
            architecture_ordering,
        ),
        ("invariances and determinism", None, invariance_suite),
        ("harness consistency", None, harness_consistency),
        ("format round trips", None, format_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if elapsed > *limit {
                outcome = Err(format!("took {elapsed:.1?}, limit {limit:?}"));
            }
        }
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {name:<28} {status} ({:.2} s) {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
