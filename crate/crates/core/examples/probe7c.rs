// Scratch tuning probe for the relevance-localization benchmark. Not part
// of the deliverable; deleted before release.

use periocular::dataset::make_split;
use periocular::features::raw_features;
use periocular::learn::{train_gbt, GbtParams, LabeledSet};
use periocular::relevance;
use periocular::synth::{self, SynthConfig};
use rayon::prelude::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let rounds: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(300);
    let depth: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(3);
    let lambda: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let lr: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.1);
    let min_leaf: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(1);

    let t0 = std::time::Instant::now();
    let config = SynthConfig { n_subjects: 100, images_per_subject: 4, seed: 2026, ..Default::default() };
    let samples = synth::generate(&config);
    let records: Vec<_> = samples.iter().map(|s| s.record.clone()).collect();
    let plan = make_split(&records, 0.6, 5, 71).unwrap();

    let vectors: Vec<_> = samples.par_iter().map(|s| raw_features(&s.image).unwrap()).collect();
    let data = LabeledSet::from_vectors(
        &vectors,
        samples.iter().map(|s| s.record.gender.label()).collect(),
        samples.iter().map(|s| s.record.subject_id.clone()).collect(),
    )
    .unwrap();
    let train_rows: Vec<usize> =
        (0..data.len()).filter(|&i| plan.train_subjects.contains(&data.subject_ids[i])).collect();
    let train = LabeledSet::new(
        train_rows.iter().map(|&i| data.features[i].clone()).collect(),
        train_rows.iter().map(|&i| data.labels[i]).collect(),
        train_rows.iter().map(|&i| data.subject_ids[i].clone()).collect(),
        data.spec.clone(),
    )
    .unwrap();
    println!("setup {:.1}s, train rows {}", t0.elapsed().as_secs_f64(), train.len());

    let t1 = std::time::Instant::now();
    let gbt = train_gbt(
        &train,
        GbtParams { n_rounds: rounds, learning_rate: lr, max_depth: depth, lambda, min_leaf },
        7,
    )
    .unwrap();
    let model = gbt.gbt().unwrap();
    println!(
        "gbt {:.1}s, first loss {:.4}, last loss {:.4}",
        t1.elapsed().as_secs_f64(),
        model.round_losses.first().unwrap(),
        model.round_losses.last().unwrap()
    );

    let imp = relevance::importance_from_gbt(&gbt).unwrap();
    let nnz = imp.n_nonzero();
    for top_n in [500usize, 1000] {
        let top = relevance::select_top_n(&imp, top_n);
        let mut ann = 0;
        let mut iris = 0;
        for &i in &top {
            let (x, y) = data.spec.pixel_locus(i).unwrap().unwrap();
            if config.in_annulus(x, y) {
                ann += 1;
            }
            if config.in_iris(x, y) {
                iris += 1;
            }
        }
        println!(
            "top-{top_n}: annulus {:.1}% iris {:.1}% (nnz {nnz})",
            100.0 * ann as f64 / top_n as f64,
            100.0 * iris as f64 / top_n as f64
        );
    }
    // Among nonzero only: how clean is the head of the ranking?
    let ranked = relevance::select_top_n(&imp, nnz);
    let ann_nnz = ranked
        .iter()
        .filter(|&&i| {
            let (x, y) = data.spec.pixel_locus(i).unwrap().unwrap();
            config.in_annulus(x, y)
        })
        .count();
    println!("nonzero head: {}/{} annulus ({:.1}%)", ann_nnz, nnz, 100.0 * ann_nnz as f64 / nnz as f64);

    // Per-round dynamics: root feature sequence of the stump/tree sequence.
    use periocular::learn::tree::Node;
    let mut seen = std::collections::BTreeSet::new();
    let mut reuse: std::collections::BTreeMap<usize, usize> = Default::default();
    let mut splits_per_round = Vec::new();
    for (round, tree) in model.trees.iter().enumerate() {
        let mut count = 0;
        for node in &tree.nodes {
            if let Node::Split { feature, .. } = node {
                seen.insert(*feature);
                *reuse.entry(*feature).or_default() += 1;
                count += 1;
            }
        }
        splits_per_round.push(count);
        if round % 250 == 0 || round + 1 == model.trees.len() {
            println!(
                "round {round}: distinct so far {}, splits this tree {count}, loss {:.4}",
                seen.len(),
                model.round_losses[round]
            );
        }
    }
    let mut counts: Vec<(usize, usize)> = reuse.into_iter().collect();
    counts.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
    println!("most reused features:");
    for (f, c) in counts.iter().take(8) {
        let (x, y) = data.spec.pixel_locus(*f).unwrap().unwrap();
        println!("  f{f} at ({x},{y}) annulus={} reused {c} times", config.in_annulus(x, y));
    }
    let dead_rounds = splits_per_round.iter().filter(|&&c| c == 0).count();
    println!("rounds with zero splits: {dead_rounds}");
}
