use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Corpus;
use crate::error::{Error, Result};

/// Labeled record indices grouped by class, each group in record order.
fn by_class(corpus: &Corpus) -> Result<Vec<Vec<usize>>> {
    let mut groups = vec![Vec::new(); corpus.label_set().len()];
    for (i, r) in corpus.records().iter().enumerate() {
        if let Some(l) = r.label {
            groups[l].push(i);
        }
    }
    if groups.iter().all(Vec::is_empty) {
        return Err(Error::NoLabeledRecords);
    }
    Ok(groups)
}

/// Splits the labeled records into `k` disjoint folds.
///
/// Each class is shuffled and dealt round-robin, continuing from where the
/// previous class stopped, so per-class counts and total fold sizes both
/// differ by at most one across folds. Unlabeled records are left out.
/// Fold contents are returned in ascending record order.
pub fn stratified_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut groups = by_class(corpus)?;
    let labeled: usize = groups.iter().map(Vec::len).sum();
    if k > labeled {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {labeled} labeled records"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::with_capacity(labeled / k + 1); k];
    let mut slot = 0;
    for group in &mut groups {
        group.shuffle(&mut rng);
        for &idx in group.iter() {
            folds[slot % k].push(idx);
            slot += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Draws a stratified train/test split of the labeled records.
///
/// Each class with `n` labeled records contributes `round(fraction * n)`
/// test records, clamped to `[1, n - 1]` so every class stays in training.
/// Singleton classes are never held out. Returns `(train, test)`, both sorted.
pub fn stratified_holdout(
    corpus: &Corpus,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut groups = by_class(corpus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for group in &mut groups {
        group.shuffle(&mut rng);
        let n = group.len();
        let held = if n < 2 {
            0
        } else {
            ((fraction * n as f64).round() as usize).clamp(1, n - 1)
        };
        test.extend_from_slice(&group[..held]);
        train.extend_from_slice(&group[held..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
