//! Deterministic stratified train/test splitting.

use crate::error::{Error, Result};
use crate::rng;

use super::Label;

/// Split sample indices into train and test sets.
///
/// The train set holds `round(train_frac * n)` samples overall, drawn per
/// class with largest-remainder rounding so class balance carries over. Any
/// class with at least two samples lands in both parts, even if that bends
/// the overall count by one. Shuffling is seeded, so the same inputs always
/// produce the same split; both index lists come back in ascending order.
pub fn split_train_test(
    labels: &[Label],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid_input(format!(
            "train fraction must be in (0, 1), got {train_frac}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid_input("cannot split an empty sample set"));
    }

    let classes = [Label::Interictal, Label::Preictal];
    let by_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();

    // Largest-remainder quota per class, targeting round(frac * n) in total.
    let total_target = (train_frac * labels.len() as f64).round() as usize;
    let mut quota: Vec<usize> = Vec::with_capacity(classes.len());
    let mut remainders: Vec<(f64, usize)> = Vec::new();
    for (k, members) in by_class.iter().enumerate() {
        let ideal = train_frac * members.len() as f64;
        quota.push(ideal.floor() as usize);
        remainders.push((ideal - ideal.floor(), k));
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut short = total_target.saturating_sub(quota.iter().sum());
    for &(_, k) in &remainders {
        if short == 0 {
            break;
        }
        if quota[k] < by_class[k].len() {
            quota[k] += 1;
            short -= 1;
        }
    }

    // Stratification guarantee: a class with two or more samples must appear
    // on both sides. Rebalance the other classes to recover the total where
    // possible; where not, stratification wins.
    for (k, members) in by_class.iter().enumerate() {
        if members.len() >= 2 {
            quota[k] = quota[k].clamp(1, members.len() - 1);
        }
    }
    loop {
        let sum: usize = quota.iter().sum();
        let grow = match sum.cmp(&total_target) {
            std::cmp::Ordering::Equal => break,
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
        };
        let candidate = (0..classes.len()).find(|&k| {
            let n = by_class[k].len();
            let (lo, hi) = if n >= 2 { (1, n - 1) } else { (0, n) };
            if grow {
                quota[k] < hi
            } else {
                quota[k] > lo
            }
        });
        match candidate {
            Some(k) => quota[k] = if grow { quota[k] + 1 } else { quota[k] - 1 },
            None => break,
        }
    }

    let mut rng = rng::seeded(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (k, members) in by_class.iter().enumerate() {
        let mut order = members.clone();
        rng::shuffle(&mut order, &mut rng);
        train.extend_from_slice(&order[..quota[k]]);
        test.extend_from_slice(&order[quota[k]..]);
    }
    train.sort_unstable();
    test.sort_unstable();

    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid_input(format!(
            "{} samples cannot fill both train and test at fraction {train_frac}",
            labels.len()
        )));
    }
    Ok((train, test))
}
