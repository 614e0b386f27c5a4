use crate::config::SelectionMode;
use crate::error::{AttackError, Result};

/// Indices of the `2k` extreme values of `values`: the `k` largest and the
/// `k` smallest under the selection mode (signed values or magnitudes).
///
/// Selection runs `k` argmax scans followed by `k` argmin scans, each
/// excluding indices already taken; ties resolve to the lowest index. The
/// exclusion makes the result duplicate-free whenever `2k < len`. The
/// returned indices are sorted ascending.
pub fn select_extreme_tokens(values: &[f64], k: usize, mode: SelectionMode) -> Result<Vec<usize>> {
    let s = values.len();
    if 2 * k >= s {
        return Err(AttackError::invalid(
            "tgr.k",
            format!("2k = {} must be below the token count {s}", 2 * k),
        ));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let key = |i: usize| match mode {
        SelectionMode::SignedExtremes => values[i],
        SelectionMode::MagnitudeExtremes => values[i].abs(),
    };
    let mut taken = vec![false; s];
    let mut picked = Vec::with_capacity(2 * k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..s {
            if !taken[i] && best.is_none_or(|b| key(i) > key(b)) {
                best = Some(i);
            }
        }
        let b = best.expect("2k < len leaves candidates");
        taken[b] = true;
        picked.push(b);
    }
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..s {
            if !taken[i] && best.is_none_or(|b| key(i) < key(b)) {
                best = Some(i);
            }
        }
        let b = best.expect("2k < len leaves candidates");
        taken[b] = true;
        picked.push(b);
    }
    picked.sort_unstable();
    Ok(picked)
}
