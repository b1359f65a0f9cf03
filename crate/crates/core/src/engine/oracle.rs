use crate::error::{Error, Result};
use crate::models::PerturbationMode;

/// Largest number of enumerated outcomes.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

/// Exact `P[M_n(perturbed) <= x, M_n(original) <= y]` for an iid discrete
/// marginal and a fixed selection pattern (`n = pattern.len()`), by
/// enumerating every path and, in replacing mode, every value of the copy at
/// the unselected indices.
pub fn brute_force_joint_cdf(
    support: &[f64],
    probs: &[f64],
    pattern: &[bool],
    mode: PerturbationMode,
    x: f64,
    y: f64,
) -> Result<f64> {
    if support.is_empty() || support.len() != probs.len() {
        return Err(Error::invalid("support", "support and probs must be nonempty and of equal length"));
    }
    if pattern.is_empty() {
        return Err(Error::invalid("pattern", "must be nonempty"));
    }
    let n = pattern.len();
    let unselected: Vec<usize> = (0..n).filter(|i| !pattern[*i]).collect();
    let free = match mode {
        PerturbationMode::Replacing => n + unselected.len(),
        PerturbationMode::Missing => n,
    };
    let s = support.len();
    let terms = (s as u128).checked_pow(free as u32).unwrap_or(u128::MAX);
    if terms > ENUMERATION_LIMIT {
        return Err(Error::SupportTooLarge {
            terms,
            limit: ENUMERATION_LIMIT,
        });
    }

    let mut digits = vec![0usize; free];
    let mut total = 0.0;
    for _ in 0..terms {
        let prob: f64 = digits.iter().map(|d| probs[*d]).product();
        let path = |i: usize| support[digits[i]];
        let original = (0..n).map(path).fold(f64::NEG_INFINITY, f64::max);
        let perturbed = match mode {
            PerturbationMode::Missing => (0..n).filter(|i| pattern[*i]).map(path).fold(f64::NEG_INFINITY, f64::max),
            PerturbationMode::Replacing => {
                let observed = (0..n).filter(|i| pattern[*i]).map(path);
                let copies = (0..unselected.len()).map(|c| support[digits[n + c]]);
                observed.chain(copies).fold(f64::NEG_INFINITY, f64::max)
            }
        };
        if perturbed <= x && original <= y {
            total += prob;
        }
        // Mixed-radix increment.
        for d in digits.iter_mut() {
            *d += 1;
            if *d < s {
                break;
            }
            *d = 0;
        }
    }
    Ok(total)
}
