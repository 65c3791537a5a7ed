//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

/// Sort-and-merge written independently of the library.
pub fn merge(mut raw: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    raw.retain(|p| p.0 < p.1);
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Walks `k + alpha` through `[2^j, 2^{j+1})` one integer at a time.
pub fn brute_block_count(merged: &[(f64, f64)], alpha: f64, j: u32) -> u64 {
    let lo = 2f64.powi(j as i32);
    let hi = 2.0 * lo;
    let mut idx = 0;
    let mut count = 0;
    let mut k = lo as i64 - 2;
    loop {
        let x = k as f64 + alpha;
        if x >= hi {
            break;
        }
        if x >= lo {
            while idx < merged.len() && merged[idx].1 <= x {
                idx += 1;
            }
            let inside = idx < merged.len() && merged[idx].0 <= x;
            if !inside {
                count += 1;
            }
        }
        k += 1;
    }
    count
}
