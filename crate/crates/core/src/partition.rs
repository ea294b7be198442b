//! Set partitions of `{0, ..., n-1}` as restricted growth strings.
//!
//! A labelling `a` is a restricted growth string when `a[0] = 0` and
//! `a[k] <= 1 + max(a[..k])`. Each partition has exactly one such labelling,
//! and they are produced here in lexicographic order.

use crate::error::{CoverError, Result};
use crate::model::SignalingPolicy;

/// Iterator over all restricted growth strings of length `n`.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    labels: Vec<usize>,
    // maxima[k] = max(labels[..=k])
    maxima: Vec<usize>,
    done: bool,
}

impl SetPartitions {
    pub fn new(n: usize) -> Self {
        Self { labels: vec![0; n], maxima: vec![0; n], done: false }
    }

    fn advance(&mut self) {
        let n = self.labels.len();
        // rightmost position that can still grow
        let mut k = n;
        while k > 1 {
            k -= 1;
            if self.labels[k] <= self.maxima[k - 1] {
                self.labels[k] += 1;
                self.maxima[k] = self.maxima[k - 1].max(self.labels[k]);
                for j in k + 1..n {
                    self.labels[j] = 0;
                    self.maxima[j] = self.maxima[k];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.labels.clone();
        if self.labels.is_empty() {
            self.done = true;
        } else {
            self.advance();
        }
        Some(out)
    }
}

/// Bell number `B(n)`, the number of partitions of an `n`-set.
pub fn bell(n: usize) -> u128 {
    // Bell triangle
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0]
}

/// Every signaling policy on a support of `n` points, capped at `max_support`.
pub fn all_policies(n: usize, max_support: usize) -> Result<Vec<SignalingPolicy>> {
    if n > max_support {
        return Err(CoverError::CapExceeded {
            what: "set partition enumeration",
            size: bell(n),
            cap: bell(max_support).min(u64::MAX as u128) as u64,
        });
    }
    SetPartitions::new(n)
        .map(|labels| SignalingPolicy::from_labels(&labels))
        .collect()
}
