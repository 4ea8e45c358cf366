#![allow(dead_code)]

pub mod golden;

use ldp_topk::data::{generate_stream, StreamKind, StreamSpec};
use ldp_topk::{Item, RngHandle};
use rand::Rng;

pub fn normal_stream(sigma: f64, d: u32, n: usize, seed: u64) -> Vec<Item> {
    generate_stream(&StreamSpec {
        kind: StreamKind::Normal { sigma },
        d,
        n,
        seed,
    })
    .unwrap()
}

/// Skewed stream: a small hot range plus uniform background over `d`.
pub fn skewed_stream(d: u32, hot: u32, n: usize, seed: u64) -> Vec<Item> {
    let mut rng = RngHandle::new(seed);
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.6 {
                rng.random_range(0..hot)
            } else {
                rng.random_range(0..d)
            }
        })
        .collect()
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}
