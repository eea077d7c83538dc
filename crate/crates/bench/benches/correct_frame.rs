// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use dfc_bench::delayed_frames;
use dfc_core::interpolation::correct_frame;
use dfc_core::InterpolationConfig;

const FRAMES: usize = 1000;

fn throughput(c: &mut Criterion) {
    let frames = delayed_frames(FRAMES).expect("fixtures");
    let mut group = c.benchmark_group("correct_frame");
    group.throughput(Throughput::Elements(FRAMES as u64));
    group.sample_size(10);
    for (name, cfg) in [
        ("fixed_q12_deg16", InterpolationConfig::default()),
        ("float_deg16", InterpolationConfig::float(16)),
    ] {
        let wm = cfg.weights().expect("weights");
        group.bench_function(name, |b| {
            b.iter(|| {
                for (frame, ticks) in &frames {
                    black_box(correct_frame(frame, *ticks, &cfg, &wm).expect("correct"));
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, throughput);
criterion_main!(benches);
