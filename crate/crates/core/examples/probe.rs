use csigame_core::*;
use std::time::Instant;

fn main() {
    // C1 margins
    let t0 = Instant::now();
    let real = draw_channel(1, 100_000, 424242).unwrap();
    for r in [0.5, 1.0, 2.0, 4.0] {
        let hq = quantize_channel(&real, &RateProfile::uniform(1, r).unwrap()).unwrap();
        let m = hq.len() as f64;
        let mean = hq.iter().sum::<num_complex::Complex64>() / m;
        let var = hq.iter().map(|z| z.norm_sqr()).sum::<f64>() / m - mean.norm_sqr();
        let corr = hq.iter().zip(real.h.iter()).map(|(q, h)| q * h.conj()).sum::<num_complex::Complex64>() / m;
        let expect = (1.0 - (-r).exp2()).sqrt();
        println!("r={r}: var={var:.5} (dev {:+.3}%) corr={:.5} vs {expect:.5} (dev {:+.3}%)",
            (var - 1.0) * 100.0, corr.re, (corr.re / expect - 1.0) * 100.0);
    }
    println!("C1 elapsed {:.2}s", t0.elapsed().as_secs_f64());

    // C3 margins: worst interference/signal ratio over 100 seeds for n in {2,4}
    let t0 = Instant::now();
    for n in [2usize, 4] {
        let mut worst = 0.0f64;
        for seed in 0..100u64 {
            let real = draw_channel(n, n, 1000 + seed).unwrap();
            let pre = build_precoder(&real.h, 0.0).unwrap();
            let lm = link_metrics(&real.h, &pre, 1.0).unwrap();
            for k in 0..n {
                worst = worst.max(lm.interference_power[k] / lm.signal_power[k]);
            }
        }
        println!("C3 n={n}: worst ratio = {worst:.3e}");
    }
    println!("C3 elapsed {:.2}s", t0.elapsed().as_secs_f64());
}
