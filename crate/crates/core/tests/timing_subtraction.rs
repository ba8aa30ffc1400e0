mod common;

use common::{config, correlation, pipeline, run_series};
use spinpair::pipeline_io::{for_each_block, Accumulator, RunStatus};
use spinpair::polarimeter::accept_scatter;
use spinpair::timing::{classify_coincidence, CoincidenceClass, TimingConfig};

const FIXED_A: &str = "analyzing_power_source=\"fixed\"";

#[test]
fn delta_t_comb_sits_on_bunch_multiples() {
    let cfg = config(71, 400_000, &["random_pair_fraction=0.6"]);
    let h = pipeline(&cfg).delta_t;
    let period = TimingConfig::default().bunch_period_ns();
    for k in -6..=6 {
        let centre = f64::from(k) * period;
        let near: Vec<usize> = (0..h.n_bins()).filter(|&i| (h.center(i) - centre).abs() <= 6.0).collect();
        let peak = *near.iter().max_by_key(|&&i| h.counts[i]).unwrap();
        assert!((h.center(peak) - centre).abs() <= 2.0, "k={k}: peak at {}", h.center(peak));
        // the gap between bunches is empty
        let gap = (0..h.n_bins())
            .filter(|&i| (h.center(i) - centre - period / 2.0).abs() < 1.0)
            .map(|i| h.counts[i])
            .sum::<u64>();
        assert!(gap * 100 < h.counts[peak], "k={k}: gap {gap}");
    }
}

#[test]
fn subtraction_is_unbiased_with_injected_randoms() {
    // bias against the closed-form singlet value, which the no-random runs also follow
    for (a, b, truth) in [(0.0, 90.0, 0.0), (0.0, 0.0, -1.0)] {
        let (mean, se) = run_series(0.2, a, b, 20, 8_000);
        assert!((mean - truth).abs() < 2.0 * se, "E({a},{b}) = {mean} ± {se}");
        let (clean, clean_se) = run_series(0.0, a, b, 20, 9_000);
        assert!((mean - clean).abs() < 2.0 * se.hypot(clean_se), "{mean} vs {clean}");
    }
}

#[test]
fn unsubtracted_randoms_dilute_the_correlation() {
    let cfg = config(
        31,
        1_000_000,
        &["random_pair_fraction=0.2", "subtract_randoms=false", FIXED_A],
    );
    let e = correlation(&cfg, 0.0, 0.0);
    // 1/13 of the randoms share the true bunch; they dilute −1 towards −(1 − f/13)/(1 − 12f/13)
    let f = 0.2;
    let diluted = -(1.0 - f) / (1.0 - 12.0 * f / 13.0);
    assert!((e.e_value - diluted).abs() < 3.0 * e.sigma, "{} vs {diluted}", e.e_value);
}

#[test]
fn pure_randoms_show_no_correlation() {
    let cfg = config(
        41,
        1_000_000,
        &["random_pair_fraction=1.0", "subtract_randoms=false", FIXED_A],
    );
    let doc = pipeline(&cfg).document;
    assert_eq!(doc.status, RunStatus::Ok);
    assert!(!doc.correlations.is_empty());
    for e in &doc.correlations {
        assert!(e.e_value.abs() < 3.0 * e.sigma, "{e:?}");
    }

    // With subtraction the net true count is zero apart from first-sideband
    // randoms whose flight-time spread carries them inside the true window:
    // each such pair adds 1 to the true class and is missing from the
    // sideband, so E[net] = L + L/12.
    let cfg = config(42, 1_000_000, &["random_pair_fraction=1.0", FIXED_A]);
    let mut leaked = 0u64;
    let mut acc = Accumulator::new(&cfg).unwrap();
    for_each_block(&cfg, |events| {
        for e in events {
            acc.push(e)?;
            let accepted = cfg.analysis.cuts.check(e).is_ok() && accept_scatter(e, &cfg.analyzer).is_ok();
            if accepted
                && e.truth.unwrap().bunch_offset != 0
                && classify_coincidence(e, &cfg.timing).unwrap() == CoincidenceClass::True
            {
                leaked += 1;
            }
        }
        Ok(())
    })
    .unwrap();
    let doc = acc.finish().unwrap().document;
    let c = doc.coincidences;
    let w = doc.subtraction.random_weight;
    let net = c.n_true as f64 + w * c.n_random as f64;
    let expected = leaked as f64 * (1.0 + doc.subtraction.sideband_ratio);
    let sigma = (c.n_true as f64 + w * w * c.n_random as f64).sqrt();
    assert!((net - expected).abs() < 3.0 * sigma, "net true pairs {net} ± {sigma}, leakage {expected}");
    // the leak is a small fraction of all randoms
    assert!((leaked as f64) < 0.03 * (c.n_true + c.n_random) as f64);
}
