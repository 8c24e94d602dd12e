//! End-to-end acceptance checks. Each test prints one PASS/FAIL line on
//! stderr (outside the test harness's capture) and then asserts.

use std::io::Write;
use std::time::Instant;

use ndarray::{array, Array2};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use genf::cwgan::{gradient_penalty_batch, gradient_penalty_grads, train_cwgan, Critic, CwganDims, CwganHyper};
use genf::data::{make_windows, synth_ar_process, synth_sinusoid, ArSpec, TimeSeriesDataset};
use genf::harness::{run_pipeline, ExperimentConfig, LONG_FILE, REPLICATES_FILE};
use genf::itc::ksg_mi;
use genf::metrics::{mae, mse, smape, Metric};
use genf::predictor::{loss_and_grads, AttentionConfig, MaskMode, TargetSpec, Transformer};
use genf::strategies::{
    forecast_direct, forecast_genf, run_comparison, ComparisonConfig, SplitMode, StrategyKind,
};
use genf::theory::{
    ar1_noise, corollary_check, empirical_bias_variance, recurrence_b, BiasVarianceConfig, LinearTrainer, TheoryParams,
    DEFAULT_ANY_L_TOLERANCE,
};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {id:>2} {name}: {verdict} ({detail})");
}

fn skip(id: u32, name: &str, detail: &str) {
    let _ = writeln!(std::io::stderr(), "acceptance {id:>2} {name}: SKIP ({detail})");
}

// ---------------------------------------------------------------------------
// 1. strategy trade-off on a coupled AR(2)

/// Three coupled oscillating channels; roots at modulus about 0.9.
fn coupled_ar2() -> ArSpec {
    ArSpec {
        lags: vec![
            array![[1.6, 0.1, 0.0], [0.0, 1.55, 0.1], [0.1, 0.0, 1.5]],
            array![[-0.8, 0.0, 0.0], [0.0, -0.8, 0.0], [0.0, 0.0, -0.8]],
        ],
        noise_std: 1.0,
        burn_in: 500,
    }
}

fn tradeoff_config() -> ComparisonConfig {
    let mut c = ComparisonConfig::default();
    c.window_len = 20;
    c.horizons = vec![8];
    c.synthetic_lens = vec![2, 4, 6];
    c.strategies = vec![StrategyKind::Direct, StrategyKind::Iterative, StrategyKind::Genf];
    c.seeds = (0..5).collect();
    c.predictor.epochs = 20;
    c.cwgan.epochs = 100;
    c.cwgan.critic_steps = 1;
    c.cwgan.learning_rate = 3e-3;
    c.cwgan.eta_sup = 10.0;
    c.cwgan_dims.generator_hidden = 16;
    c
}

#[test]
fn strategy_tradeoff_on_coupled_ar2() {
    let name = "strategy trade-off";
    let t = Instant::now();
    let spec = coupled_ar2();
    spec.validate().unwrap();
    let ds = synth_ar_process(&spec, 50, 400, 7).unwrap();
    let config = tradeoff_config();
    let r = run_comparison(&ds, &config, "acceptance").unwrap();
    let mean = |s: StrategyKind, l: usize| r.cell(s, 8, l).and_then(|c| c.mean(Metric::Mse)).unwrap_or(f64::INFINITY);
    let df = mean(StrategyKind::Direct, 0);
    let it = mean(StrategyKind::Iterative, 7);
    let (best_l, genf) = config
        .synthetic_lens
        .iter()
        .map(|&l| (l, mean(StrategyKind::Genf, l)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let worse = df.max(it);
    let pass = r.failures() == 0 && genf <= df && genf <= it && genf <= 0.97 * worse;
    let genf_cells: Vec<String> =
        config.synthetic_lens.iter().map(|&l| format!("L={l} {:.3}", mean(StrategyKind::Genf, l))).collect();
    report(
        1,
        name,
        pass,
        &format!(
            "DF {df:.3}, IF {it:.3}, GenF [{}], best L={best_l} is {:.1}% below the worse, {} failures, {:.0}s",
            genf_cells.join(", "),
            100.0 * (1.0 - genf / worse),
            r.failures(),
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 2. executable corollary

fn random_params(rng: &mut ChaCha8Rng) -> TheoryParams {
    TheoryParams {
        l1: rng.random_range(0.0..0.6),
        l2: rng.random_range(0.0..0.6),
        alpha: rng.random_range(0.0..2.0),
        sigma_i: rng.random_range(0.0..1.0),
        sigma_d: rng.random_range(0.0..1.0),
        beta0: rng.random_range(0.0..1.0),
        beta1: rng.random_range(0.0..1.0),
        beta2: rng.random_range(0.0..1.0),
        horizon: rng.random_range(2..=12),
        synthetic_len: None,
    }
}

#[test]
fn corollary_scan_confirms_the_condition() {
    let name = "corollary check";
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut holds, mut confirmed, mut draws) = (0, 0, 0);
    while holds < 100 && draws < 1_000_000 {
        draws += 1;
        let p = random_params(&mut rng);
        let c = corollary_check(&p, DEFAULT_ANY_L_TOLERANCE).unwrap();
        if !c.condition_holds {
            continue;
        }
        holds += 1;
        let best = c.best_l.unwrap();
        let u_best = c.scan.iter().find(|s| s.0 == best).unwrap().1;
        let min_scan = c.scan.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        if u_best == min_scan && u_best < c.bounds.u_dir.min(c.bounds.u_iter) {
            confirmed += 1;
        }
    }

    // any-L regime: tie U_dir to U_iter within the tolerance and keep β0 small
    let (mut any_l, mut any_ok, mut tries) = (0, 0, 0);
    while any_l < 100 && tries < 100_000 {
        tries += 1;
        let mut p = random_params(&mut rng);
        p.beta0 *= 0.01;
        let u_iter = p.b(p.horizon).unwrap().value.powi(2);
        let floor = p.sigma_d * p.sigma_d * p.beta2;
        let target = u_iter * (1.0 - rng.random_range(0.0..DEFAULT_ANY_L_TOLERANCE));
        if !(target > floor) || !u_iter.is_finite() {
            continue;
        }
        p.beta1 = (target - floor) / (p.horizon - 1) as f64;
        let c = corollary_check(&p, DEFAULT_ANY_L_TOLERANCE).unwrap();
        if !c.any_l_regime {
            continue;
        }
        any_l += 1;
        if c.scan.iter().all(|&(_, u)| u < c.bounds.u_dir && u < c.bounds.u_iter) {
            any_ok += 1;
        }
    }
    let pass = holds == 100 && confirmed == 100 && any_l > 0 && any_ok == any_l;
    report(
        2,
        name,
        pass,
        &format!("{confirmed}/{holds} condition draws confirmed ({draws} drawn), any-L {any_ok}/{any_l} confirmed"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 3. recurrence against exact fixed-point arithmetic

const FRAC_BITS: u64 = 256;

fn to_fixed(x: f64) -> BigInt {
    assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        return BigInt::from(0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let (mant, exp) = if exp == 0 { (bits & ((1 << 52) - 1), -1074) } else { ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075) };
    let shift = exp + FRAC_BITS as i64;
    assert!(shift >= 0, "value too small for the fixed-point scale");
    BigInt::from(mant) << shift as u64
}

fn from_fixed(v: &BigInt) -> f64 {
    let bits = v.bits();
    let drop = bits.saturating_sub(64);
    let top: BigInt = v >> drop;
    let m: u64 = top.try_into().unwrap();
    (m as f64) * 2f64.powi(drop as i32 - FRAC_BITS as i32)
}

/// `b(k)` with every product exact to 2^-256, stopping once the value is
/// far beyond the f64 range (the sequence is nondecreasing).
fn reference_b(alpha: f64, sigma_i: f64, l1: f64, l2: f64, k: usize) -> (f64, bool) {
    let (a, s, l1, l2) = (to_fixed(alpha), to_fixed(sigma_i), to_fixed(l1), to_fixed(l2));
    let one = BigInt::from(1) << FRAC_BITS;
    let mut b = ((a * &s) >> FRAC_BITS) * &s >> FRAC_BITS;
    let beyond = 1100 + FRAC_BITS;
    for _ in 1..k {
        if b.bits() > beyond {
            return (f64::INFINITY, true);
        }
        let factor = &l1 + &one + ((&b * &l2) >> FRAC_BITS);
        b = (&b * factor) >> FRAC_BITS;
    }
    let v = from_fixed(&b);
    (v, !v.is_finite())
}

#[test]
fn recurrence_matches_exact_reference() {
    let name = "recurrence correctness";
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut ok, mut saturated, mut worst) = (0, 0, 0.0f64);
    for _ in 0..1000 {
        let alpha = rng.random_range(0.0..2.0);
        let sigma_i = rng.random_range(0.0..1.0);
        let l1 = rng.random_range(0.0..1.0);
        let l2 = rng.random_range(0.0..0.5);
        let k = rng.random_range(1..=30);
        let got = recurrence_b(alpha, sigma_i, l1, l2, k).unwrap();
        let (want, want_sat) = reference_b(alpha, sigma_i, l1, l2, k);
        let good = if want_sat {
            saturated += 1;
            got.saturated
        } else {
            let rel = if want == 0.0 { got.value.abs() } else { (got.value - want).abs() / want };
            worst = worst.max(rel);
            !got.saturated && rel <= 1e-12
        };
        ok += usize::from(good);
    }
    let pass = ok == 1000;
    report(3, name, pass, &format!("{ok}/1000 match, {saturated} saturated, worst relative error {worst:.2e}"));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 4. KSG against the Gaussian closed form

#[test]
fn ksg_matches_gaussian_mutual_information() {
    let name = "KSG oracle";
    let t = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for rho in [0.0f64, 0.5, 0.9] {
        let truth = -0.5 * (1.0 - rho * rho).ln();
        let mut total = 0.0;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let n = 4000;
            let mut x = Array2::zeros((n, 1));
            let mut y = Array2::zeros((n, 1));
            for i in 0..n {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                x[[i, 0]] = a;
                y[[i, 0]] = rho * a + (1.0 - rho * rho).sqrt() * b;
            }
            total += ksg_mi(&x, &y, 3).unwrap();
        }
        let err = (total / 10.0 - truth).abs();
        pass &= err <= 0.05;
        details.push(format!("rho={rho} error {err:.4}"));
    }
    pass &= t.elapsed().as_secs() <= 60;
    report(4, name, pass, &format!("{}, {:.1}s", details.join(", "), t.elapsed().as_secs_f64()));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 5. analytic gradients against central differences

fn probe_indices(count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..count).collect();
    for i in 0..all.len() {
        let j = rng.random_range(i..all.len());
        all.swap(i, j);
    }
    all.truncate(20);
    all
}

fn random_windows(n: usize, m: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Array2<f64>> {
    (0..n).map(|_| Array2::from_shape_simple_fn((m, k), || rng.random::<f64>())).collect()
}

#[test]
fn gradients_match_central_differences() {
    let name = "gradient checks";
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let dims = CwganDims { critic_hidden: 2, critic_dense: vec![3], ..Default::default() };
    let mut critic = Critic::new(2, 3, &dims, &mut rng);
    let ws = random_windows(4, 3, 2, &mut rng);
    let refs: Vec<&Array2<f64>> = ws.iter().collect();
    let real = Array2::from_shape_simple_fn((4, 2), || rng.random::<f64>());
    let fake = Array2::from_shape_simple_fn((4, 2), || rng.random::<f64>());
    let eps = [0.2, 0.5, 0.7, 0.9];
    let (_, grads) = gradient_penalty_grads(&critic, &refs, &real, &fake, &eps, true).unwrap();
    let flat: Vec<f64> = grads.iter().flat_map(|t| t.iter().copied()).collect();
    let mut gp_worst = 0.0f64;
    for i in probe_indices(critic.params.count(), &mut rng) {
        let h = 1e-5;
        let base = critic.params.flat_get(i);
        critic.params.flat_set(i, base + h);
        let up = gradient_penalty_batch(&critic, &refs, &real, &fake, &eps).unwrap();
        critic.params.flat_set(i, base - h);
        let down = gradient_penalty_batch(&critic, &refs, &real, &fake, &eps).unwrap();
        critic.params.flat_set(i, base);
        let fd = (up - down) / (2.0 * h);
        gp_worst = gp_worst.max((fd - flat[i]).abs() / fd.abs().max(flat[i].abs()).max(1e-6));
    }

    let config = AttentionConfig {
        num_heads: 1,
        model_width: 2,
        ff_width: 2,
        encoder_layers: 1,
        decoder_layers: 1,
        mask: MaskMode::Causal,
        positional_encoding: true,
        dropout: 0.1,
    };
    let mut t = Transformer::new(2, 3, config, TargetSpec::direct(1, 0), 21).unwrap();
    let ws = random_windows(4, 3, 2, &mut rng);
    let refs: Vec<&Array2<f64>> = ws.iter().collect();
    let y = Array2::from_shape_fn((4, 1), |(i, _)| 0.1 * i as f64);
    let (_, grads) = loss_and_grads(&t, &refs, &y, true).unwrap();
    let flat: Vec<f64> = grads.iter().flat_map(|g| g.iter().copied()).collect();
    let mut pred_bad = 0;
    let mut pred_worst = 0.0f64;
    for i in probe_indices(t.params.count(), &mut rng) {
        let h = 1e-6;
        let base = t.params.flat_get(i);
        t.params.flat_set(i, base + h);
        let (up, _) = loss_and_grads(&t, &refs, &y, false).unwrap();
        t.params.flat_set(i, base - h);
        let (down, _) = loss_and_grads(&t, &refs, &y, false).unwrap();
        t.params.flat_set(i, base);
        let fd = (up - down) / (2.0 * h);
        let diff = (fd - flat[i]).abs();
        // gradients at rounding level count as zero
        if diff >= 1e-8 {
            let rel = diff / fd.abs().max(flat[i].abs());
            pred_worst = pred_worst.max(rel);
            pred_bad += usize::from(rel >= 1e-4);
        }
    }
    let pass = critic.params.count() <= 200 && t.params.count() <= 200 && gp_worst < 1e-4 && pred_bad == 0;
    report(
        5,
        name,
        pass,
        &format!(
            "penalty: {} params, worst {gp_worst:.1e}; predictor: {} params, worst {pred_worst:.1e}",
            critic.params.count(),
            t.params.count()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 6. supervised term ablation on sinusoids

fn one_step_mse(g: &genf::cwgan::Generator, test: &genf::data::WindowedDataset, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = test.num_features();
    let noise = Array2::from_shape_simple_fn((test.len(), k), || StandardNormal.sample(&mut rng));
    let out = g.forward_batch(&test.windows(), &noise).unwrap();
    let mut total = 0.0;
    for (i, s) in test.samples.iter().enumerate() {
        let target = s.target(1).unwrap();
        for j in 0..k {
            total += (out[[i, j]] - target[j]).powi(2);
        }
    }
    total / (test.len() * k) as f64
}

#[test]
fn supervised_term_improves_generation() {
    let name = "CWGAN-TS ablation";
    let t = Instant::now();
    let m = 10;
    let (mut ts, mut gp, mut pers) = (0.0, 0.0, 0.0);
    for seed in 0..3u64 {
        let ds = synth_sinusoid(6, 150, 2, 12.0, 0.05, seed).unwrap();
        let ids = ds.unit_ids();
        let train = make_windows(&ds.subset(&ids[..4], None), m, &[1]).unwrap().0;
        let test = make_windows(&ds.subset(&ids[4..], None), m, &[1]).unwrap().0;
        let fit = |eta: f64| {
            let hyper = CwganHyper { eta_sup: eta, epochs: 1000, seed, ..Default::default() };
            train_cwgan(&train, &CwganDims::default(), &hyper).unwrap().0
        };
        ts += one_step_mse(&fit(1.0), &test, seed) / 3.0;
        gp += one_step_mse(&fit(0.0), &test, seed) / 3.0;
        pers += test
            .samples
            .iter()
            .map(|s| (0..2).map(|j| (s.window[[m - 1, j]] - s.target(1).unwrap()[j]).powi(2)).sum::<f64>())
            .sum::<f64>()
            / (2 * test.len()) as f64
            / 3.0;
    }
    let pass = ts < gp && ts < pers;
    report(
        6,
        name,
        pass,
        &format!("CWGAN-TS {ts:.4}, CWGAN-GP {gp:.4}, persistence {pers:.4}, {:.0}s", t.elapsed().as_secs_f64()),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 7. bias-variance closure

#[test]
fn decomposition_closes_on_ar1() {
    let name = "decomposition closure";
    let (phi, sigma) = (0.9, 1.0);
    let spec = ArSpec::ar1(phi, sigma);
    let config = BiasVarianceConfig { horizons: vec![1, 4, 8], ensemble_size: 10, ..Default::default() };
    let r = empirical_bias_variance(&spec, &config, &LinearTrainer::default()).unwrap();
    let mut pass = r.horizons.len() == 3;
    let mut details = Vec::new();
    for h in &r.horizons {
        let z = ar1_noise(phi, sigma, h.horizon);
        let z_err = (h.noise - z).abs() / z;
        pass &= h.closure_gap() <= 3.0 && z_err <= 0.10;
        details.push(format!("N={} gap {:.2} SE, Z off by {:.1}%", h.horizon, h.closure_gap(), 100.0 * z_err));
    }
    report(7, name, pass, &details.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 8. metric oracles

#[test]
fn metrics_match_loop_oracles() {
    let name = "metric oracles";
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pass = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (mut se, mut ae, mut sm) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let d = p[i] - t[i];
            se += d * d;
            ae += d.abs();
            let denom = p[i].abs() + t[i].abs();
            sm += if denom == 0.0 { 0.0 } else { 2.0 * d.abs() / denom };
        }
        pass &= mse(&p, &t).unwrap() == se / n as f64;
        pass &= mae(&p, &t).unwrap() == ae / n as f64;
        pass &= smape(&p, &t).unwrap() == 100.0 * sm / n as f64;
        pass &= smape(&p, &t).unwrap() == smape(&t, &p).unwrap();
        let c = 2f64.powi(rng.random_range(-20..20));
        let (cp, ct): (Vec<f64>, Vec<f64>) = (p.iter().map(|v| v * c).collect(), t.iter().map(|v| v * c).collect());
        pass &= smape(&cp, &ct).unwrap() == smape(&p, &t).unwrap();
    }
    report(8, name, pass, "1000 random vectors, exact equality");
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 9. determinism and the L = 0 degeneracy

#[test]
fn genf_degenerates_and_runs_are_reproducible() {
    let name = "determinism and degeneracy";
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut g_rng = ChaCha8Rng::seed_from_u64(10);
    let generator = genf::cwgan::Generator::new(2, 6, &CwganDims::default(), &mut g_rng);
    let predictor = Transformer::new(2, 6, AttentionConfig::default(), TargetSpec::direct(3, 1), 4).unwrap();
    let mut identical = true;
    for i in 0..50 {
        let w = Array2::from_shape_simple_fn((6, 2), || rng.random::<f64>());
        let a = forecast_genf(&generator, &predictor, &w, 0, 3, i).unwrap();
        let b = forecast_direct(&predictor, &w, 3).unwrap();
        identical &= a.to_bits() == b.to_bits();
    }

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let text = |dir: &std::path::Path| {
        format!(
            r#"
output_dir = "{}"
[dataset]
kind = "synthetic"
lags = [[[0.6, 0.1], [0.0, 0.5]]]
units = 12
length = 60
[experiment]
window_len = 8
horizons = [3]
synthetic_lens = [1]
strategies = ["direct", "genf", "persistence"]
seeds = [0, 1]
[experiment.predictor]
epochs = 2
[experiment.cwgan]
epochs = 2
"#,
            dir.display()
        )
    };
    let mut reports = Vec::new();
    for d in &dirs {
        let c = ExperimentConfig::from_toml_str(&text(d.path())).unwrap();
        reports.push(run_pipeline(&c).unwrap());
    }
    let same_files = [REPLICATES_FILE, LONG_FILE].iter().all(|f| {
        std::fs::read(dirs[0].path().join(f)).unwrap() == std::fs::read(dirs[1].path().join(f)).unwrap()
    });
    let pass = identical && same_files && reports[0].failures() == 0 && reports[0].records == reports[1].records;
    report(9, name, pass, &format!("L=0 bit-identical: {identical}, metric CSVs byte-identical: {same_files}"));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 10. public air-quality trend (needs the data on disk)

/// Path to the UCI Beijing multi-site air-quality CSV (all stations in one file).
const UCI_ENV: &str = "GENF_UCI_AIR_QUALITY";

#[test]
fn air_quality_genf_trend() {
    let name = "air-quality trend";
    let Some(path) = std::env::var_os(UCI_ENV) else {
        skip(10, name, &format!("set {UCI_ENV} to the multi-site air-quality CSV to run"));
        return;
    };
    let t = Instant::now();
    let source = genf::harness::DatasetSource::Csv {
        path: path.into(),
        schema: "preset:uci-air-quality".into(),
        units: None,
        impute: true,
    };
    let full: TimeSeriesDataset = source.load().unwrap();
    let mut ids = full.unit_ids();
    ids.sort();
    let ds = full.subset(&ids[..3], None);
    let target = ds.feature_index("NO2").expect("NO2 column");
    let mut c = ComparisonConfig::default();
    c.horizons = vec![12];
    c.synthetic_lens = vec![2];
    c.strategies = vec![StrategyKind::Direct, StrategyKind::Genf];
    c.target = target;
    c.seeds = vec![0, 1, 2];
    c.split = SplitMode::Chronological;
    c.predictor.epochs = 200;
    c.cwgan.epochs = 200;
    c.itc.generator_fraction = 0.5;
    let r = run_comparison(&ds, &c, "air-quality").unwrap();
    let mean = |s, l| r.cell(s, 12, l).and_then(|c| c.mean(Metric::Mae)).unwrap_or(f64::INFINITY);
    let (df, gf) = (mean(StrategyKind::Direct, 0), mean(StrategyKind::Genf, 2));
    let pass = gf <= df;
    report(10, name, pass, &format!("DF MAE {df:.3}, GenF-2 MAE {gf:.3}, {:.0}s", t.elapsed().as_secs_f64()));
    assert!(pass);
}
