//! Acceptance suite: one test per release criterion, each verifying the
//! library or the binary against an independent oracle or a frozen analytic
//! value. Every test prints a single pass/fail line through the harness.
//!
//! 1. Synchronization vs a naive per-bin oracle on random signals.
//! 2. Analytic synchronization cases and bit-exact gain invariance.
//! 3. The sync-selected pair competes across seeded synthetic datasets.
//! 4. The SVM dual solver vs an analytic case and a projected-gradient QP.
//! 5. Kernel-weight learning: reduction, symmetry, norms, monotonicity, and
//!    a brute-force weight-grid oracle.
//! 6. Spectrogram vs direct convolution, ridge placement, PCA contracts,
//!    and exact downsample means.
//! 7. End-to-end accuracy, wall time, and report tables on the default
//!    synthetic dataset.
//! 8. Byte-identical outputs for identical seeds.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use lfpsync::features::{downsample_time, MorletPlan, SpectrogramConfig};
use lfpsync::kernel::{gram, kernel_eval, KernelSpec};
use lfpsync::mkl::{mkl_train, TrainConfig};
use lfpsync::pca::pca_fit;
use lfpsync::pipeline::{self, PairMode, PipelineConfig};
use lfpsync::rng;
use lfpsync::svm::{solve_binary_svm, SvmSolution};
use lfpsync::sync::{sync_measure, DEN_EPS, MAG_EPS};
use lfpsync::synth::{synth_recording, SynthConfig};

const TAU: f64 = std::f64::consts::TAU;

// ---------------------------------------------------------------- criterion 1

/// Naive O(n^2) reimplementation of the synchronization score: explicit
/// cosine/sine sums per bin, the same retention rules, the same ratio.
fn oracle_sync(x: &[f64], y: &[f64], band_hz: (f64, f64), fs: f64) -> f64 {
    let peak_norm = |s: &[f64]| -> Vec<f64> {
        let peak = s.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if peak > 0.0 {
            s.iter().map(|&v| v / peak).collect()
        } else {
            s.to_vec()
        }
    };
    let xn = peak_norm(x);
    let yn = peak_norm(y);
    let n = xn.len();
    let coeffs = |s: &[f64]| -> Vec<(f64, f64)> {
        let scale = 2.0 / n as f64;
        (0..n / 2 + 1)
            .map(|k| {
                let mut a = 0.0;
                let mut b = 0.0;
                for (t, &v) in s.iter().enumerate() {
                    let ang = TAU * k as f64 * t as f64 / n as f64;
                    a += v * ang.cos();
                    b += v * ang.sin();
                }
                (a * scale, b * scale)
            })
            .collect()
    };
    let cx = coeffs(&xn);
    let cy = coeffs(&yn);
    let eligible_end = if n % 2 == 0 { cx.len() - 1 } else { cx.len() };
    let max_mag = |c: &[(f64, f64)]| {
        c[1..eligible_end]
            .iter()
            .map(|&(a, b)| a.hypot(b))
            .fold(0.0f64, f64::max)
    };
    let x_floor = MAG_EPS * max_mag(&cx);
    let y_floor = MAG_EPS * max_mag(&cy);
    let hi = band_hz.1.min(fs / 2.0);

    let mut lags = Vec::new();
    for k in 1..eligible_end {
        let f = k as f64 * fs / n as f64;
        if f < band_hz.0 || f > hi {
            continue;
        }
        let (ax, bx) = cx[k];
        let (ay, by) = cy[k];
        if ax.hypot(bx) < x_floor || ay.hypot(by) < y_floor {
            continue;
        }
        let num = ax * by - bx * ay;
        let den = ax * ay + bx * by;
        let guard = DEN_EPS * ((ax * ay).abs() + (bx * by).abs() + MAG_EPS);
        if den.abs() < guard {
            continue;
        }
        lags.push((num / den).abs());
    }
    assert!(lags.len() >= 2, "oracle retained {} bins", lags.len());
    let deltas: Vec<f64> = lags.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let std = if deltas.len() < 2 {
        0.0
    } else {
        (deltas.iter().map(|&d| (d - mean) * (d - mean)).sum::<f64>() / deltas.len() as f64).sqrt()
    };
    1.0 / (1.0 + mean + std)
}

#[test]
fn criterion_1_sync_matches_the_per_bin_oracle_on_random_pairs() {
    let fs = 100.0;
    let band = (1.0, 45.0);
    let started = Instant::now();
    for case in 0..200u64 {
        let n = 37 + (rng::raw(900, case, 0) % 220) as usize;
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        rng::fill_normal(901, case, 0, &mut x);
        rng::fill_normal(902, case, 0, &mut y);
        let lib = sync_measure(&x, &y, band, fs).unwrap().score;
        let oracle = oracle_sync(&x, &y, band, fs);
        assert!(
            (lib - oracle).abs() <= 1e-9,
            "case {case} (n = {n}): library {lib} vs oracle {oracle}"
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(5),
        "200 oracle comparisons took {elapsed:?}, budget is 5 s"
    );
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_2_sync_analytic_cases_and_bit_exact_gain_invariance() {
    // Self-synchronization is exact: every phase lag is exactly zero.
    let mut x = vec![0.0; 512];
    rng::fill_normal(910, 0, 0, &mut x);
    assert_eq!(sync_measure(&x, &x, (1.0, 100.0), 512.0).unwrap().score, 1.0);

    // A constant phase rotation applied to every bin leaves the lag series
    // flat, so the score is 1 up to rounding.
    let n = 128;
    let fs = 128.0;
    let delta = 0.7;
    let mut a = vec![0.0; 32];
    let mut phase = vec![0.0; 32];
    rng::fill_normal(911, 0, 0, &mut a);
    rng::fill_normal(911, 1, 0, &mut phase);
    let tone_sum = |rot: f64| -> Vec<f64> {
        (0..n)
            .map(|t| {
                (3..=20)
                    .map(|k| {
                        let amp = 1.0 + 0.25 * a[k];
                        amp * (TAU * k as f64 * t as f64 / n as f64 + phase[k] + rot).cos()
                    })
                    .sum()
            })
            .collect()
    };
    let base = tone_sum(0.0);
    let rotated = tone_sum(delta);
    let s = sync_measure(&base, &rotated, (1.0, 60.0), fs).unwrap();
    assert!((s.score - 1.0).abs() < 1e-12, "rotation score {}", s.score);

    // Two tones lagged by 0.2 and 0.5 rad: the lag series is
    // {tan 0.2, tan 0.5} and the score is 1/(1 + |tan 0.5 - tan 0.2|).
    let n = 1000;
    let fs = 1000.0;
    let x: Vec<f64> = (0..n)
        .map(|t| {
            let tt = t as f64 / n as f64;
            (TAU * 10.0 * tt).cos() + (TAU * 20.0 * tt).cos()
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|t| {
            let tt = t as f64 / n as f64;
            (TAU * 10.0 * tt - 0.2).cos() + (TAU * 20.0 * tt - 0.5).cos()
        })
        .collect();
    let s = sync_measure(&x, &y, (1.0, 100.0), fs).unwrap();
    assert!((s.score - 0.744274).abs() < 1e-6, "two-tone score {}", s.score);

    // Per-channel gain must not move the score at all. The samples are
    // integer multiples of 100, so multiplying by -3, -1, 0.01, or 7 is
    // exact and the normalized signal comes out bit-identical.
    let n = 240;
    let fs = 240.0;
    let quantize = |v: f64| (v * 1000.0).round() * 100.0;
    let x: Vec<f64> = (0..n)
        .map(|t| quantize((TAU * 9.0 * t as f64 / n as f64).cos()))
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|t| {
            let ph = TAU * 9.0 * t as f64 / n as f64;
            quantize((ph + 0.4).cos() + 0.5 * (23.0 / 9.0 * ph + 0.1).sin())
        })
        .collect();
    let base = sync_measure(&x, &y, (1.0, 100.0), fs).unwrap();
    let gains = [-3.0, -1.0, 0.01, 7.0];
    for &gx in &gains {
        for &gy in &gains {
            let sx: Vec<f64> = x.iter().map(|&v| v * gx).collect();
            let sy: Vec<f64> = y.iter().map(|&v| v * gy).collect();
            for (s, v) in sx.iter().zip(&x) {
                assert_eq!(s / gx, *v, "gain {gx} is not sample-exact");
            }
            for (s, v) in sy.iter().zip(&y) {
                assert_eq!(s / gy, *v, "gain {gy} is not sample-exact");
            }
            let scaled = sync_measure(&sx, &sy, (1.0, 100.0), fs).unwrap();
            assert_eq!(
                scaled.score.to_bits(),
                base.score.to_bits(),
                "gains ({gx}, {gy}) moved the score from {} to {}",
                base.score,
                scaled.score
            );
        }
    }
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_3_selected_pair_competes_across_seeds() {
    let started = Instant::now();
    let mut at_least_mean = 0;
    let mut at_the_top = 0;
    let mut lines = Vec::new();
    for seed in 0..10u64 {
        let rec = synth_recording(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig {
            pair: PairMode::All,
            ..PipelineConfig::default()
        };
        let out = pipeline::run(&rec, &cfg).unwrap();
        let per_pair = out.report.per_pair.expect("sweep report");
        let best = per_pair
            .entries
            .iter()
            .map(|e| e.accuracy_pct)
            .fold(f64::NEG_INFINITY, f64::max);
        if per_pair.selected_accuracy_pct >= per_pair.mean_accuracy_pct {
            at_least_mean += 1;
        }
        if per_pair.selected_accuracy_pct == best {
            at_the_top += 1;
        }
        lines.push(format!(
            "seed {seed}: selected {:?} at {:.1}%, mean {:.1}%, best {:.1}%",
            per_pair.selected, per_pair.selected_accuracy_pct, per_pair.mean_accuracy_pct, best
        ));
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(600),
        "ten full sweeps took {elapsed:?}, budget is 10 min"
    );
    assert!(
        at_least_mean >= 9,
        "selected pair beat the mean in only {at_least_mean}/10 seeds:\n{}",
        lines.join("\n")
    );
    assert!(
        at_the_top >= 8,
        "selected pair topped the sweep in only {at_the_top}/10 seeds:\n{}",
        lines.join("\n")
    );
}

// ---------------------------------------------------------------- criterion 4

/// Projected-gradient ascent on the soft-margin dual. The feasible set is
/// the box [0, C]^n cut by the hyperplane sum(alpha * y) = 0; the projection
/// shifts along y by a bisected multiplier until the constraint holds.
fn projected_gradient_qp(gram: &[Vec<f64>], y: &[f64], c: f64, iters: usize) -> Vec<f64> {
    let n = y.len();
    let project = |v: &[f64]| -> Vec<f64> {
        let vmax = v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let mut lo = -(c + vmax + 1.0);
        let mut hi = c + vmax + 1.0;
        for _ in 0..90 {
            let lambda = 0.5 * (lo + hi);
            let drift: f64 = (0..n)
                .map(|i| y[i] * (v[i] - lambda * y[i]).clamp(0.0, c))
                .sum();
            if drift > 0.0 {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        let lambda = 0.5 * (lo + hi);
        (0..n).map(|i| (v[i] - lambda * y[i]).clamp(0.0, c)).collect()
    };
    // Step size 1/L from a row-sum bound on the Hessian's spectral norm.
    let lipschitz = (0..n)
        .map(|i| (0..n).map(|j| gram[i][j].abs()).sum::<f64>())
        .fold(1.0f64, f64::max);
    let step = 1.0 / lipschitz;
    let mut alpha = project(&vec![0.0; n]);
    for _ in 0..iters {
        let grad: Vec<f64> = (0..n)
            .map(|i| 1.0 - y[i] * (0..n).map(|j| alpha[j] * y[j] * gram[i][j]).sum::<f64>())
            .collect();
        let moved: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
        alpha = project(&moved);
    }
    alpha
}

fn dual_objective(gram: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let linear: f64 = alpha.iter().sum();
    let quad: f64 = (0..n)
        .map(|i| {
            alpha[i] * y[i] * (0..n).map(|j| alpha[j] * y[j] * gram[i][j]).sum::<f64>()
        })
        .sum();
    linear - 0.5 * quad
}

/// Offset recovered the same way the library does it: the mean residual
/// over margin support vectors, or the midpoint rule when none are free.
fn oracle_bias(gram: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = y.len();
    let score = |i: usize| (0..n).map(|j| alpha[j] * y[j] * gram[j][i]).sum::<f64>();
    let margin = 1e-8 * c;
    let mut sum = 0.0;
    let mut count = 0;
    for i in 0..n {
        if alpha[i] > margin && alpha[i] < c - margin {
            sum += y[i] - score(i);
            count += 1;
        }
    }
    if count > 0 {
        return sum / count as f64;
    }
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for i in 0..n {
        let v = y[i] - score(i);
        if (y[i] > 0.0 && alpha[i] < c) || (y[i] < 0.0 && alpha[i] > 0.0) {
            m_up = m_up.max(v);
        }
        if (y[i] > 0.0 && alpha[i] > 0.0) || (y[i] < 0.0 && alpha[i] < c) {
            m_low = m_low.min(v);
        }
    }
    0.5 * (m_up + m_low)
}

#[test]
fn criterion_4_svm_matches_the_analytic_case_and_the_qp_oracle() {
    // Two mirrored points: both margins active, alpha = (1/2, 1/2), zero
    // offset.
    let gram = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
    let y = [1.0, -1.0];
    let sol = solve_binary_svm(&gram, &y, 100.0).unwrap();
    assert!((sol.alpha[0] - 0.5).abs() < 1e-6, "alpha0 {}", sol.alpha[0]);
    assert!((sol.alpha[1] - 0.5).abs() < 1e-6, "alpha1 {}", sol.alpha[1]);
    assert!(sol.bias.abs() < 1e-6, "offset {}", sol.bias);

    // Twenty random 8-point problems on a ridge-strengthened RBF Gram. The
    // ridge keeps the dual strongly concave so plain projected gradient
    // converges well inside the comparison tolerance.
    for case in 0..20u64 {
        let n = 8;
        let dims = 3;
        let mut points = vec![vec![0.0; dims]; n];
        let mut y = vec![0.0; n];
        for (i, p) in points.iter_mut().enumerate() {
            rng::fill_normal(920 + case, i as u64, 0, p);
            y[i] = if i < 2 {
                if i == 0 { 1.0 } else { -1.0 }
            } else if rng::uniform(921 + case, i as u64, 0) < 0.5 {
                1.0
            } else {
                -1.0
            };
        }
        let c = if case % 2 == 0 { 1.0 } else { 10.0 };
        let gamma = 0.5;
        let spec = KernelSpec::Rbf { gamma };
        let mut gram_m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                gram_m[i][j] = kernel_eval(&spec, &points[i], &points[j]).unwrap();
            }
            gram_m[i][i] += 0.2;
        }

        let sol = solve_binary_svm(&gram_m, &y, c).unwrap();
        let oracle_alpha = projected_gradient_qp(&gram_m, &y, c, 20_000);

        let lib_obj = sol.dual_objective(&y);
        let or_obj = dual_objective(&gram_m, &y, &oracle_alpha);
        assert!(
            (lib_obj - or_obj).abs() <= 1e-3,
            "case {case}: dual objective {lib_obj} vs oracle {or_obj}"
        );

        let b_or = oracle_bias(&gram_m, &y, &oracle_alpha, c);
        for i in 0..n {
            let lib_pred = (sol.scores[i] + sol.bias).is_sign_positive();
            let or_score: f64 = (0..n).map(|j| oracle_alpha[j] * y[j] * gram_m[j][i]).sum();
            let or_pred = (or_score + b_or).is_sign_positive();
            assert_eq!(
                lib_pred, or_pred,
                "case {case}, training point {i}: library and oracle disagree"
            );
        }
        // Fresh points score through the plain kernel (the ridge only
        // touches the training diagonal).
        for probe in 0..8u64 {
            let mut z = vec![0.0; dims];
            rng::fill_normal(922 + case, probe, 0, &mut z);
            let decide = |alpha: &[f64], bias: f64| -> bool {
                let s: f64 = (0..n)
                    .map(|j| alpha[j] * y[j] * kernel_eval(&spec, &points[j], &z).unwrap())
                    .sum();
                (s + bias).is_sign_positive()
            };
            assert_eq!(
                decide(&sol.alpha, sol.bias),
                decide(&oracle_alpha, b_or),
                "case {case}, probe {probe}: library and oracle disagree"
            );
        }
    }
}

// ---------------------------------------------------------------- criterion 5

fn two_blob_problem(seed: u64, n_per_class: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = 2 * n_per_class;
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let sign = if i < n_per_class { 1.0 } else { -1.0 };
        let mut p = vec![0.0; 2];
        rng::fill_normal(seed, i as u64, 0, &mut p);
        rows.push(vec![sign * 1.2 + 0.6 * p[0], sign * 0.8 + 0.6 * p[1]]);
        y.push(sign);
    }
    (rows, y)
}

fn lp_norm(d: &[f64], p: f64) -> f64 {
    d.iter().map(|&w| w.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

#[test]
fn criterion_5_kernel_weight_learning_contracts() {
    // A one-kernel bank must collapse to the plain solver on that kernel.
    let (rows, y) = two_blob_problem(930, 5);
    let spec = KernelSpec::Rbf { gamma: 0.7 };
    let cfg = TrainConfig::with_bank(vec![spec.clone()]);
    let model = mkl_train(&rows, &y, &cfg).unwrap();
    assert_eq!(model.kernel_weights, vec![1.0]);
    let g = gram(&spec, &rows).unwrap();
    let sol = solve_binary_svm(&g.values, &y, cfg.c).unwrap();
    for (i, row) in rows.iter().enumerate() {
        let via_model = model.decision_value(row).unwrap();
        let via_svm = sol.scores[i] + sol.bias;
        assert!(
            (via_model - via_svm).abs() < 1e-6,
            "sample {i}: {via_model} vs {via_svm}"
        );
    }

    // Two identical kernels split the weight symmetrically; for p = 3/2 the
    // unit-norm constraint pins each at 2^(-2/3).
    let (rows, y) = two_blob_problem(931, 4);
    let spec = KernelSpec::Rbf { gamma: 1.0 };
    let cfg = TrainConfig::with_bank(vec![spec.clone(), spec]);
    let model = mkl_train(&rows, &y, &cfg).unwrap();
    let expected = 2.0f64.powf(-2.0 / 3.0);
    for &w in &model.kernel_weights {
        assert!((w - expected).abs() < 1e-6, "weight {w} vs {expected}");
    }

    // Every intermediate weight vector keeps unit l_1.5 norm, and the
    // objective never increases across outer rounds.
    let (rows, y) = two_blob_problem(932, 6);
    let cfg = TrainConfig::with_bank(vec![
        KernelSpec::Linear { c: 1.0 },
        KernelSpec::Polynomial { c: 1.0, degree: 2 },
        KernelSpec::Rbf { gamma: 0.5 },
    ]);
    let model = mkl_train(&rows, &y, &cfg).unwrap();
    assert!(model.weight_trajectory.len() >= 2);
    for d in &model.weight_trajectory {
        assert!(
            (lp_norm(d, cfg.p) - 1.0).abs() < 1e-9,
            "weight vector {d:?} is off the unit sphere"
        );
    }
    assert!((lp_norm(&model.kernel_weights, cfg.p) - 1.0).abs() < 1e-9);
    for w in model.objective_trajectory.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-8,
            "objective rose from {} to {}",
            w[0],
            w[1]
        );
    }

    // Six-point problems against a brute-force grid over the weight
    // sphere: for each gridded d, solve the inner dual exactly and keep the
    // smallest optimum; the learned objective must land on it.
    for case in 0..5u64 {
        let (rows, y) = two_blob_problem(933 + case, 3);
        let bank = vec![
            KernelSpec::Linear { c: 1.0 },
            KernelSpec::Rbf { gamma: 0.5 },
        ];
        let cfg = TrainConfig::with_bank(bank.clone());
        let model = mkl_train(&rows, &y, &cfg).unwrap();
        let achieved = *model.objective_trajectory.last().unwrap();

        let g1 = gram(&bank[0], &rows).unwrap().values;
        let g2 = gram(&bank[1], &rows).unwrap().values;
        let n = rows.len();
        let grid = 800;
        let mut best = f64::INFINITY;
        for i in 0..=grid {
            let d1 = i as f64 / grid as f64;
            let d2 = (1.0 - d1.powf(cfg.p)).max(0.0).powf(1.0 / cfg.p);
            let combined: Vec<Vec<f64>> = (0..n)
                .map(|r| (0..n).map(|c| d1 * g1[r][c] + d2 * g2[r][c]).collect())
                .collect();
            let sol = solve_binary_svm(&combined, &y, cfg.c).unwrap();
            best = best.min(sol.dual_objective(&y));
        }
        assert!(
            (achieved - best).abs() <= 1e-3,
            "case {case}: learned objective {achieved} vs grid minimum {best}"
        );
    }
}

// ---------------------------------------------------------------- criterion 6

/// Direct time-domain Morlet convolution with the same kernel recipe:
/// Gaussian envelope truncated at four widths, unit energy, mirror padding.
fn oracle_spectrogram(
    samples: &[f64],
    freqs_hz: &[f64],
    cycles: f64,
    fs: f64,
) -> Vec<Vec<f64>> {
    let n = samples.len();
    let half_width = |f: f64| -> usize {
        let sigma_t = cycles / (TAU * f);
        (4.0 * sigma_t * fs).ceil() as usize
    };
    let pad = freqs_hz.iter().map(|&f| half_width(f)).max().unwrap();
    let mut padded = Vec::with_capacity(n + 2 * pad);
    for i in 0..pad {
        padded.push(samples[pad - i]);
    }
    padded.extend_from_slice(samples);
    for j in 0..pad {
        padded.push(samples[n - 2 - j]);
    }

    let mut rows = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let hw = half_width(f) as isize;
        let sigma_t = cycles / (TAU * f);
        let mut kernel_re = Vec::with_capacity(2 * hw as usize + 1);
        let mut kernel_im = Vec::with_capacity(2 * hw as usize + 1);
        let mut energy = 0.0;
        for k in -hw..=hw {
            let t = k as f64 / fs;
            let env = (-t * t / (2.0 * sigma_t * sigma_t)).exp();
            kernel_re.push(env * (TAU * f * t).cos());
            kernel_im.push(env * (TAU * f * t).sin());
            energy += env * env;
        }
        let scale = 1.0 / energy.sqrt();
        let row: Vec<f64> = (0..n)
            .map(|t| {
                let mut re = 0.0;
                let mut im = 0.0;
                for k in -hw..=hw {
                    let v = padded[(t as isize + pad as isize - k) as usize];
                    let idx = (hw + k) as usize;
                    re += v * kernel_re[idx];
                    im += v * kernel_im[idx];
                }
                (re * scale).hypot(im * scale)
            })
            .collect();
        rows.push(row);
    }
    rows
}

#[test]
fn criterion_6_feature_extraction_contracts() {
    // Spectrogram against the direct convolution, relative to the largest
    // coefficient.
    let fs = 600.0;
    let n = 600;
    let samples: Vec<f64> = (0..n)
        .map(|t| {
            let tt = t as f64 / fs;
            (TAU * 17.0 * tt).cos() + 0.4 * (TAU * 24.0 * tt + 0.9).sin()
                + 0.1 * rng::normal(940, 0, t as u64)
        })
        .collect();
    let cfg = SpectrogramConfig::default();
    let lib = MorletPlan::new(n, &cfg, fs).unwrap().spectrogram(&samples).unwrap();
    let oracle = oracle_spectrogram(&samples, &cfg.freqs_hz, cfg.wavelet_cycles, fs);
    assert_eq!(lib.len(), oracle.len());
    let peak = oracle
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v));
    for (r, (lr, or)) in lib.iter().zip(&oracle).enumerate() {
        assert_eq!(lr.len(), or.len());
        for (c, (a, b)) in lr.iter().zip(or).enumerate() {
            assert!(
                (a - b).abs() <= 1e-6 * peak,
                "cell ({r}, {c}): {a} vs {b}, peak {peak}"
            );
        }
    }

    // A pure 20 Hz tone concentrates its energy on the 20 Hz row.
    let tone: Vec<f64> = (0..n).map(|t| (TAU * 20.0 * t as f64 / fs).cos()).collect();
    let spec = MorletPlan::new(n, &cfg, fs).unwrap().spectrogram(&tone).unwrap();
    let margin = 150;
    let row_energy: Vec<f64> = spec
        .iter()
        .map(|row| row[margin..n - margin].iter().map(|v| v * v).sum())
        .collect();
    let ridge = row_energy
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(cfg.freqs_hz[ridge], 20.0, "ridge on row {ridge}");

    // PCA keeps an orthonormal basis and at least the requested variance.
    let n_rows = 24;
    let dims = 10;
    let rows: Vec<Vec<f64>> = (0..n_rows)
        .map(|i| {
            let mut latent = vec![0.0; 2];
            rng::fill_normal(941, i as u64, 0, &mut latent);
            let mut noise = vec![0.0; dims];
            rng::fill_normal(942, i as u64, 0, &mut noise);
            (0..dims)
                .map(|d| {
                    3.0 * latent[0] * (d as f64 + 1.0).recip()
                        + 2.0 * latent[1] * ((d % 3) as f64 - 1.0)
                        + 0.3 * noise[d]
                })
                .collect()
        })
        .collect();
    let pca = pca_fit(&rows, 0.95).unwrap();
    assert!(pca.explained_fraction >= 0.95, "{}", pca.explained_fraction);
    for i in 0..pca.components.len() {
        for j in 0..pca.components.len() {
            let dot: f64 = pca.components[i]
                .iter()
                .zip(&pca.components[j])
                .map(|(a, b)| a * b)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(
                (dot - want).abs() < 1e-9,
                "components {i} and {j}: dot {dot}"
            );
        }
    }

    // Block-mean downsampling with integer cells and a power-of-two factor
    // is exact, so the row mean survives bit for bit.
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|r| {
            (0..64)
                .map(|t| ((rng::raw(943, r, t) % 1000) as f64))
                .collect()
        })
        .collect();
    let down = downsample_time(&rows, 4).unwrap();
    assert_eq!(down.dropped_samples, 0);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for (orig, short) in rows.iter().zip(&down.rows) {
        assert_eq!(short.len(), 16);
        assert_eq!(mean(orig), mean(short), "block means moved the row mean");
    }
    let ragged = downsample_time(&vec![vec![1.0; 66]; 2], 4).unwrap();
    assert_eq!(ragged.dropped_samples, 2);
    assert_eq!(ragged.rows[0].len(), 16);
}

// --------------------------------------------------------- binary test helpers

fn run_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfpsync"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn run_bin_ok(args: &[&str]) -> Output {
    let out = run_bin(args);
    assert!(
        out.status.success(),
        "lfpsync {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7_end_to_end_accuracy_time_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    let tables = tmp.path().join("tables");
    let started = Instant::now();
    run_bin_ok(&["synth", "--out", ds.to_str().unwrap(), "--seed", "0"]);
    let out = run_bin_ok(&[
        "eval",
        ds.to_str().unwrap(),
        "--classifier",
        "mkl",
        "--pair",
        "all",
        "--out",
        tables.to_str().unwrap(),
    ]);
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "generation plus evaluation took {elapsed:?}, budget is 2 min"
    );

    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let accuracy = v["report"]["accuracy_pct"].as_f64().unwrap();
    // Floor pinned by the pre-build pilot runs: seeds 0-9 all scored 100%.
    assert!(accuracy >= 90.0, "default-dataset accuracy {accuracy}%");
    assert_eq!(v["n_trials"], 50);

    let accuracy_csv = fs::read_to_string(tables.join("accuracy.csv")).unwrap();
    assert!(accuracy_csv.starts_with("configuration,mkl\n"));
    assert!(accuracy_csv.contains("\nall-pairs-mean,"));
    assert!(accuracy_csv.contains("\nchance,20.00"));

    let confusion = fs::read_to_string(tables.join("confusion-mkl.csv")).unwrap();
    assert!(confusion.starts_with("truth\\prediction,BP,S,RS,AM,MM\n"));
    assert_eq!(confusion.lines().count(), 6);

    let per_pair = fs::read_to_string(tables.join("per-pair-mkl.csv")).unwrap();
    assert!(per_pair.starts_with("left,right,pair,accuracy_pct,selected\n"));
    assert_eq!(per_pair.lines().count(), 12, "9 pairs + mean + chance");
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_8_identical_seeds_give_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let ds_a = tmp.path().join("ds_a");
    let ds_b = tmp.path().join("ds_b");
    for ds in [&ds_a, &ds_b] {
        run_bin_ok(&[
            "synth",
            "--out",
            ds.to_str().unwrap(),
            "--seed",
            "4",
            "--trials",
            "2",
            "--spacing",
            "2.0",
            "--snr",
            "3.0",
        ]);
    }
    let names: Vec<String> = fs::read_dir(&ds_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 9, "header plus eight channels");
    for name in &names {
        assert_eq!(
            fs::read(ds_a.join(name)).unwrap(),
            fs::read(ds_b.join(name)).unwrap(),
            "dataset file {name} differs between identical seeds"
        );
    }

    let table_dirs = [tmp.path().join("t_a"), tmp.path().join("t_b")];
    let mut stdouts = Vec::new();
    for dir in &table_dirs {
        let out = run_bin_ok(&[
            "eval",
            ds_a.to_str().unwrap(),
            "--classifier",
            "all",
            "--pair",
            "all",
            "--out",
            dir.to_str().unwrap(),
        ]);
        stdouts.push(out.stdout);
    }
    assert_eq!(stdouts[0], stdouts[1], "report JSON differs between runs");

    let mut table_names: Vec<String> = fs::read_dir(&table_dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    table_names.sort();
    assert_eq!(table_names.len(), 9, "accuracy + 4 confusion + 4 per-pair");
    for name in &table_names {
        assert_eq!(
            fs::read(table_dirs[0].join(name)).unwrap(),
            fs::read(table_dirs[1].join(name)).unwrap(),
            "table {name} differs between runs"
        );
    }
}
