//! Acceptance suite: one test per headline guarantee, each ending in a
//! single pass line. Tolerances are pinned; loosening them is a behavior
//! change, not a cleanup.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualglm::dgp::{generate, DgpSpec, ErrorFamily};
use dualglm::estimators::{
    binomial_loglik, calibrate_alpha, dual_loglik, fit_dual, fit_mle, CutoffRule,
    DualMeasureModel, EstimatorTag, SolverConfig,
};
use dualglm::harness::{
    equivalence_experiment, run_study, scaling_experiment, EquivFamily, ErrorNorm,
};
use dualglm::link::LinkSpec;
use dualglm::measure::{
    hahn_decompose, jordan_decompose, normalize, total_variation, SignedMeasure,
};

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("tmp dir");
    dir.join(name)
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dualglm")
}

/// 1. The dual likelihood nests the standard binomial likelihood: at unit
/// exponents the two objectives coincide, and the pinned dual fit recovers
/// the baseline coefficients.
#[test]
fn acceptance_01_nested_model_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for pair in 0..50 {
        let link = if pair % 2 == 0 {
            LinkSpec::logit()
        } else {
            LinkSpec::probit()
        };
        let dgp = DgpSpec::iid_binary(vec![0.0, 1.0], ErrorFamily::Logistic);
        let d = generate(&dgp, 200, 900 + pair).unwrap();
        let beta: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let m = DualMeasureModel {
            beta: beta.clone(),
            alpha_plus: 1.0,
            alpha_minus: 1.0,
            link: link.clone(),
            cutoff_rule: CutoffRule::Zero,
        };
        let (ll_dual, _) = dual_loglik(&d, &m).unwrap();
        let ll_glm = binomial_loglik(&d, &link, &beta);
        assert!(
            (ll_dual - ll_glm).abs() <= 1e-10,
            "pair {pair}: |delta loglik| = {:e}",
            (ll_dual - ll_glm).abs()
        );
    }

    let dgp = DgpSpec::iid_binary(vec![0.2, 0.9], ErrorFamily::Logistic);
    let d = generate(&dgp, 2000, 77).unwrap();
    let link = LinkSpec::logit();
    let base = SolverConfig::default();
    let pinned = SolverConfig {
        pinned_alpha: Some((1.0, 1.0)),
        ..SolverConfig::default()
    };
    let f_mle = fit_mle(&d, &link, &base).unwrap();
    let f_dual = fit_dual(&d, &link, &pinned).unwrap();
    for (a, b) in f_mle.beta.iter().zip(&f_dual.beta) {
        assert!((a - b).abs() <= 1e-6, "pinned dual vs mle: {a} vs {b}");
    }
    println!("ACCEPTANCE 1 nested-model oracle: PASS");
}

/// 2. Refitting probit data with a logit link scales the slope by the
/// classical factor near 1.6.
#[test]
fn acceptance_02_logit_probit_scaling() {
    let s = scaling_experiment(10_000, 50, 7).unwrap();
    assert_eq!(s.failed_replications, 0, "replications failed");
    assert!(
        (1.45..=1.75).contains(&s.mean_ratio),
        "mean slope ratio {} outside [1.45, 1.75]",
        s.mean_ratio
    );
    println!(
        "ACCEPTANCE 2 logit/probit scaling (mean ratio {:.4}): PASS",
        s.mean_ratio
    );
}

/// 3. Hahn/Jordan decomposition agrees with an exhaustive subset-sum
/// oracle on small random measures.
#[test]
fn acceptance_03_decomposition_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..200 {
        let k = rng.gen_range(1..=12usize);
        let weights: Vec<f64> = (0..k)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(-5.0..5.0)
                }
            })
            .collect();
        let m = SignedMeasure::from_finite(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("a{i}"), w))
                .collect(),
        )
        .unwrap();

        // subset sums over all 2^k index sets
        let full = (1usize << k) - 1;
        let mut sums = vec![0.0f64; 1 << k];
        for mask in 1..=full {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + weights[low];
        }

        let hahn = hahn_decompose(&m);
        let p_mask: usize = hahn.positive_set.iter().map(|&i| 1usize << i).sum();
        let n_mask: usize = hahn.negative_set.iter().map(|&i| 1usize << i).sum();
        assert_eq!(p_mask | n_mask, full, "case {case}: not a partition");
        assert_eq!(p_mask & n_mask, 0, "case {case}: sets overlap");

        // positive set: every subset has nonnegative measure
        let mut sub = p_mask;
        loop {
            assert!(sums[sub] >= 0.0, "case {case}: nu(A) < 0 inside S+");
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & p_mask;
        }
        // negative set: every subset has nonpositive measure
        let mut sub = n_mask;
        loop {
            assert!(sums[sub] <= 0.0, "case {case}: nu(A) > 0 inside S-");
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & n_mask;
        }

        // Jordan pair: atom-wise positive/negative parts, mutually
        // singular, and totals equal the oracle's sup / -inf subset sums
        let jordan = jordan_decompose(&m);
        let mut sup = 0.0f64;
        let mut inf = 0.0f64;
        for mask in 0..=full {
            sup = sup.max(sums[mask]);
            inf = inf.min(sums[mask]);
        }
        for (i, &w) in weights.iter().enumerate() {
            let p = jordan.nu_plus.atoms[i].1.finite().unwrap();
            let q = jordan.nu_minus.atoms[i].1.finite().unwrap();
            assert_eq!(p, w.max(0.0), "case {case}: nu+ atom {i}");
            assert_eq!(q, (-w).max(0.0), "case {case}: nu- atom {i}");
            assert!(p == 0.0 || q == 0.0, "case {case}: not mutually singular");
        }
        let tp = jordan.nu_plus.total().finite().unwrap();
        let tq = jordan.nu_minus.total().finite().unwrap();
        assert!((tp - sup).abs() <= 1e-12, "case {case}: nu+ total vs sup");
        assert!((tq + inf).abs() <= 1e-12, "case {case}: nu- total vs -inf");
        let tv = total_variation(&m).finite().unwrap();
        assert!((tv - (tp + tq)).abs() <= 1e-12, "case {case}: |nu| != nu+ + nu-");
    }
    println!("ACCEPTANCE 3 decomposition oracle: PASS");
}

/// 4. Normalizing by total variation yields a probability measure.
#[test]
fn acceptance_04_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..1000 {
        let k = rng.gen_range(1..=20usize);
        let atoms: Vec<(String, f64)> = (0..k)
            .map(|i| {
                let mut w = rng.gen_range(-10.0..10.0);
                if w == 0.0 {
                    w = 1.0;
                }
                (format!("a{i}"), w)
            })
            .collect();
        let m = SignedMeasure::from_finite(atoms).unwrap();
        let p = normalize(&m).unwrap();
        let total: f64 = p.atoms.iter().map(|(_, w)| *w).sum();
        assert!(
            (total - 1.0).abs() <= 1e-12,
            "case {case}: normalized sum {total}"
        );
        assert!(p.atoms.iter().all(|(_, w)| *w >= 0.0), "case {case}");
    }
    println!("ACCEPTANCE 4 probability normalization: PASS");
}

/// 5. Calibration exponents: the closed-form map inverts the link
/// constraint, the fitted moment equations hold at the solved exponents,
/// and the map is monotone in the measure argument.
#[test]
fn acceptance_05_calibration() {
    for i in 1..=100 {
        for j in 1..=100 {
            let nu = i as f64 / 101.0;
            let lam = j as f64 / 101.0;
            let alpha = calibrate_alpha(nu, lam).unwrap();
            assert!(
                (nu.powf(alpha) - lam).abs() < 1e-12,
                "grid ({nu}, {lam}): residual {:e}",
                (nu.powf(alpha) - lam).abs()
            );
        }
    }

    let dgp = DgpSpec::iid_binary(vec![0.0, 1.0], ErrorFamily::Logistic);
    let d = generate(&dgp, 4000, 55).unwrap();
    let f = fit_dual(&d, &LinkSpec::logit(), &SolverConfig::default()).unwrap();
    assert!(f.converged);
    let (a1, a2) = f.alpha.unwrap();
    let link = LinkSpec::logit();
    let n = d.n();
    let k: f64 = d.y.iter().sum();
    let lambdas: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = (0..d.p()).map(|j| d.x[(i, j)] * f.beta[j]).sum();
            link.squash(eta)
        })
        .collect();
    let g1: f64 = lambdas.iter().map(|l| l.powf(1.0 / a1)).sum::<f64>() / n as f64
        - k / n as f64;
    let g2: f64 = lambdas.iter().map(|l| (1.0 - l).powf(1.0 / a2)).sum::<f64>() / n as f64
        - (n as f64 - k) / n as f64;
    assert!(g1.abs() <= 1e-10, "success-side moment residual {g1:e}");
    assert!(g2.abs() <= 1e-10, "failure-side moment residual {g2:e}");

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for case in 0..1000 {
        let lam = rng.gen_range(0.01..0.99);
        let mut nu1 = rng.gen_range(0.01..0.99);
        let mut nu2 = rng.gen_range(0.01..0.99);
        if nu1 > nu2 {
            std::mem::swap(&mut nu1, &mut nu2);
        }
        let a1 = calibrate_alpha(nu1, lam).unwrap();
        let a2 = calibrate_alpha(nu2, lam).unwrap();
        assert!(a1 <= a2 + 1e-12, "case {case}: map not monotone in nu");
    }
    println!("ACCEPTANCE 5 calibration: PASS");
}

/// 6. The analytic gradient of the dual likelihood matches central finite
/// differences.
#[test]
fn acceptance_06_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let dgp = DgpSpec::iid_binary(vec![0.0, 1.0], ErrorFamily::Logistic);
    for point in 0..100 {
        let d = generate(&dgp, 60, 1200 + point).unwrap();
        let link = match point % 3 {
            0 => LinkSpec::logit(),
            1 => LinkSpec::probit(),
            _ => LinkSpec::cloglog(),
        };
        let m = DualMeasureModel {
            beta: (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            alpha_plus: rng.gen_range(0.5..2.0),
            alpha_minus: rng.gen_range(0.5..2.0),
            link,
            cutoff_rule: CutoffRule::Zero,
        };
        let (_, grad) = dual_loglik(&d, &m).unwrap();
        let h = 1e-6;
        for j in 0..m.beta.len() {
            let mut up = m.clone();
            up.beta[j] += h;
            let mut dn = m.clone();
            dn.beta[j] -= h;
            let fd = (dual_loglik(&d, &up).unwrap().0 - dual_loglik(&d, &dn).unwrap().0)
                / (2.0 * h);
            let rel = (fd - grad[j]).abs() / (1.0 + grad[j].abs());
            assert!(
                rel < 1e-6,
                "point {point} coord {j}: fd {fd} vs analytic {} (rel {rel:e})",
                grad[j]
            );
        }
    }
    println!("ACCEPTANCE 6 gradient check: PASS");
}

/// 7. Path-wise convergence proxy: on a correctly specified i.i.d. DGP,
/// nearly all nested sample paths have sup-tail error below 0.1 by
/// n = 8192, and sup-tails are non-increasing along every path.
#[test]
fn acceptance_07_convergence_proxy() {
    let dgp = DgpSpec::iid_binary(vec![0.0, 1.0], ErrorFamily::Logistic);
    let sizes = [128, 256, 512, 1024, 2048, 4096, 8192];
    let cfg = SolverConfig::default();

    let mle = run_study(
        &[(dgp.clone(), EstimatorTag::Mle)],
        &sizes,
        100,
        2024,
        ErrorNorm::LInf,
        &cfg,
    )
    .unwrap();
    let dual = run_study(
        &[(dgp.clone(), EstimatorTag::DualMeasure)],
        &sizes,
        100,
        2024,
        ErrorNorm::LInf,
        &cfg,
    )
    .unwrap();

    for study in [&mle, &dual] {
        for t in &study.traces {
            assert!(t.check_invariants(), "trace invariants violated");
            let tails: Vec<f64> = t.sup_tail.iter().filter_map(|s| *s).collect();
            assert!(
                tails.windows(2).all(|w| w[1] <= w[0] + 1e-15),
                "sup-tail not non-increasing"
            );
        }
    }
    let f_mle = mle.convergence_fraction(8192, 0.1);
    let f_dual = dual.convergence_fraction(8192, 0.1);
    assert!(f_mle >= 0.95, "mle convergence fraction {f_mle}");
    assert!(f_dual >= 0.90, "dual convergence fraction {f_dual}");
    println!(
        "ACCEPTANCE 7 convergence proxy (mle {f_mle:.2}, dual {f_dual:.2}): PASS"
    );
}

/// 8. Binary-likelihood and latent-EM routes agree under a matched
/// symmetric error law; the mismatched asymmetric case is persisted as a
/// report with no numeric claim.
#[test]
fn acceptance_08_equivalence() {
    let normal = equivalence_experiment(EquivFamily::Normal, 20_000, 20, 31).unwrap();
    assert!(normal.len() >= 15, "too few completed replications");
    let mut diffs: Vec<f64> = normal.iter().map(|r| r.max_abs_diff).collect();
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = diffs[diffs.len() / 2];
    assert!(median <= 0.05, "median max coefficient difference {median}");

    let gumbel = equivalence_experiment(EquivFamily::Gumbel, 20_000, 20, 31).unwrap();
    let path = tmp("equivalence_gumbel.json");
    std::fs::write(&path, serde_json::to_string_pretty(&gumbel).unwrap()).unwrap();
    assert!(path.exists());
    println!(
        "ACCEPTANCE 8 equivalence (normal median diff {median:.4}, gumbel report persisted): PASS"
    );
}

/// 9. Perfectly separated data surfaces as a separation error end-to-end
/// through the CLI, with the numeric-failure exit code and a diagnostic
/// artifact.
#[test]
fn acceptance_09_separation_cli() {
    let csv = tmp("separable.csv");
    std::fs::write(&csv, "x1,y\n-2,0\n-1,0\n1,1\n2,1\n").unwrap();
    let out = tmp("sep_out");
    let status = Command::new(bin())
        .args([
            "fit",
            "--data",
            csv.to_str().unwrap(),
            "--estimator",
            "mle",
            "--link",
            "logit",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3), "expected numeric-failure exit code");
    let report = out.join("separation.json");
    assert!(report.exists(), "separation.json not written");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["error"], "separation_suspected");
    assert_eq!(v["separation"]["separated"], true);
    println!("ACCEPTANCE 9 separation diagnostic through CLI: PASS");
}

/// 10. Rerunning a study with identical configuration reproduces every
/// output byte (timestamps live only in metadata.json, which is excluded).
#[test]
fn acceptance_10_determinism() {
    let dir = tmp("study_rerun");
    let run_once = || {
        let status = Command::new(bin())
            .args([
                "study",
                "--seed",
                "99",
                "--reps",
                "5",
                "--sizes",
                "128,256,512",
                "--estimator",
                "mle",
                "--out",
                dir.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    run_once();
    let names: BTreeSet<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "metadata.json")
        .collect();
    assert!(
        names.contains("study.csv") && names.len() >= 3,
        "expected study.csv, traces, and effective_config.txt, got {names:?}"
    );
    let first: Vec<Vec<u8>> = names
        .iter()
        .map(|n| std::fs::read(dir.join(n)).unwrap())
        .collect();
    run_once();
    for (name, a) in names.iter().zip(&first) {
        let b = std::fs::read(dir.join(name)).unwrap();
        assert_eq!(*a, b, "file {name} differs between identical reruns");
    }
    println!("ACCEPTANCE 10 determinism: PASS");
}
