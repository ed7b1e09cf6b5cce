//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volform_core::formulas::{
    jac_pinv_indef, jac_pinv_symmetric, jac_sd_indef_full, jac_sd_indef_singular,
    jac_sd_posdef_full, jac_sd_semidef, jac_svd_measure,
};
use volform_core::integrator::{
    haar_stiefel, mc_pinv_check_with, mc_sd_factorization_check_with, PinvVariant, SdVariant,
};
use volform_core::oracle::{oracle_density, sd_frame, svd_frame, verify_suite, Case, Suite};
use volform_core::{
    cholesky, classify_rect, classify_symmetric, det_coefficient, moore_penrose,
    spectral_nonsingular, svd_nonsingular, wedge, wedge_all, Multivector, OneForm, TolerancePolicy,
    VerificationReport,
};

const SEED: u64 = 42;
const TRIALS: usize = 100;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn suite(s: Suite, rel_tol: f64) -> Result<Vec<VerificationReport>, String> {
    let reports = verify_suite(s, TRIALS, SEED, rel_tol).map_err(|e| e.to_string())?;
    for r in &reports {
        ensure(r.pass && r.per_trial.len() == TRIALS, || {
            format!(
                "{:?}: max rel err {:e}, failures {:?}",
                r.dims, r.max_rel_err, r.failures
            )
        })?;
    }
    Ok(reports)
}

fn worst(reports: &[VerificationReport]) -> f64 {
    reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max)
}

fn density(m: usize, d: &[f64]) -> Result<f64, String> {
    sd_frame(m, d)
        .and_then(|f| oracle_density(&f))
        .map_err(|e| e.to_string())
}

fn indefinite_nonsingular() -> Outcome {
    let reports = suite(Suite::T1, 1e-9)?;

    // Worked 3×3 case: one positive, two negative eigenvalues.
    let (l1, d1, d2) = (2.7, 0.6, 1.9);
    let oracle = density(3, &[l1, -d1, -d2])?;
    let display = ((l1 + d1) * (l1 + d2) * (d1 - d2)).abs();
    ensure(rel(oracle, display) <= 1e-9, || {
        format!("3x3 worked case: oracle {oracle} vs {display}")
    })?;
    let f = jac_sd_indef_full(&[l1], &[d2, d1]).map_err(|e| e.to_string())?;
    ensure(
        f.pow2 == -3 && rel(f.product_value().abs(), display) <= 1e-12,
        || format!("3x3 formula {f:?}"),
    )?;

    // 4×4 with two of each sign.
    let (l1, l2, d1, d2) = (3.1, 1.2, 0.4, 2.2);
    let oracle = density(4, &[l1, l2, -d1, -d2])?;
    let display = ((l1 - l2) * (d1 - d2) * (l1 + d1) * (l1 + d2) * (l2 + d1) * (l2 + d2)).abs();
    ensure(rel(oracle, display) <= 1e-9, || {
        format!("4x4 display: oracle {oracle} vs {display}")
    })?;
    let f = jac_sd_indef_full(&[l1, l2], &[d2, d1]).map_err(|e| e.to_string())?;
    ensure(
        f.pow2 == -4 && rel(f.product_value().abs(), display) <= 1e-12,
        || format!("4x4 formula {f:?}"),
    )?;
    Ok(format!("max rel err {:.2e}", worst(&reports)))
}

fn indefinite_singular() -> Outcome {
    let reports = suite(Suite::T2, 1e-9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for r in &reports {
        let Case::T2 { m, q1, q2 } = r.dims else {
            return Err(format!("unexpected case {:?}", r.dims));
        };
        let mut lam: Vec<f64> = (0..q1)
            .map(|i| 5.0 - i as f64 + rng.random::<f64>())
            .collect();
        let mut del: Vec<f64> = (0..q2)
            .map(|i| 4.5 - i as f64 + rng.random::<f64>())
            .collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        del.sort_by(|a, b| b.total_cmp(a));
        let singular = jac_sd_indef_singular(&lam, &del, m).map_err(|e| e.to_string())?;
        let full = jac_sd_indef_full(&lam, &del).map_err(|e| e.to_string())?;
        let gap = (m - q1 - q2) as i32;
        let expected: f64 = lam.iter().chain(&del).map(|x| x.powi(gap)).product();
        let ratio = singular.product_value() / full.product_value();
        ensure(rel(ratio.abs(), expected) <= 1e-12, || {
            format!(
                "rank-deficiency factor at {:?}: {ratio} vs {expected}",
                r.dims
            )
        })?;
    }
    Ok(format!("max rel err {:.2e}", worst(&reports)))
}

fn measure_suites() -> Outcome {
    let mut all = Vec::new();
    for s in [Suite::Eq2, Suite::SdFull, Suite::T3] {
        let reports = suite(s, 1e-9)?;
        for r in &reports {
            let expect = match r.dims {
                Case::Eq2 { m, q } => q * (q + 1) / 2 + (m - q) * q,
                Case::SdFull { m } => m * (m + 1) / 2,
                Case::T3 { n, m, k } => n * k + m * k - k * k,
                other => return Err(format!("unexpected case {other:?}")),
            };
            ensure(r.basis_dim == Some(expect), || {
                format!(
                    "{:?}: basis dim {:?}, expected {expect}",
                    r.dims, r.basis_dim
                )
            })?;
        }
        all.extend(reports);
    }
    Ok(format!(
        "{} cases, max rel err {:.2e}",
        all.len(),
        worst(&all)
    ))
}

/// Matrix of `dV ↦ −V⁻¹ dV V⁻¹` on the upper-triangle coordinates.
fn inverse_differential(v: &DMatrix<f64>) -> DMatrix<f64> {
    let m = v.nrows();
    let w = v.clone().try_inverse().expect("invertible");
    let coords: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let mut jac = DMatrix::zeros(coords.len(), coords.len());
    for (col, &(i, j)) in coords.iter().enumerate() {
        let mut e = DMatrix::zeros(m, m);
        e[(i, j)] = 1.0;
        e[(j, i)] = 1.0;
        let img = -(&w * e * &w);
        for (row, &(a, b)) in coords.iter().enumerate() {
            jac[(row, col)] = img[(a, b)];
        }
    }
    jac
}

fn composition() -> Outcome {
    let reports = suite(Suite::Composition, 1e-12)?;
    let pinv: Vec<_> = reports
        .iter()
        .filter(|r| {
            matches!(
                r.dims,
                Case::PinvGeneral { .. } | Case::PinvSymmetric { .. }
            )
        })
        .cloned()
        .collect();
    ensure(pinv.len() == 8, || {
        format!("{} general/symmetric cases", pinv.len())
    })?;

    // Classical inverse: determinant of the linearised map versus the formula.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut max_err: f64 = 0.0;
    for m in 1..=4 {
        for _ in 0..25 {
            let lam: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let q = haar_stiefel(&mut rng, m, m);
            let v =
                &q * DMatrix::from_diagonal(&DVector::from_row_slice(&lam)) * q.transpose() * sign;
            let det_map = inverse_differential(&v).determinant().abs();
            let classical = v.determinant().abs().powi(-(m as i32 + 1));
            let formula = jac_pinv_symmetric(&lam, m)
                .map_err(|e| e.to_string())?
                .value();
            max_err = max_err
                .max(rel(det_map, classical))
                .max(rel(formula, classical));
        }
    }
    ensure(max_err <= 1e-12, || {
        format!("classical identity rel err {max_err:e}")
    })?;
    Ok(format!(
        "max rel err {:.2e}, classical identity {:.2e}",
        worst(&pinv),
        max_err
    ))
}

fn indefinite_pinv_adjudication() -> Outcome {
    let reports = suite(Suite::Composition, 1e-12)?;
    let mut flagged = Vec::new();
    for r in reports.iter() {
        let Case::PinvIndef { m, a1, a2 } = r.dims else {
            continue;
        };
        if a2 == 1 {
            ensure(r.discrepancies.is_empty() && r.max_rel_err <= 1e-12, || {
                format!("{:?} should agree: {:?}", r.dims, r.discrepancies)
            })?;
        }
        if (m, a1, a2) == (3, 1, 2) {
            ensure(
                r.discrepancies.iter().any(|d| d.contains("prod(lambda)^1")),
                || format!("(3,1,2) not flagged: {:?}", r.discrepancies),
            )?;
            flagged.push(r.discrepancies[0].clone());
        }
    }
    ensure(!flagged.is_empty(), || "no (3,1,2) case in suite".into())?;

    let p = jac_pinv_indef(&[1.7], &[2.3, 0.8], 3).map_err(|e| e.to_string())?;
    ensure(
        p.discrepancy
            && p.paper_lambda_exponent == -3
            && p.oracle_exponent == -4
            && p.paper_delta_exponent == p.oracle_exponent
            && rel(p.paper.value() / p.oracle.value(), 1.7) <= 1e-12,
        || format!("direct evaluation {p:?}"),
    )?;
    let agree = jac_pinv_indef(&[1.7, 0.9], &[2.3], 3).map_err(|e| e.to_string())?;
    ensure(!agree.discrepancy && agree.paper == agree.oracle, || {
        format!("alpha2 = 1 disagrees: {agree:?}")
    })?;
    Ok(format!("flagged: {}", flagged[0]))
}

fn degeneracy() -> Outcome {
    let tied_vs_untied: [(&str, usize, Vec<f64>, Vec<f64>); 4] = [
        ("SD-full", 3, vec![2.0, 2.0, 0.7], vec![2.0, 1.3, 0.7]),
        ("Eq2", 4, vec![3.0, 3.0], vec![3.0, 1.5]),
        ("T1", 3, vec![2.0, -1.1, -1.1], vec![2.0, -1.1, -0.4]),
        ("T2", 4, vec![2.5, 2.5, -1.0], vec![2.5, 1.2, -1.0]),
    ];
    for (name, m, tied, untied) in &tied_vs_untied {
        let t = density(*m, tied)?;
        let u = density(*m, untied)?;
        ensure(t.abs() <= 1e-12 * u.abs(), || {
            format!("{name}: tied {t:e} vs {u:e}")
        })?;
    }
    let t = svd_frame(3, 2, &[1.5, 1.5])
        .and_then(|f| oracle_density(&f))
        .map_err(|e| e.to_string())?;
    let u = svd_frame(3, 2, &[1.5, 0.8])
        .and_then(|f| oracle_density(&f))
        .map_err(|e| e.to_string())?;
    ensure(t.abs() <= 1e-12 * u.abs(), || {
        format!("SVD: tied {t:e} vs {u:e}")
    })?;

    let formulas = [
        jac_sd_posdef_full(&[2.0, 2.0, 0.7]),
        jac_sd_semidef(&[3.0, 3.0], 4),
        jac_sd_indef_full(&[2.0], &[1.1, 1.1]),
        jac_sd_indef_singular(&[2.5, 2.5], &[1.0], 4),
        jac_svd_measure(&[1.5, 1.5], 3, 2),
    ];
    for f in formulas {
        let f = f.map_err(|e| e.to_string())?;
        ensure(f.degenerate && f.value() == 0.0, || {
            format!("not flagged: {f:?}")
        })?;
    }

    // (κ − κ)(H′dH) ∧ dD = 0 at m = 2.
    let kappa = 1.37;
    let d = density(2, &[kappa, kappa])?;
    let f = jac_sd_posdef_full(&[kappa, kappa]).map_err(|e| e.to_string())?;
    ensure(d == 0.0 && f.degenerate && f.value() == 0.0, || {
        format!("kappa case: density {d}, formula {f:?}")
    })?;
    Ok("5 frames, 5 formulas, kappa case exact".into())
}

/// Rows with a few nonzeros near the diagonal, columns permuted.
fn banded_system(rng: &mut ChaCha8Rng, n: usize, band: usize) -> Vec<OneForm> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(band);
            let hi = (i + band).min(n - 1);
            (lo..=hi).fold(OneForm::new(), |f, j| {
                f.with(perm[j], rng.random_range(-2.0..2.0))
            })
        })
        .collect()
}

fn dense_system(rng: &mut ChaCha8Rng, n: usize) -> Vec<OneForm> {
    (0..n)
        .map(|_| {
            (0..n).fold(OneForm::new(), |f, j| {
                f.with(j, rng.random_range(-2.0..2.0))
            })
        })
        .collect()
}

fn wedge_engine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut max_err: f64 = 0.0;
    for s in 0..1000 {
        let n = 1 + s % 24;
        let forms = if n <= 10 {
            dense_system(&mut rng, n)
        } else {
            banded_system(&mut rng, n, 2)
        };
        let w = wedge_all(&forms, n).map_err(|e| e.to_string())?;
        let d = det_coefficient(&forms, n).map_err(|e| e.to_string())?;
        let err = rel(w, d);
        ensure(err <= 1e-10, || format!("system {s} (n = {n}): {w} vs {d}"))?;
        max_err = max_err.max(err);
    }

    for _ in 0..200 {
        let dim = 5;
        let f: Vec<Multivector> = dense_system(&mut rng, dim)
            .iter()
            .map(|x| Multivector::from_one_form(x, dim))
            .collect();
        let c: f64 = rng.random_range(-2.0..2.0);
        let ab = wedge(&f[0], &f[1]);
        let ba = wedge(&f[1], &f[0]);
        ensure(ab.max_abs_diff(&ba.scaled(-1.0)) < 1e-12, || {
            "anticommutativity".into()
        })?;
        let lhs = wedge(&f[0].scaled(c).plus(&f[2]), &f[3]);
        let rhs = wedge(&f[0], &f[3]).scaled(c).plus(&wedge(&f[2], &f[3]));
        ensure(lhs.max_abs_diff(&rhs) < 1e-10, || "multilinearity".into())?;
    }
    Ok(format!("1000 systems, max rel err {max_err:.2e}"))
}

fn monte_carlo() -> Outcome {
    const N: usize = 1_000_000;
    let mut lines = Vec::new();
    for m in [2, 3] {
        let r = mc_sd_factorization_check_with(m, N, SEED, SdVariant::Faithful)
            .map_err(|e| e.to_string())?;
        ensure(r.z_score <= 3.0, || format!("sd{m}: z = {:.2}", r.z_score))?;
        lines.push(format!("sd{m} z={:.2}", r.z_score));
        for v in [SdVariant::DropPow2, SdVariant::PerturbExponent] {
            let c = mc_sd_factorization_check_with(m, N, SEED, v).map_err(|e| e.to_string())?;
            ensure(c.z_score > 10.0, || {
                format!("sd{m} control {} only z = {:.2}", c.variant, c.z_score)
            })?;
        }
    }
    let r =
        mc_pinv_check_with(3, 2, 2, N, SEED, PinvVariant::Faithful).map_err(|e| e.to_string())?;
    ensure(r.z_score <= 3.0, || format!("pinv: z = {:.2}", r.z_score))?;
    lines.push(format!("pinv z={:.2}", r.z_score));
    Ok(lines.join(", "))
}

enum Shape {
    Symmetric(usize, Vec<f64>),
    Rect(usize, usize, Vec<f64>),
}

/// A spectrum template per class tag; `t` ties two values exactly.
fn shapes(rng: &mut ChaCha8Rng) -> Vec<(&'static str, Shape)> {
    let mut v = || rng.random_range(0.5..3.0);
    let (a, b, c) = (v() + 6.0, v() + 3.0, v());
    use Shape::*;
    vec![
        ("PosDef", Symmetric(3, vec![a, b, c])),
        ("PosDefMult", Symmetric(3, vec![a, a, c])),
        ("SemiDef", Symmetric(4, vec![a, c])),
        ("SemiDefMult", Symmetric(4, vec![b, b])),
        ("NegDef", Symmetric(3, vec![-a, -b, -c])),
        ("NegDefMult", Symmetric(3, vec![-a, -c, -c])),
        ("NegSemiDef", Symmetric(3, vec![-b, -c])),
        ("NegSemiDefMult", Symmetric(4, vec![-a, -a, -c])),
        ("Indef", Symmetric(3, vec![a, -b, -c])),
        ("IndefMult", Symmetric(4, vec![a, a, -b, -c])),
        ("SemiIndef", Symmetric(4, vec![a, -c])),
        ("SemiIndefMult", Symmetric(4, vec![b, -c, -c])),
        ("Rect", Rect(4, 3, vec![a, c])),
        ("RectMult", Rect(3, 5, vec![b, b, c])),
    ]
}

fn penrose(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let xy = x * y;
    let yx = y * x;
    [
        (&xy * x - x).amax() / x.amax(),
        (&yx * y - y).amax() / y.amax(),
        (&xy - xy.transpose()).amax(),
        (&yx - yx.transpose()).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn decomposition_contracts() -> Outcome {
    const TOL: f64 = 1e-9;
    let policy = TolerancePolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut seen = std::collections::BTreeSet::new();
    let mut worst_err: f64 = 0.0;
    for i in 0..200 {
        let all = shapes(&mut rng);
        let (tag, shape) = &all[i % all.len()];
        let x = match shape {
            Shape::Symmetric(m, vals) => {
                let mut d = vals.clone();
                d.resize(*m, 0.0);
                let q = haar_stiefel(&mut rng, *m, *m);
                let a = &q * DMatrix::from_diagonal(&DVector::from_vec(d)) * q.transpose();
                let a = (&a + a.transpose()) * 0.5;
                let (class, _) = classify_symmetric(&a, &policy).map_err(|e| e.to_string())?;
                ensure(class.tag() == *tag, || {
                    format!("expected {tag}, got {class:?}")
                })?;
                let parts = spectral_nonsingular(&a, &policy).map_err(|e| e.to_string())?;
                let err = (parts.reconstruct() - &a).amax() / a.amax();
                ensure(err <= TOL, || format!("{tag}: spectral round trip {err:e}"))?;
                worst_err = worst_err.max(err);
                if *tag == "PosDef" || *tag == "PosDefMult" {
                    let t = cholesky(&a, &policy).map_err(|e| e.to_string())?.t;
                    let err = (t.transpose() * &t - &a).amax() / a.amax();
                    ensure(err <= TOL, || format!("{tag}: cholesky round trip {err:e}"))?;
                }
                a
            }
            Shape::Rect(n, m, sigma) => {
                let u = haar_stiefel(&mut rng, *n, sigma.len());
                let v = haar_stiefel(&mut rng, *m, sigma.len());
                let x = u * DMatrix::from_diagonal(&DVector::from_row_slice(sigma)) * v.transpose();
                let (class, _) = classify_rect(&x, &policy).map_err(|e| e.to_string())?;
                ensure(class.tag() == *tag, || {
                    format!("expected {tag}, got {class:?}")
                })?;
                x
            }
        };
        seen.insert(*tag);

        let svd = svd_nonsingular(&x, &policy).map_err(|e| e.to_string())?;
        let err = (svd.reconstruct() - &x).amax() / x.amax();
        ensure(err <= TOL, || format!("{tag}: svd round trip {err:e}"))?;

        let y = moore_penrose(&x, &policy).map_err(|e| e.to_string())?;
        let err = penrose(&x, &y);
        ensure(err <= TOL, || format!("{tag}: Penrose identities {err:e}"))?;
        let back = moore_penrose(&y, &policy).map_err(|e| e.to_string())?;
        let err = (&back - &x).amax() / x.amax();
        ensure(err <= TOL, || format!("{tag}: involution {err:e}"))?;

        let mut recip: Vec<f64> = svd.sigma.iter().map(|s| 1.0 / s).collect();
        recip.sort_by(|a, b| b.total_cmp(a));
        let inv_sigma = svd_nonsingular(&y, &policy)
            .map_err(|e| e.to_string())?
            .sigma;
        ensure(inv_sigma.len() == recip.len(), || {
            format!("{tag}: pinv rank")
        })?;
        for (a, b) in inv_sigma.iter().zip(&recip) {
            ensure(rel(*a, *b) <= TOL, || {
                format!("{tag}: reciprocity {a} vs {b}")
            })?;
        }
        worst_err = worst_err.max(err);
    }
    ensure(seen.len() == 14, || {
        format!("only {} class tags covered", seen.len())
    })?;
    Ok(format!(
        "200 matrices, 14 tags, max round-trip err {worst_err:.2e}"
    ))
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_volform"))
            .args(["verify", "--suite", "all", "--seed", "42"])
            .env_remove("VOLFORM_SEED")
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.success(), || {
        format!(
            "exit {:?}: {}",
            a.status.code(),
            String::from_utf8_lossy(&a.stderr)
        )
    })?;
    ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || {
        "reports differ between runs".into()
    })?;
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        (
            "indefinite nonsingular spectral measure",
            indefinite_nonsingular,
            Duration::from_secs(5),
        ),
        (
            "indefinite singular spectral measure",
            indefinite_singular,
            Duration::from_secs(5),
        ),
        (
            "semidefinite, full-rank and SVD measures",
            measure_suites,
            Duration::from_secs(10),
        ),
        (
            "pseudoinverse composition",
            composition,
            Duration::from_secs(2),
        ),
        (
            "indefinite pseudoinverse adjudication",
            indefinite_pinv_adjudication,
            Duration::from_secs(5),
        ),
        ("degeneracy under ties", degeneracy, Duration::from_secs(5)),
        (
            "wedge engine self-consistency",
            wedge_engine,
            Duration::from_secs(10),
        ),
        (
            "Monte Carlo factorization checks",
            monte_carlo,
            Duration::from_secs(120),
        ),
        (
            "decomposition contracts",
            decomposition_contracts,
            Duration::from_secs(5),
        ),
        (
            "deterministic verify reports",
            determinism,
            Duration::from_secs(60),
        ),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if took <= *budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {took:.1?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name} [{took:.2?}] {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{took:.2?}] {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
