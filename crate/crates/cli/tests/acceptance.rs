//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use bubble_core::jacobi::{self, Grid};
use bubble_core::moduli::{self, SearchConfig, SweepConfig};
use bubble_core::quadrature::QuadratureSpec;
use bubble_core::residue::{classify_detailed, ClassifyConfig, Verdict};
use bubble_core::spectral::{spectrum, SpectralConfig, SPECTRAL_GAP_THRESHOLD};
use bubble_core::{make_bubble, Bubble, Cx, Mobius, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const BIN: &str = env!("CARGO_BIN_EXE_bubble-kernel");

fn bub(p: &[f64], q: &[f64]) -> Bubble<f64> {
    make_bubble(Polynomial::from_real(p), Polynomial::from_real(q), [0.0; 3]).unwrap()
}

fn monomial(k: usize) -> Bubble<f64> {
    let mut p = vec![0.0; k + 1];
    p[k] = 1.0;
    bub(&p, &[1.0])
}

fn suite() -> Vec<(&'static str, Bubble<f64>)> {
    vec![
        ("identity", monomial(1)),
        ("z^2", monomial(2)),
        ("z^3", monomial(3)),
        ("(z^3+2)/z", bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0])),
        ("(z^4+z)/(z^2+2)", bub(&[0.0, 1.0, 0.0, 0.0, 1.0], &[2.0, 0.0, 1.0])),
    ]
}

fn normal(rng: &mut ChaCha8Rng) -> Cx<f64> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Cx::new(re, im)
}

fn random_bubble(rng: &mut ChaCha8Rng, k: usize) -> Bubble<f64> {
    let other = rng.random_range(0..=k);
    let (dp, dq) = if rng.random_bool(0.5) { (k, other) } else { (other, k) };
    let p = Polynomial::new((0..=dp).map(|_| normal(rng)).collect());
    let q = Polynomial::new((0..=dq).map(|_| normal(rng)).collect());
    make_bubble(p, q, [0.0; 3]).unwrap()
}

struct Tally {
    failed: Vec<usize>,
    row_sum_worst: f64,
    systems: usize,
}

impl Tally {
    fn line(&mut self, n: usize, name: &str, ok: bool, detail: String) {
        println!("[{}] {n:>2}. {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(n);
        }
    }

    fn classify(&mut self, b: &Bubble<f64>, cfg: &ClassifyConfig) -> Result<bubble_core::residue::Classification<f64>, String> {
        let c = classify_detailed(b, cfg).map_err(|e| e.to_string())?;
        if c.system.rows() > 0 {
            self.systems += 1;
            self.row_sum_worst = self.row_sum_worst.max(c.system.row_sum_defect);
        }
        Ok(c)
    }
}

fn criterion_1(t: &mut Tally) {
    let b = bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]);
    let start = Instant::now();
    let res = t.classify(&b, &ClassifyConfig::default());
    let elapsed = start.elapsed();
    let (ok, detail) = match res {
        Ok(c) => {
            let r = &c.report;
            let smin = *r.singular_values.last().unwrap_or(&f64::NAN);
            let smax = r.singular_values.first().copied().unwrap_or(0.0).max(1.0);
            let ok = r.verdict == Verdict::Degenerate
                && r.d == 1
                && r.dim_n == 5
                && r.dim_kernel == 19
                && smin < 1e-9 * smax
                && elapsed < Duration::from_secs(1);
            (
                ok,
                format!(
                    "verdict {:?}, d {}, dim_N {}, dim_kernel {}, sigma_min {smin:.3e} (reference {smax:.3e}), {elapsed:.2?}",
                    r.verdict, r.d, r.dim_n, r.dim_kernel
                ),
            )
        }
        Err(e) => (false, e),
    };
    t.line(1, "(z^3+2)/z is degenerate with d = 1", ok, detail);
}

fn criterion_2(t: &mut Tally) {
    let cfg = ClassifyConfig::default();
    let mut bad = Vec::new();
    let mut checked = 0;
    let mut cases: Vec<(String, Bubble<f64>)> = (1..=6).map(|k| (format!("z^{k}"), monomial(k))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in [1, 2] {
        for i in 0..100 {
            cases.push((format!("random degree {k} #{i}"), random_bubble(&mut rng, k)));
        }
    }
    for (name, b) in &cases {
        checked += 1;
        match t.classify(b, &cfg) {
            Ok(c) => {
                let r = &c.report;
                if r.verdict != Verdict::Nondegenerate || r.dim_kernel != 4 * r.k + 5 || r.borderline {
                    bad.push(format!("{name}: d {} borderline {}", r.d, r.borderline));
                }
            }
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    t.line(
        2,
        "z^k (k = 1..6) and random degree 1, 2 are nondegenerate",
        bad.is_empty(),
        format!("{checked} bubbles, {} failures {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()),
    );
}

fn criterion_3(t: &mut Tally) {
    let quad = QuadratureSpec::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, b) in suite() {
        let start = Instant::now();
        let e = b.energy(&quad);
        let elapsed = start.elapsed();
        match e {
            Ok(e) => {
                let k = b.degree() as f64;
                let rel = (e.value / (8.0 * PI) - k).abs() / k;
                ok &= rel < 1e-8 && elapsed < Duration::from_secs(10);
                parts.push(format!("{name} rel {rel:.1e} in {elapsed:.2?}"));
            }
            Err(err) => {
                ok = false;
                parts.push(format!("{name}: {err}"));
            }
        }
    }
    t.line(3, "energy / 8pi = k", ok, parts.join("; "));
}

fn criterion_4(t: &mut Tally) {
    let mut bad = Vec::new();
    let mut count = 0;
    let mut cases: Vec<Bubble<f64>> = suite().into_iter().map(|(_, b)| b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..200 {
        let k = 1 + i % 5;
        cases.push(random_bubble(&mut rng, k));
    }
    for b in &cases {
        count += 1;
        match b.branch_set() {
            Ok(s) if s.ramification() == 2 * (b.degree() - 1) => {}
            Ok(s) => bad.push(format!("k {} sum {}", b.degree(), s.ramification())),
            Err(e) => bad.push(e.to_string()),
        }
    }
    t.line(
        4,
        "Riemann-Hurwitz sum equals 2(k-1)",
        bad.is_empty(),
        format!("{count} bubbles, {} violations {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()),
    );
}

fn criterion_5(t: &mut Tally) {
    let cfg = SpectralConfig::default();
    let cases = [
        ("identity", monomial(1), 3),
        ("z^3", monomial(3), 3),
        ("(z^3+2)/z", bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]), 5),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, b, expected) in cases {
        let start = Instant::now();
        let s = spectrum(&b, &cfg);
        let elapsed = start.elapsed();
        let d = t.classify(&b, &ClassifyConfig::default()).map(|c| c.report.d);
        match (s, d) {
            (Ok(s), Ok(d)) => {
                let pass = s.kernel_count == expected
                    && s.kernel_count == 3 + 2 * d
                    && s.gap_ratio >= SPECTRAL_GAP_THRESHOLD
                    && elapsed < Duration::from_secs(60);
                ok &= pass;
                parts.push(format!("{name} count {} (3+2d = {}) gap {:.1e} in {elapsed:.1?}", s.kernel_count, 3 + 2 * d, s.gap_ratio));
            }
            (s, d) => {
                ok = false;
                parts.push(format!("{name}: {:?} {:?}", s.err(), d.err()));
            }
        }
    }
    t.line(5, "spectral kernel count = 3 + 2d at L_max = 40", ok, parts.join("; "));
}

fn criterion_6(t: &mut Tally) {
    let cfg = ClassifyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = Vec::new();
    let mut runs = 0;
    for (name, b) in suite() {
        let base = match t.classify(&b, &cfg) {
            Ok(c) => c.report,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                continue;
            }
        };
        let mut moved = Vec::new();
        for _ in 0..20 {
            moved.push(("domain", b.precompose(&Mobius::random(&mut rng))));
        }
        for _ in 0..20 {
            moved.push(("target", b.rotate_target(&Mobius::random_unitary(&mut rng))));
        }
        for (kind, m) in moved {
            runs += 1;
            let r = m.map_err(|e| e.to_string()).and_then(|m| t.classify(&m, &cfg).map(|c| c.report));
            match r {
                Ok(r) if r.verdict == base.verdict && r.d == base.d && r.dim_kernel == base.dim_kernel => {}
                Ok(r) => bad.push(format!("{name} {kind}: d {} vs {}", r.d, base.d)),
                Err(e) => bad.push(format!("{name} {kind}: {e}")),
            }
        }
    }
    t.line(
        6,
        "verdict, d, dim_kernel invariant under Mobius maps",
        bad.is_empty(),
        format!("{runs} transformed bubbles, {} mismatches {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()),
    );
}

fn criterion_7(t: &mut Tally) {
    let cfg = ClassifyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..60 {
        let b = random_bubble(&mut rng, 3 + i % 3);
        let _ = t.classify(&b, &cfg);
    }
    let ok = t.systems > 0 && t.row_sum_worst < 1e-10;
    let detail = format!("{} systems, worst column sum {:.2e} (relative)", t.systems, t.row_sum_worst);
    t.line(7, "residue theorem column sums vanish", ok, detail);
}

fn criterion_8(t: &mut Tally) {
    let b = bub(&[2.0, 0.0, 0.0, 1.0], &[0.0, 1.0]);
    let result = (|| -> Result<String, String> {
        let c = classify_detailed(&b, &ClassifyConfig::default()).map_err(|e| e.to_string())?;
        let nb = &c.normalized;
        let field = jacobi::reconstruct_field(nb, &c.branch, &c.system, &c.system.basis[0]).map_err(|e| e.to_string())?;
        let grid = Grid::square(&c.branch, 2.0, 32);
        let h = jacobi::DEFAULT_STEP;
        let f = |z: Cx<f64>| field.f(z);
        let res = jacobi::schrodinger_residual(nb, &f, &grid, h);
        let bounded = jacobi::boundedness_check(&f, &c.branch, &grid).map_err(|e| e.to_string())?;
        let trivial = jacobi::trivial_solutions(nb);
        let (rank, _) = jacobi::gram_rank(&[&*trivial[0], &*trivial[1], &*trivial[2], &f], &grid, 1e-8);
        let fields = jacobi::tangent_fields(nb);
        let mut lin = 0.0f64;
        let mut conf = 0.0f64;
        for u in &fields {
            lin = lin.max(jacobi::linearized_residual(nb, &**u, &grid, h));
            conf = conf.max(jacobi::conformal_jacobi_check(nb, &**u, &grid, h));
        }
        let fw = |z: Cx<f64>| {
            let w = nb.jets(z).value;
            let v = field.f(z);
            [v * w[0], v * w[1], v * w[2]]
        };
        lin = lin.max(jacobi::linearized_residual(nb, &fw, &grid, h));
        conf = conf.max(jacobi::conformal_jacobi_check(nb, &fw, &grid, h));
        let ok = res < 1e-6 && rank == 4 && fields.len() == 14 && lin < 1e-6 && conf < 1e-6;
        let detail = format!(
            "schrodinger {res:.1e}, annulus variation {bounded:.1e}, Gram rank {rank}, {} tangent fields, linearized {lin:.1e}, conformal {conf:.1e}",
            fields.len()
        );
        if ok {
            Ok(detail)
        } else {
            Err(detail)
        }
    })();
    match result {
        Ok(d) => t.line(8, "Jacobi field reconstruction on (z^3+2)/z", true, d),
        Err(d) => t.line(8, "Jacobi field reconstruction on (z^3+2)/z", false, d),
    }
}

fn criterion_9(t: &mut Tally) {
    let cfg = SweepConfig {
        n_starts: 50,
        seed: 7,
        search: SearchConfig::default(),
    };
    let start = Instant::now();
    let sweep = moduli::uniqueness_sweep::<f64>(3, &cfg);
    let elapsed = start.elapsed();
    let (ok, detail) = match sweep {
        Ok(s) => {
            let reference = moduli::reference_bubble::<f64>();
            let one = s.classes.len() == 1;
            let (j, dist) = s.classes.first().map_or((f64::NAN, f64::NAN), |c| {
                let j = Cx::new(c.j_invariant[0], c.j_invariant[1]).norm();
                let d = moduli::normal_form_distance(&reference, &c.representative.bubble).unwrap_or(f64::INFINITY);
                (j, d)
            });
            let ok = one && j < 1e-6 && dist < moduli::MATCH_TOL && elapsed < Duration::from_secs(600);
            (
                ok,
                format!(
                    "{} classes from {} converged of 50 ({} failed), |j| {j:.1e}, normal-form distance to (z^3+2)/z {dist:.1e}, {elapsed:.1?}",
                    s.classes.len(),
                    s.n_converged(),
                    s.failures.len()
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    t.line(9, "degree-3 sweep finds exactly one class", ok, detail);
}

fn cli_output(args: &[&str], threads: usize) -> Result<Vec<u8>, String> {
    let out = Command::new(BIN)
        .args(args)
        .env("BUBBLE_KERNEL_THREADS", threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    Ok(out.stdout)
}

fn criterion_10(t: &mut Tally) {
    let cubic = ["--P", "[[2,0],[0,0],[0,0],[1,0]]", "--Q", "[[0,0],[1,0]]"];
    let mut runs: Vec<Vec<&str>> = vec![[&["classify"][..], &cubic[..]].concat()];
    for (p, q) in [("[0,1]", "[1]"), ("[0,0,0,1]", "[1]"), ("[2,0,0,1]", "[0,1]")] {
        runs.push(vec!["verify", "--P", p, "--Q", q]);
    }
    runs.push(vec!["sweep", "--k", "3", "--starts", "50", "--seed", "7"]);
    let mut ok = true;
    let mut parts = Vec::new();
    for args in &runs {
        let outputs: Vec<Result<Vec<u8>, String>> = [1, 2, 4].iter().map(|&n| cli_output(args, n)).collect();
        let same = outputs.iter().all(|o| o.is_ok() && o.as_ref().ok() == outputs[0].as_ref().ok())
            && outputs[0].as_ref().is_ok_and(|o| !o.is_empty());
        ok &= same;
        parts.push(format!("{} {}", args[0], if same { "identical" } else { "differs" }));
    }
    t.line(10, "bit-identical JSON over runs with 1, 2, 4 threads", ok, parts.join("; "));
}

fn main() {
    let mut t = Tally {
        failed: Vec::new(),
        row_sum_worst: 0.0,
        systems: 0,
    };
    criterion_1(&mut t);
    criterion_2(&mut t);
    criterion_3(&mut t);
    criterion_4(&mut t);
    criterion_5(&mut t);
    criterion_6(&mut t);
    criterion_7(&mut t);
    criterion_8(&mut t);
    criterion_9(&mut t);
    criterion_10(&mut t);
    if t.failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", t.failed);
        std::process::exit(1);
    }
}
