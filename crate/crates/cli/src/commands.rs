use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tracesolve::concentration::{mc_volume_ratio, mc_volume_ratio_with_threads, SingularProfile};
use tracesolve::expsum::{
    asymptotic_rel_error, grid_points_for, rel_error_sup_on, search_params, ExpSum, TERM_BUDGET,
};
use tracesolve::gausscalc::{
    antisymmetrize, antisymmetry_defect, apply_screened_inverse, compare_u_utilde, fit_kernel,
    residual, sample_points, symmetric_group, GaussianSum, GaussianTerm, KernelMode, KernelSpec,
};
use tracesolve::problem::{solution_file, ProblemFile};
use tracesolve::{Error, Permutation, PermutationAction, SystemDims};

use crate::csv_out::{num, Table};

pub struct CertArgs {
    pub grid: Option<(f64, i64, i64)>,
    pub tol: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub per_period: usize,
}

/// Certifies a grid sum on `[lo, hi]`, or searches one for `tol`. The
/// table lists the terms; a failed certification is reported after the
/// table has been produced.
pub fn expsum_cert(args: &CertArgs) -> anyhow::Result<(Table, Option<Error>)> {
    let (h, k1, k2) = match (args.grid, args.tol) {
        (Some(g), _) => g,
        (None, Some(tol)) => {
            let s = search_params(args.lo, args.hi, tol, TERM_BUDGET)?;
            (s.h, s.k1, s.k2)
        }
        (None, None) => {
            return Err(Error::InvalidInput("give either --h/--k1/--k2 or --tol".into()).into())
        }
    };
    let sum = ExpSum::build(h, k1, k2)?;
    let points = grid_points_for(args.lo, args.hi, h, args.per_period);
    let report = rel_error_sup_on(&sum, args.lo, args.hi, points)?;
    let mut t = Table::new("tracesolve-expsum-cert/1", &["k", "weight", "rate"])
        .param("h", h)
        .param("k1", k1)
        .param("k2", k2)
        .param("lo", args.lo)
        .param("hi", args.hi)
        .param("grid_points", points)
        .param("sup_error", report.sup_error)
        .param("argmax_r", report.argmax_r)
        .param("asymptotic", asymptotic_rel_error(h));
    for (k, term) in (k1..=k2).zip(sum.terms()) {
        t.push(vec![k.to_string(), num(term.weight), num(term.rate)]);
    }
    eprintln!(
        "h={h} k1={k1} k2={k2} terms={} sup|r v(r) - 1| on [{}, {}] = {:.3e}",
        sum.len(),
        args.lo,
        args.hi,
        report.sup_error
    );
    let failure = args.tol.filter(|&tol| report.sup_error > tol).map(|tol| {
        Error::Certification(format!(
            "sup error {:.3e} exceeds tolerance {tol:e}",
            report.sup_error
        ))
    });
    Ok((t, failure))
}

pub struct SolveArgs {
    pub problem: PathBuf,
    pub points: usize,
    pub radius: f64,
    pub seed: u64,
}

/// Summary of a solve run.
pub struct SolveOutcome {
    pub report: Table,
    pub operator_toml: String,
    pub decoupled_toml: String,
    pub residual: f64,
    pub max_rel_dev: f64,
}

pub fn solve(args: &SolveArgs) -> anyhow::Result<SolveOutcome> {
    let text = fs::read_to_string(&args.problem)
        .with_context(|| format!("reading {}", args.problem.display()))?;
    let problem = ProblemFile::parse(&text)?.validate()?;
    let dims = problem.dims;
    let (expsum, grid) = problem.kernel_expsum()?;
    let xs = sample_points(dims.m(), args.points, args.radius, args.seed);
    let ys = xs
        .iter()
        .map(|x| dims.apply_t(x))
        .collect::<tracesolve::Result<Vec<_>>>()?;
    let cmp = compare_u_utilde(&problem.rhs, problem.mu, &dims, &expsum, &ys)?;
    let res = residual(&problem.rhs, &cmp.operator, problem.mu, &dims, &xs)?;
    let mut report = Table::new("tracesolve-solve/1", &["quantity", "value"])
        .param("problem", args.problem.display())
        .param("particles", dims.particles())
        .param("mu", problem.mu)
        .param("points", args.points)
        .param("radius", args.radius)
        .seed(args.seed);
    let rows: [(&str, String); 7] = [
        ("residual_operator", num(res)),
        ("max_rel_dev", num(cmp.max_rel_dev)),
        ("terms_operator", cmp.operator.len().to_string()),
        ("terms_decoupled", cmp.decoupled.len().to_string()),
        ("h", num(grid.0)),
        ("k1", grid.1.to_string()),
        ("k2", grid.2.to_string()),
    ];
    for (k, v) in rows {
        report.push(vec![k.to_string(), v]);
    }
    let op = solution_file(&dims, problem.mu, KernelMode::Operator, grid, &cmp.operator);
    let dec = solution_file(
        &dims,
        problem.mu,
        KernelMode::Decoupled,
        grid,
        &cmp.decoupled,
    );
    Ok(SolveOutcome {
        report,
        operator_toml: op.to_toml()?,
        decoupled_toml: dec.to_toml()?,
        residual: res,
        max_rel_dev: cmp.max_rel_dev,
    })
}

pub enum ProfileSpec {
    Projection { m: usize, n: usize },
    Trace { particles: usize },
    Custom { sigmas: Vec<f64>, n: usize },
}

pub struct McArgs {
    pub profile: ProfileSpec,
    pub delta: f64,
    pub samples: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

pub fn mc(args: &McArgs) -> anyhow::Result<Table> {
    let (name, profile) = match &args.profile {
        ProfileSpec::Projection { m, n } => ("projection", SingularProfile::projection(*m, *n)?),
        ProfileSpec::Trace { particles } => (
            "trace",
            SingularProfile::trace_adjoint(&SystemDims::new(*particles)?),
        ),
        ProfileSpec::Custom { sigmas, n } => ("custom", SingularProfile::new(sigmas.clone(), *n)?),
    };
    let est = match args.threads {
        Some(t) => mc_volume_ratio_with_threads(&profile, args.delta, args.samples, args.seed, t)?,
        None => mc_volume_ratio(&profile, args.delta, args.samples, args.seed)?,
    };
    let (lower, upper) = profile.sandwich(args.delta)?;
    let mut t = Table::new(
        "tracesolve-mc/1",
        &[
            "profile", "m", "n", "delta", "estimate", "stderr", "samples", "lower", "upper",
        ],
    )
    .param("profile", name)
    .param("delta", args.delta)
    .param("samples", args.samples)
    .seed(args.seed);
    t.push(vec![
        name.to_string(),
        profile.m().to_string(),
        profile.n().to_string(),
        num(args.delta),
        num(est.value),
        num(est.stderr),
        est.samples.to_string(),
        num(lower),
        num(upper),
    ]);
    eprintln!(
        "{name}: estimate {:.6} +- {:.2e}, sandwich [{lower:.6}, {upper:.6}]",
        est.value, est.stderr
    );
    Ok(t)
}

pub struct SymArgs {
    pub particles: Vec<usize>,
    pub trials: usize,
    pub solve_max: usize,
    pub seed: u64,
}

pub const TOL_INTERTWINING: f64 = 1e-13;
pub const TOL_KERNEL: f64 = 1e-12;
pub const TOL_SOLUTION: f64 = 1e-10;

fn random_permutation(rng: &mut ChaCha8Rng, len: usize) -> Permutation {
    let mut images: Vec<usize> = (0..len).collect();
    images.shuffle(rng);
    Permutation::new(images).expect("a shuffle is a bijection")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Intertwining `T P = Q T`, invariance `|T'(Q w)| = |T' w|` and the
/// antisymmetry of solutions for antisymmetrized inputs. Returns the table
/// and whether every check passed.
pub fn sym_check(args: &SymArgs) -> anyhow::Result<(Table, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let list: Vec<String> = args.particles.iter().map(|p| p.to_string()).collect();
    let mut t = Table::new(
        "tracesolve-sym-check/1",
        &["N", "check", "value", "tol", "pass"],
    )
    .param("particles", list.join(" "))
    .param("trials", args.trials)
    .param("solve_max", args.solve_max)
    .seed(args.seed);
    let mut all = true;
    let mut record = |t: &mut Table, np: usize, check: &str, value: f64, tol: f64| {
        let pass = value <= tol;
        all &= pass;
        t.push(vec![
            np.to_string(),
            check.to_string(),
            num(value),
            num(tol),
            (pass as u8).to_string(),
        ]);
    };
    for &np in &args.particles {
        let dims = SystemDims::new(np)?;
        let (mut inter, mut kernel) = (0.0f64, 0.0f64);
        for _ in 0..args.trials {
            let act = PermutationAction::new(dims, random_permutation(&mut rng, np))?;
            let x = sample_points(dims.m(), 1, 1.0, rand::Rng::gen(&mut rng)).remove(0);
            let w = sample_points(dims.n(), 1, 1.0, rand::Rng::gen(&mut rng)).remove(0);
            let lhs = dims.apply_t(&act.act_p(&x)?)?;
            let rhs = act.act_q(&dims.apply_t(&x)?)?;
            let d = lhs
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            inter = inter.max(d / norm(&x).max(1.0));
            let a = norm(&dims.apply_tt(&act.act_q(&w)?)?);
            let b = norm(&dims.apply_tt(&w)?);
            kernel = kernel.max((a - b).abs() / b.max(1.0));
        }
        record(&mut t, np, "intertwining", inter, TOL_INTERTWINING);
        record(&mut t, np, "kernel_invariance", kernel, TOL_KERNEL);
        if np <= args.solve_max {
            let (op, dec) = antisymmetric_solutions(&dims, &mut rng)?;
            let group = symmetric_group(&dims)?;
            let pts = sample_points(dims.n(), 20, 0.7, rand::Rng::gen(&mut rng));
            record(
                &mut t,
                np,
                "antisymmetry_operator",
                antisymmetry_defect(&op, &dims, &group, &pts)?,
                TOL_SOLUTION,
            );
            record(
                &mut t,
                np,
                "antisymmetry_decoupled",
                antisymmetry_defect(&dec, &dims, &group, &pts)?,
                TOL_SOLUTION,
            );
        }
    }
    Ok((t, all))
}

/// Solutions in both kernel modes for an antisymmetrized random Gaussian.
pub fn antisymmetric_solutions(
    dims: &SystemDims,
    rng: &mut ChaCha8Rng,
) -> anyhow::Result<(GaussianSum, GaussianSum)> {
    let n = dims.n();
    let center = sample_points(n, 1, 0.5, rand::Rng::gen(rng)).remove(0);
    let scale = 0.5 / n as f64;
    let f = GaussianSum::from_terms(n, vec![GaussianTerm::isotropic(1.0, center, scale)?])?;
    let anti = antisymmetrize(&f, dims, &symmetric_group(dims)?)?;
    let (expsum, _) = fit_kernel(&anti, 1.0, dims, 1e-4)?;
    let op = apply_screened_inverse(
        &anti,
        &KernelSpec::new(KernelMode::Operator, 1.0, expsum.clone())?,
        dims,
    )?;
    let dec = apply_screened_inverse(
        &anti,
        &KernelSpec::new(KernelMode::Decoupled, 1.0, expsum)?,
        dims,
    )?;
    Ok((op, dec))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
