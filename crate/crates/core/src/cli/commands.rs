use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::files::{instance_path, read_json, read_set, write_csv, write_json, InstanceFile, PlacementFile, SetFile};
use super::{Outcome, RunConfig};
use crate::concentration::{concentration_ratio, fit_constant, tail_bound, ConcentrationReport};
use crate::counterexample::{
    assemble_global, block_probes, block_thinness, choose_scale, thinness_constant, Bump, BumpKind,
    CounterexampleInstance, GlobalPair,
};
use crate::error::{Error, Result};
use crate::interval_sets::{
    density_profile, epsilon_thin_check, sigma_from_gap, AnySet, Interval, IntervalSet, RealSet,
};
use crate::uniqueness::{
    assemble_lambda, averaged_g_identity, e_r_set, monte_carlo_audit, sample_alphas, LambdaOptions,
    IDENTITY_TOLERANCE,
};

/// Windows whose clipped set would exceed this many pieces are skipped.
const PIECE_LIMIT: u64 = 1 << 22;
const THINNESS_PROBES: usize = 512;
const AUDIT_QUORUM: f64 = 0.9;
/// Rounding allowance for bounds that the offset rule attains with equality.
const RELATIVE_SLACK: f64 = 1e-12;

fn common_gap() -> Interval<f64> {
    Interval::new(0.4, 0.6).expect("valid gap")
}

fn bump() -> Result<Arc<Bump>> {
    Ok(Arc::new(Bump::build(BumpKind::Classic)?))
}

pub fn construct(config: &RunConfig) -> Result<Outcome> {
    let o = &config.options;
    let digest = config.digest();
    let bump = bump()?;
    let ns: Vec<u32> = o.n_range.levels().collect();
    let built: Vec<Result<CounterexampleInstance>> = ns
        .par_iter()
        .map(|&n| choose_scale(n, o.target_c / n as f64, bump.clone(), o.n_cap, o.mass_method.into(), o.grid_refinement))
        .collect();
    let levels = built.into_iter().collect::<Result<Vec<_>>>()?;
    let pair = assemble_global(levels)?;

    let dir = &o.output_path;
    let mut out = Outcome::default();
    for level in &pair.levels {
        let file = InstanceFile { config_digest: digest.clone(), instance: level.to_record() };
        write_json(&instance_path(dir, level.params.n), &file)?;
        let search = level.search.as_ref().expect("searched level");
        out.lines.push(format!(
            "n={} m={} L={} N={} ratio={:.6} offset={}",
            level.params.n, level.params.m, level.params.compression, level.params.scale, search.report.ratio, level.offset
        ));
    }
    write_json(&dir.join("s.json"), &SetFile { config_digest: Some(digest.clone()), set: AnySet::Finite(pair.s.clone()) })?;
    write_json(&dir.join("q.json"), &SetFile { config_digest: Some(digest.clone()), set: AnySet::Blocks(pair.q.clone()) })?;
    write_json(&dir.join("placements.json"), &PlacementFile { config_digest: digest, placements: pair.placements.clone() })?;
    out.lines.push(format!("|S| = {:.12}, |Q| = {:.6}", pair.s.measure(), pair.q.measure()));
    Ok(out)
}

fn load_pair(config: &RunConfig) -> Result<GlobalPair> {
    let bump = bump()?;
    let mut levels = Vec::new();
    let mut stored = Vec::new();
    for n in config.options.n_range.levels() {
        let file: InstanceFile = read_json(&instance_path(&config.options.output_path, n))?;
        stored.push(file.instance.offset);
        levels.push(file.instance.restore(bump.clone())?);
    }
    let pair = assemble_global(levels)?;
    for (level, &offset) in pair.levels.iter().zip(&stored) {
        if level.offset != offset {
            return Err(Error::InvalidArgument(format!(
                "stored offset {offset} for n = {} differs from the placement rule ({})",
                level.params.n, level.offset
            )));
        }
    }
    Ok(pair)
}

#[derive(Serialize)]
struct ConcentrationRow {
    config_digest: String,
    n: u32,
    scale: u64,
    total_mass: f64,
    exact_mass: f64,
    mass_on_q: f64,
    mass_off_q_in_window: f64,
    tail_bound: f64,
    ratio: f64,
    target_ratio: f64,
    grid_step: f64,
    window_lo: f64,
    window_hi: f64,
    method: String,
}

#[derive(Serialize)]
struct DensityRow {
    config_digest: String,
    n: u32,
    offset: f64,
    r: f64,
    density: f64,
    bound: f64,
    density_before: f64,
    before_bound: f64,
}

#[derive(Serialize)]
struct ThinnessRow {
    config_digest: String,
    n: u32,
    eps: f64,
    construction_worst: f64,
    pass: bool,
    assembled_worst: f64,
}

#[derive(Serialize)]
struct GapRow {
    config_digest: String,
    scope: String,
    sigma: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct CheckRecord {
    name: String,
    pass: bool,
}

#[derive(Serialize)]
struct VerifySummary {
    config_digest: String,
    concentration_constant: f64,
    thinness_constant: f64,
    checks: Vec<CheckRecord>,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn verify(config: &RunConfig) -> Result<Outcome> {
    let o = &config.options;
    let digest = config.digest();
    let dir = &o.output_path;
    let pair = load_pair(config)?;
    let mut out = Outcome::default();
    let mut checks = Vec::new();
    let mut record = |out: &mut Outcome, ok: bool, name: String| {
        out.check(ok, name.clone());
        checks.push(CheckRecord { name, pass: ok });
    };

    let reports = pair
        .levels
        .iter()
        .map(|l| concentration_ratio(l, o.mass_method.into(), o.grid_refinement))
        .collect::<Result<Vec<ConcentrationReport>>>()?;
    let rows: Vec<ConcentrationRow> = reports
        .iter()
        .map(|r| ConcentrationRow {
            config_digest: digest.clone(),
            n: r.n,
            scale: r.scale,
            total_mass: r.total_mass,
            exact_mass: r.exact_mass,
            mass_on_q: r.mass_on_q,
            mass_off_q_in_window: r.mass_off_q_in_window,
            tail_bound: r.tail_bound,
            ratio: r.ratio,
            target_ratio: o.target_c / r.n as f64,
            grid_step: r.grid_step,
            window_lo: r.window.lo(),
            window_hi: r.window.hi(),
            method: format!("{:?}", r.method).to_lowercase(),
        })
        .collect();
    write_csv(&dir.join("concentration.csv"), &rows)?;
    for r in &rows {
        record(&mut out, r.ratio <= r.target_ratio, format!("ratio(n={}) = {} within target {}", r.n, r.ratio, r.target_ratio));
        out.lines.push(format!("n={} ratio={:.6} n*ratio={:.4}", r.n, r.ratio, r.n as f64 * r.ratio));
    }
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    record(&mut out, strictly_decreasing(&ratios), "ratios strictly decreasing".into());
    let c = fit_constant(&reports);
    out.lines.push(format!("concentration constant C = {c:.4}"));

    let radii: Vec<f64> = pair.placements.iter().map(|p| p.offset + p.scale as f64).collect();
    let profile = density_profile(&pair.q, &radii)?;
    let density_rows: Vec<DensityRow> = pair
        .placements
        .iter()
        .zip(&profile)
        .map(|(p, d)| DensityRow {
            config_digest: digest.clone(),
            n: p.n,
            offset: p.offset,
            r: d.r,
            density: d.ratio,
            bound: p.density_bound,
            density_before: p.density_before,
            before_bound: 1.0 / (p.n * p.n) as f64,
        })
        .collect();
    write_csv(&dir.join("density.csv"), &density_rows)?;
    let densities: Vec<f64> = density_rows.iter().map(|d| d.density).collect();
    record(&mut out, strictly_decreasing(&densities), "density profile at block edges decreasing".into());
    record(
        &mut out,
        densities.last() < densities.first() || densities.len() == 1,
        "density profile final entry below first".into(),
    );
    for d in &density_rows {
        record(&mut out, d.density <= d.bound * (1.0 + RELATIVE_SLACK), format!("density at r = {} within offset-rule bound", d.r));
        record(
            &mut out,
            d.density_before <= d.before_bound * (1.0 + RELATIVE_SLACK),
            format!("earlier blocks below 1/n^2 at n = {}", d.n),
        );
    }

    let thin = block_thinness(&pair, THINNESS_PROBES)?;
    let tc = thinness_constant(&thin);
    let mut thin_rows = Vec::new();
    for (level, t) in pair.levels.iter().zip(&thin) {
        let eps = tc / t.n as f64;
        let probes = block_probes(0.0, level.params.scale, THINNESS_PROBES);
        let rep = epsilon_thin_check(&level.q_n, eps, &probes)?;
        record(&mut out, rep.pass, format!("Q_{} is {eps}-thin", t.n));
        thin_rows.push(ThinnessRow {
            config_digest: digest.clone(),
            n: t.n,
            eps,
            construction_worst: t.construction_worst,
            pass: rep.pass,
            assembled_worst: t.assembled_worst,
        });
    }
    write_csv(&dir.join("thinness.csv"), &thin_rows)?;
    let worst: Vec<f64> = thin.iter().map(|t| t.construction_worst).collect();
    record(&mut out, strictly_decreasing(&worst), "block thinness decreasing".into());
    out.lines.push(format!("thinness constant = {tc:.4}"));

    let mut gap_rows = Vec::new();
    let scopes = pair
        .levels
        .iter()
        .map(|l| (format!("S_{}", l.params.n), sigma_from_gap(&l.s_n, 1.0, &common_gap())))
        .chain(std::iter::once(("S".to_string(), sigma_from_gap(&pair.s, 1.0, &common_gap()))));
    for (scope, g) in scopes {
        record(&mut out, g.is_ok(), format!("gap check {scope}"));
        gap_rows.push(GapRow { config_digest: digest.clone(), sigma: g.as_ref().ok().map(|g| g.sigma), pass: g.is_ok(), scope });
    }
    write_csv(&dir.join("gaps.csv"), &gap_rows)?;
    record(&mut out, pair.s.measure() <= 1.0, "|S| <= 1".into());

    write_json(
        &dir.join("verify.json"),
        &VerifySummary { config_digest: digest, concentration_constant: c, thinness_constant: tc, checks },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct CertificateRow {
    config_digest: String,
    alpha: f64,
    j: u32,
    count: u64,
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct RadiusRow {
    config_digest: String,
    r: f64,
    lhs: Option<f64>,
    rhs: Option<f64>,
    diff: Option<f64>,
    e_r_measure: Option<f64>,
    skipped: bool,
}

#[derive(Serialize)]
struct AuditSummary<'a> {
    config_digest: &'a str,
    sigma: f64,
    seed: u64,
    samples: usize,
    j_max: u32,
    quorum: f64,
    block_pass_fraction: &'a [f64],
    tail_from: Option<u32>,
    tail_fraction: f64,
}

#[derive(Serialize)]
struct LambdaFile<'a> {
    config_digest: &'a str,
    assembly: &'a crate::uniqueness::LambdaAssembly,
}

fn resolve_sigma(config: &RunConfig) -> Result<f64> {
    if let Some(s) = config.options.sigma {
        return Ok(s);
    }
    let s_path = config.options.output_path.join("s.json");
    let g = if s_path.exists() {
        sigma_from_gap(&read_set(&s_path)?, 1.0, &common_gap())?
    } else {
        sigma_from_gap(&IntervalSet::<f64>::empty(), 1.0, &common_gap())?
    };
    Ok(g.sigma)
}

pub fn bm_audit(config: &RunConfig) -> Result<Outcome> {
    let o = &config.options;
    let digest = config.digest();
    let dir = &o.output_path;
    let q_path = o.q_file.clone().unwrap_or_else(|| dir.join("q.json"));
    let q = read_set(&q_path)?;
    let sigma = resolve_sigma(config)?;
    let mut out = Outcome::default();

    let alphas = sample_alphas(o.seed, o.alpha_samples);
    let mc = monte_carlo_audit(&q, sigma, o.j_max, &alphas, AUDIT_QUORUM)?;
    let certs: Vec<CertificateRow> = mc
        .audits
        .iter()
        .flat_map(|a| a.certificates.iter())
        .map(|c| CertificateRow {
            config_digest: digest.clone(),
            alpha: c.alpha,
            j: c.j,
            count: c.count,
            threshold: c.threshold,
            pass: c.pass,
        })
        .collect();
    write_csv(&dir.join("certificates.csv"), &certs)?;
    let passed = certs.iter().filter(|c| c.pass).count();
    out.lines.push(format!("sigma={sigma} block certificates passed: {passed}/{}", certs.len()));
    write_json(
        &dir.join("audit.json"),
        &AuditSummary {
            config_digest: &digest,
            sigma,
            seed: o.seed,
            samples: mc.samples,
            j_max: o.j_max,
            quorum: mc.quorum,
            block_pass_fraction: &mc.block_pass_fraction,
            tail_from: mc.tail_from,
            tail_fraction: mc.tail_fraction,
        },
    )?;

    let mut rows = Vec::new();
    for k in 0..=o.j_max {
        let r = (k as f64).exp2();
        let window = Interval::new(0.0, r).expect("positive radius");
        if q.pieces_within(&window) > PIECE_LIMIT {
            rows.push(RadiusRow { config_digest: digest.clone(), r, lhs: None, rhs: None, diff: None, e_r_measure: None, skipped: true });
            continue;
        }
        let (lhs, rhs) = match averaged_g_identity(&q, r) {
            Ok(id) => (id.lhs, id.rhs),
            Err(Error::IdentityViolation { lhs, rhs }) => (lhs, rhs),
            Err(e) => return Err(e),
        };
        out.check((lhs - rhs).abs() <= IDENTITY_TOLERANCE, format!("averaged identity at r = {r}: {lhs} vs {rhs}"));
        let e_r = e_r_set(&q, r, sigma)?.measure();
        rows.push(RadiusRow {
            config_digest: digest.clone(),
            r,
            lhs: Some(lhs),
            rhs: Some(rhs),
            diff: Some(lhs - rhs),
            e_r_measure: Some(e_r),
            skipped: false,
        });
    }
    write_csv(&dir.join("identity.csv"), &rows)?;

    match mc.tail_from {
        None => out.check(false, format!("no dyadic tail up to j = {} where {} of the shifts pass", o.j_max, AUDIT_QUORUM)),
        Some(from) => {
            out.lines.push(format!("tail j = {from}..={}: {:.2} of shifts pass", o.j_max, mc.tail_fraction));
            let opts = LambdaOptions {
                sigma,
                count: o.lambda_count,
                window: Interval::new(0.0, o.lambda_window).expect("validated window"),
                audit_j_min: from,
                audit_j_max: o.j_max,
                sample_budget: o.lambda_budget,
            };
            let lambda = assemble_lambda(&q, &opts)?;
            out.lines.push(format!(
                "lambda: {} points from {} shifts ({} skipped)",
                lambda.lambda.len(),
                lambda.alphas.len(),
                lambda.skipped.len()
            ));
            write_json(&dir.join("lambda.json"), &LambdaFile { config_digest: &digest, assembly: &lambda })?;
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ProfileRow {
    config_digest: String,
    t: f64,
    value: f64,
    bound_only: bool,
    in_q: bool,
}

#[derive(Serialize)]
struct EnvelopeRow {
    config_digest: String,
    u: f64,
    amplitude: Option<f64>,
    envelope: f64,
    tail_bound: Option<f64>,
}

#[derive(Serialize)]
struct IntervalRow {
    config_digest: String,
    lo: f64,
    hi: f64,
}

#[derive(Serialize)]
struct BlockRow {
    config_digest: String,
    n: u32,
    offset: f64,
    period: f64,
    pattern_lo: f64,
    pattern_hi: f64,
    index_lo: i64,
    index_hi: i64,
}

const PROFILE_POINTS: usize = 2001;
const ENVELOPE_POINTS: usize = 513;

fn export_level(dir: &Path, digest: &str, level: &CounterexampleInstance) -> Result<()> {
    let f = level.function();
    let q = level.placed_q();
    let nn = level.params.scale as f64;
    let l = level.params.compression as f64;
    let half = 4.0 / nn;
    let profile: Vec<ProfileRow> = (0..PROFILE_POINTS)
        .map(|i| {
            let t = level.offset - half + 2.0 * half * i as f64 / (PROFILE_POINTS - 1) as f64;
            let v = f.eval(t);
            ProfileRow { config_digest: digest.to_string(), t, value: v.value, bound_only: v.bound_only, in_q: q.contains(t) }
        })
        .collect();
    write_csv(&dir.join(format!("profile_n{}.csv", level.params.n)), &profile)?;
    let c1 = level.bump.c1();
    let envelope: Vec<EnvelopeRow> = (0..ENVELOPE_POINTS)
        .map(|i| {
            let u = 2.0 * nn * i as f64 / (ENVELOPE_POINTS - 1) as f64;
            EnvelopeRow {
                config_digest: digest.to_string(),
                u,
                amplitude: f.envelope_at(u).map(f64::abs),
                envelope: level.bump.envelope(u / l) / l,
                tail_bound: (u >= l).then(|| tail_bound(&level.params, c1, u)).transpose().ok().flatten(),
            }
        })
        .collect();
    write_csv(&dir.join(format!("envelope_n{}.csv", level.params.n)), &envelope)?;
    Ok(())
}

pub fn export(config: &RunConfig) -> Result<Outcome> {
    let digest = config.digest();
    let dir = &config.options.output_path;
    let pair = load_pair(config)?;
    for level in &pair.levels {
        export_level(dir, &digest, level)?;
    }
    let s_rows: Vec<IntervalRow> = pair
        .s
        .intervals()
        .iter()
        .map(|i| IntervalRow { config_digest: digest.clone(), lo: i.lo(), hi: i.hi() })
        .collect();
    write_csv(&dir.join("s_intervals.csv"), &s_rows)?;
    let blocks: Vec<BlockRow> = pair
        .levels
        .iter()
        .flat_map(|level| {
            let q = level.placed_q();
            let digest = digest.clone();
            q.pattern()
                .intervals()
                .iter()
                .map(|p| BlockRow {
                    config_digest: digest.clone(),
                    n: level.params.n,
                    offset: q.offset(),
                    period: q.period(),
                    pattern_lo: p.lo(),
                    pattern_hi: p.hi(),
                    index_lo: *q.index_range().start(),
                    index_hi: *q.index_range().end(),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    write_csv(&dir.join("q_blocks.csv"), &blocks)?;
    Ok(Outcome { lines: vec![format!("exported {} levels to {}", pair.levels.len(), dir.display())], failures: vec![] })
}
