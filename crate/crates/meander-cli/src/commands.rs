// Copyright 2026 The meander authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Subcommand implementations: kernel/FD solves, injection simulation, the
//! verification batteries and diffusion-matrix estimation.

use std::fs;
use std::path::PathBuf;

use meander_core::billiard::{self, EdgeAxis, InitialMeasure};
use meander_core::field::DensityField;
use meander_core::geometry::{boundary_sets, Side};
use meander_core::injection::sample_events;
use meander_core::kernels::fd::{fd_laplace, fd_heat, BoundaryData, Rect};
use meander_core::kernels::{series_extrapolated, BoundaryProfile, SeriesTruncation};
use meander_core::rng;
use meander_core::verify::{self, CheckReport, H2Params, LEConfig};

use crate::config::{CliResult, RunConfig};

pub struct Ctx {
    pub config: RunConfig,
    pub hash: String,
    pub out_dir: PathBuf,
}

impl Ctx {
    pub fn new(config: RunConfig, hash: String, out_override: Option<String>) -> CliResult<Self> {
        let out_dir = PathBuf::from(out_override.unwrap_or_else(|| config.run.out_dir.clone()));
        fs::create_dir_all(&out_dir).map_err(|e| format!("create {}: {e}", out_dir.display()))?;
        Ok(Self {
            config,
            hash,
            out_dir,
        })
    }

    fn meta(&self) -> Vec<(String, String)> {
        vec![
            ("config_sha256".into(), self.hash.clone()),
            ("seed".into(), self.config.run.seed.to_string()),
        ]
    }

    fn write_field(&self, name: &str, field: &DensityField) -> CliResult<PathBuf> {
        let path = self.out_dir.join(name);
        let mut buf = Vec::new();
        field
            .write_csv(&mut buf, &self.meta())
            .map_err(|e| e.to_string())?;
        fs::write(&path, buf).map_err(|e| e.to_string())?;
        Ok(path)
    }

    fn emit_reports(&self, name: &str, reports: &[CheckReport]) -> CliResult<bool> {
        let mut text = String::new();
        for r in reports {
            let line = r.to_json();
            println!("{line}");
            text.push_str(&line);
            text.push('\n');
        }
        let passed = reports.iter().filter(|r| r.pass).count();
        let summary = format!(
            "summary: {passed}/{} checks passed (config {})",
            reports.len(),
            &self.hash[..12]
        );
        println!("{summary}");
        text.push_str(&summary);
        text.push('\n');
        let path = self.out_dir.join(format!("report-{name}.jsonl"));
        fs::write(&path, text).map_err(|e| e.to_string())?;
        Ok(passed == reports.len())
    }
}

/// `solve`: evaluate the kernel series and the finite-difference oracle on a
/// grid and write both fields as CSV.
pub fn solve(ctx: &Ctx) -> CliResult<bool> {
    let grid = ctx.config.solve.as_ref().map(|s| s.grid).unwrap_or(128);
    let f = ctx.config.west_profile_fn()?;
    let horizon = ctx.config.injection.as_ref().and_then(|i| i.horizon);
    let delta_prime = ctx.config.delta_prime();

    let profile = BoundaryProfile::from_fn(Side::West, 1024, 1.0, delta_prime, f.clone())
        .map_err(|e| e.to_string())?;
    let tr = SeriesTruncation::default();
    let mut series = DensityField::new(1.0, horizon);
    let n = grid.min(96);
    for j in 1..n {
        for i in 1..n {
            let z = [i as f64 / n as f64, j as f64 / n as f64];
            let v = series_extrapolated(horizon, z, &profile, 1.0, tr).map_err(|e| e.to_string())?;
            series.push(None, z, v);
        }
    }
    let series_path = ctx.write_field("solve_series.csv", &series)?;

    let data = BoundaryData::new().with(Side::West, f);
    let g = match horizon {
        None => fd_laplace(Rect::unit(), grid, &data).map_err(|e| e.to_string())?,
        Some(t) => {
            let h = 1.0 / grid as f64;
            fd_heat(Rect::unit(), grid, h * h / 4.0, t, &data).map_err(|e| e.to_string())?
        }
    };
    let fd_path = ctx.write_field("solve_fd.csv", &g.to_field())?;
    println!("wrote {} and {}", series_path.display(), fd_path.display());
    Ok(true)
}

/// `simulate`: sample the boundary Poisson process and evolve every particle
/// to time zero; write the empirical counts.
pub fn simulate(ctx: &Ctx) -> CliResult<bool> {
    if ctx.config.billiard.is_some() {
        return simulate_billiard(ctx);
    }
    let model = ctx.config.walk_model()?;
    let domain = ctx.config.domain_spec()?;
    let sites = boundary_sets(domain, model.lattice()).map_err(|e| e.to_string())?;
    let spec = ctx.config.injection_spec(&model)?;
    if spec.horizon.is_none() {
        return Err("simulate needs a finite injection.horizon".into());
    }
    let events = sample_events(&spec, &sites, ctx.config.run.seed).map_err(|e| e.to_string())?;
    let mut counts = vec![0.0f64; sites.len()];
    let mut rng = rng::stream(ctx.config.run.seed, rng::salt::WALK, u64::MAX / 2);
    for ev in &events {
        let rec = meander_core::walk::simulate_path(ev.site, &model, &sites, -ev.time, &[-ev.time], &mut rng)
            .map_err(|e| e.to_string())?;
        if let Some(Some(pos)) = rec.probes.first() {
            if let Some(i) = sites.index_of(*pos) {
                counts[i] += 1.0;
            }
        }
    }
    let mut field = DensityField::new(domain.scale, spec.horizon);
    for (i, c) in counts.iter().enumerate() {
        field.push(Some(sites.site(i)), sites.position(i), *c);
    }
    let path = ctx.write_field("simulate_counts.csv", &field)?;
    println!("{} events -> {}", events.len(), path.display());
    Ok(true)
}

fn simulate_billiard(ctx: &Ctx) -> CliResult<bool> {
    let table = ctx.config.billiard_table()?;
    let section = ctx.config.billiard.as_ref().expect("billiard section");
    let sigma = billiard::estimate_sigma(
        &table,
        InitialMeasure::Nu0,
        section.sigma_time,
        section.sigma_samples,
        ctx.config.run.seed,
    )
    .map_err(|e| e.to_string())?;
    let f = ctx.config.west_profile_fn()?;
    let setup = verify::BilliardMcSetup::new(&table, &sigma, ctx.config.domain.scale)
        .map_err(|e| e.to_string())?;
    let mc = verify::billiard_boundary_mc(
        &table,
        &setup,
        &f,
        [0.5, 0.5],
        section.particles,
        ctx.config.run.seed,
    )
    .map_err(|e| e.to_string())?;
    let mut field = DensityField::new(setup.effective_l(), None);
    let c = setup.center_cell();
    field.push(
        Some(c),
        [c[0] as f64 / setup.s_hat, c[1] as f64 / setup.s_hat],
        mc.estimate,
    );
    let path = ctx.write_field("simulate_counts.csv", &field)?;
    println!(
        "billiard center occupancy {:.5} ± {:.5} -> {}",
        mc.estimate,
        mc.std_error,
        path.display()
    );
    Ok(true)
}

pub fn estimate_sigma(ctx: &Ctx) -> CliResult<bool> {
    let table = ctx.config.billiard_table()?;
    let section = ctx.config.billiard.as_ref().expect("billiard section");
    let est = billiard::estimate_sigma(
        &table,
        InitialMeasure::Nu0,
        section.sigma_time,
        section.sigma_samples,
        ctx.config.run.seed,
    )
    .map_err(|e| e.to_string())?;
    let reports = vec![
        CheckReport::new("sigma.xx", est.sigma[0][0], est.sigma[0][0], 0.0),
        CheckReport::bounded("sigma.xy", est.sigma[0][1], 3.0 * est.std_error[0][1]),
        CheckReport::bounded(
            "sigma.anisotropy",
            est.sigma[0][0] - est.sigma[1][1],
            3.0 * (est.std_error[0][0].powi(2) + est.std_error[1][1].powi(2)).sqrt(),
        ),
    ];
    ctx.emit_reports("estimate-sigma", &reports)
}

pub fn verify_cmd(ctx: &Ctx, which: &str) -> CliResult<bool> {
    match which {
        "h1" => verify_h1(ctx),
        "h2" => verify_h2(ctx),
        "h3" => verify_h3(ctx),
        "duality" => verify_duality(ctx),
        "le" => verify_le(ctx),
        "theorem1" => verify_theorem1(ctx),
        "billiard-invariants" => verify_billiard_invariants(ctx),
        other => Err(format!(
            "unknown verify target {other}; expected h1|h2|h3|duality|le|theorem1|billiard-invariants"
        )),
    }
}

fn verify_h1(ctx: &Ctx) -> CliResult<bool> {
    let model = ctx.config.walk_model()?;
    let report = verify::check_h1(model.lattice()).map_err(|e| e.to_string())?;
    let k1 = report.k1.map(|k| k as f64).unwrap_or(-1.0);
    let k2 = report.k2.map(|k| k as f64).unwrap_or(-1.0);
    let reports = vec![
        CheckReport {
            check: "h1.k1".into(),
            statistic: k1,
            reference: k1,
            tolerance: 0.0,
            pass: true,
        },
        CheckReport {
            check: "h1.k2".into(),
            statistic: k2,
            reference: k2,
            tolerance: 0.0,
            pass: true,
        },
        CheckReport {
            check: "h1.holds".into(),
            statistic: if report.k1.is_some() { 1.0 } else { 0.0 },
            reference: 1.0,
            tolerance: 0.0,
            pass: report.k1.is_some(),
        },
    ];
    ctx.emit_reports("h1", &reports)
}

fn verify_h2(ctx: &Ctx) -> CliResult<bool> {
    let model = ctx.config.walk_model()?;
    let t = ctx
        .config
        .verify
        .as_ref()
        .and_then(|v| v.h2_t)
        .unwrap_or(2500.0);
    let params = H2Params {
        alpha: 0.5,
        beta: 1.5,
        gamma: 0.5,
        eta: 0.5,
        xi: 1.5,
    };
    let stat = verify::h2_walk(&model, t, params, 1, verify::ssrw_c1()).map_err(|e| e.to_string())?;
    let reports = vec![
        CheckReport::new("h2.scaled_vs_reference", stat.scaled, stat.reference, 0.10 * stat.reference),
        CheckReport::new(
            "h2.scaled_vs_effective_geometry",
            stat.scaled,
            stat.effective_reference,
            0.02 * stat.effective_reference,
        ),
    ];
    ctx.emit_reports("h2", &reports)
}

fn verify_h3(ctx: &Ctx) -> CliResult<bool> {
    let model = ctx.config.walk_model()?;
    let l = ctx.config.domain.scale;
    let delta = ctx
        .config
        .verify
        .as_ref()
        .and_then(|v| v.h3_delta)
        .unwrap_or(0.05);
    let z = ctx
        .config
        .verify
        .as_ref()
        .and_then(|v| v.probe)
        .unwrap_or([0.5, 0.5]);
    let big = verify::h3_integral(&model, l, 2.0 * delta, z).map_err(|e| e.to_string())?;
    let mid = verify::h3_integral(&model, l, delta, z).map_err(|e| e.to_string())?;
    let small = verify::h3_integral(&model, l, delta / 2.0, z).map_err(|e| e.to_string())?;
    let reports = vec![
        CheckReport {
            check: "h3.monotone_in_delta".into(),
            statistic: mid.value,
            reference: big.value,
            tolerance: 0.0,
            pass: small.value < mid.value && mid.value < big.value,
        },
        CheckReport::bounded("h3.window_fraction", mid.value / mid.full, 0.10),
    ];
    ctx.emit_reports("h3", &reports)
}

fn verify_duality(ctx: &Ctx) -> CliResult<bool> {
    if ctx.config.billiard.is_some() {
        let table = ctx.config.billiard_table()?;
        let section = ctx.config.billiard.as_ref().expect("billiard");
        let sigma = billiard::estimate_sigma(
            &table,
            InitialMeasure::Nu0,
            section.sigma_time,
            section.sigma_samples,
            ctx.config.run.seed,
        )
        .map_err(|e| e.to_string())?;
        let rep = verify::duality_billiard(
            &table,
            &sigma,
            ctx.config.domain.scale,
            section.particles,
            ctx.config.run.seed,
        )
        .map_err(|e| e.to_string())?;
        let reports = vec![CheckReport::bounded("duality.billiard_center_z", rep.z_score, 3.0)];
        return ctx.emit_reports("duality", &reports);
    }
    let model = ctx.config.walk_model()?;
    let spec = ctx.config.injection_spec(&model)?;
    let l = ctx.config.domain.scale;
    let stationary = verify::duality_walk(&model, &spec, l, None).map_err(|e| e.to_string())?;
    let transient =
        verify::duality_walk(&model, &spec, l, Some(0.5 * l * l)).map_err(|e| e.to_string())?;
    let reports = vec![
        CheckReport::bounded("duality.stationary_max_diff", stationary.max_abs_diff, 1e-10),
        CheckReport::bounded("duality.transient_max_diff", transient.max_abs_diff, 1e-8),
    ];
    ctx.emit_reports("duality", &reports)
}

fn verify_le(ctx: &Ctx) -> CliResult<bool> {
    let model = ctx.config.walk_model()?;
    let spec = ctx.config.injection_spec(&model)?;
    let t = ctx
        .config
        .injection
        .as_ref()
        .and_then(|i| i.horizon)
        .unwrap_or(0.5);
    let trials = ctx
        .config
        .verify
        .as_ref()
        .and_then(|v| v.le_trials)
        .unwrap_or(4000);
    let config = LEConfig {
        l: ctx.config.domain.scale,
        t,
        probes: vec![[0.5, 0.5], [0.3, 0.6], [0.7, 0.4]],
        offsets: vec![[0, 0], [1, 0], [0, 1]],
        trials,
        seed: ctx.config.run.seed,
    };
    let mut spec = spec;
    spec.horizon = None; // le sets its own horizon from config
    let report = verify::le_poissonity_walk(&model, &spec, &config).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for (i, d) in report.dispersion.iter().enumerate() {
        reports.push(CheckReport::new(format!("le.dispersion[{i}]"), *d, 1.0, 0.1));
    }
    reports.push(CheckReport::bounded("le.max_cov_z", report.max_cov_z, 3.0));
    reports.push(CheckReport::bounded(
        "le.max_mean_diff_z",
        report.max_mean_diff_z,
        3.0,
    ));
    ctx.emit_reports("le", &reports)
}

fn verify_theorem1(ctx: &Ctx) -> CliResult<bool> {
    let model = ctx.config.walk_model()?;
    let spec = ctx.config.injection_spec(&model)?;
    let l = ctx.config.domain.scale;
    let z = ctx
        .config
        .verify
        .as_ref()
        .and_then(|v| v.probe)
        .unwrap_or([0.5, 0.5]);
    let t = ctx.config.injection.as_ref().and_then(|i| i.horizon);
    let rep = verify::theorem1_walk(&model, &spec, l, t, z, 1.0).map_err(|e| e.to_string())?;
    let reports = vec![CheckReport::new(
        "theorem1.relative_error",
        rep.occupancy,
        rep.prediction,
        0.05 * rep.prediction,
    )];
    ctx.emit_reports("theorem1", &reports)
}

fn verify_billiard_invariants(ctx: &Ctx) -> CliResult<bool> {
    let table = ctx.config.billiard_table()?;
    let section = ctx.config.billiard.as_ref().expect("billiard");
    let seed = ctx.config.run.seed;

    // Involution anticommutation over sampled points.
    let s = 0.8;
    let mut worst = 0.0f64;
    for k in 0..1000u64 {
        let mut r = rng::stream(seed, rng::salt::BILLIARD, k);
        let x = table.sample_free_point(&mut r);
        let (fx, _) = billiard::flow(&table, &x, s).map_err(|e| e.to_string())?;
        let (back, _) =
            billiard::flow(&table, &billiard::involution(&fx), s).map_err(|e| e.to_string())?;
        let ix = billiard::involution(&x);
        let pb = back.position();
        let pi = ix.position();
        worst = worst
            .max((pb[0] - pi[0]).abs())
            .max((pb[1] - pi[1]).abs())
            .max((back.v[0] - ix.v[0]).abs())
            .max((back.v[1] - ix.v[1]).abs());
    }

    // Speed drift over a long collision chain.
    let mut r = rng::stream(seed, rng::salt::BILLIARD, 1 << 40);
    let mut x = table.sample_free_point(&mut r);
    let mut drift = 0.0f64;
    for _ in 0..1_000_000 {
        let hit = billiard::free_flight(&table, &x).map_err(|e| e.to_string())?;
        x = hit.advance_and_reflect().map_err(|e| e.to_string())?;
        drift = drift.max(((x.v[0] * x.v[0] + x.v[1] * x.v[1]).sqrt() - 1.0).abs());
    }

    let kac = billiard::mean_return(&table, EdgeAxis::Vertical, 200_000, seed)
        .map_err(|e| e.to_string())?;
    let sigma = billiard::estimate_sigma(
        &table,
        InitialMeasure::Nu0,
        section.sigma_time,
        section.sigma_samples,
        seed,
    )
    .map_err(|e| e.to_string())?;

    let reports = vec![
        CheckReport::bounded("billiard.involution_defect", worst, 1e-9),
        CheckReport::bounded("billiard.speed_drift", drift, 1e-12),
        CheckReport::new("billiard.kac_mean_return", kac.mean, kac.kac, 0.02 * kac.kac),
        CheckReport::bounded("billiard.sigma_xy", sigma.sigma[0][1], 3.0 * sigma.std_error[0][1]),
        CheckReport::bounded(
            "billiard.sigma_anisotropy",
            sigma.sigma[0][0] - sigma.sigma[1][1],
            3.0 * (sigma.std_error[0][0].powi(2) + sigma.std_error[1][1].powi(2)).sqrt(),
        ),
        CheckReport {
            check: "billiard.horizon_bound".into(),
            statistic: table.horizon_bound(),
            reference: 0.0,
            tolerance: billiard::HORIZON_HARD_CAP,
            pass: table.horizon_bound() < billiard::HORIZON_HARD_CAP,
        },
    ];
    ctx.emit_reports("billiard-invariants", &reports)
}
