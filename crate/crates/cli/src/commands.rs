use std::fs;

use cbsfs::clonal::{clonal_summary, e_zcl_pow, e_zcl_pow_r, mc_clonal, ClonalStatistic};
use cbsfs::genealogy::{build_tree, newick_export, sample_genealogy, RootMode, SampledGenealogy};
use cbsfs::mc::map_replicates;
use cbsfs::sfs::{
    attach_expected, density_curve, expected_sfs, expected_sfs_averaged, g1, simulate_sfs, LengthRoute, SfsTable,
    SimulationMode,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{document, emit, write_table, Header, Table};
use crate::verify::run_suite;
use crate::{CliError, ClonalMode, Command, Estimator, RootArg, SfsMode, StatisticArg};

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<bool, CliError> {
    match command {
        Command::Sample { root } => sample(cfg, *root).map(|_| true),
        Command::Sfs { mode, estimator } => sfs(cfg, *mode, *estimator).map(|_| true),
        Command::Density { r, r_min, r_max, points } => density(cfg, r, *r_min, *r_max, *points).map(|_| true),
        Command::G1 { z, points } => g1_table(cfg, z, *points).map(|_| true),
        Command::Clonal { n_max, mode, statistic } => clonal(cfg, *n_max, *mode, *statistic).map(|_| true),
        Command::Verify { suite } => {
            let checks = run_suite(*suite, cfg)?;
            let mut text = String::new();
            for c in &checks {
                text.push_str(&c.line());
                text.push('\n');
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            text.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
            if cfg.out.is_some() {
                emit(cfg.out.as_deref(), text.as_bytes())?;
            }
            print!("{text}");
            Ok(failed == 0)
        }
    }
}

fn header<'a>(command: &'a str, cfg: &RunConfig, reps: Option<u64>, extra: &[(&str, String)]) -> Header<'a> {
    let mut echo = cfg.echo(reps);
    echo.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    Header { command, echo, notes: Vec::new() }
}

#[derive(Serialize)]
struct ReplayRecord {
    index: u64,
    newick: String,
    #[serde(flatten)]
    genealogy: SampledGenealogy,
}

fn sample(cfg: &RunConfig, root: RootArg) -> Result<(), CliError> {
    let dir = cfg.out.as_ref().ok_or_else(|| CliError::Usage("sample writes a directory; pass --out DIR".into()))?;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    let reps = cfg.reps_or(1);
    let mode = match root {
        RootArg::Sample => RootMode::SampleMrca,
        RootArg::Population => RootMode::PopulationMrca,
    };
    let records = map_replicates(cfg.seed, reps, cfg.exec, |i, rng| {
        let g = sample_genealogy(&cfg.params, cfg.n, rng, cfg.z0)?;
        let tree = build_tree(&g.config, &g.zetas, mode)?;
        Ok(ReplayRecord { index: i, newick: newick_export(&tree), genealogy: g })
    })
    .into_iter()
    .collect::<cbsfs::Result<Vec<_>>>()?;

    let root_name = match root {
        RootArg::Sample => "sample",
        RootArg::Population => "population",
    };
    let h = header("sample", cfg, Some(reps), &[("root", root_name.into())]);
    let echo: Vec<String> = h.echo.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut trees = format!("[cbsfs {} sample {}]\n", env!("CARGO_PKG_VERSION"), echo.join(" "));
    for r in &records {
        trees.push_str(&r.newick);
        trees.push('\n');
    }
    emit(Some(&dir.join("trees.nwk")), trees.as_bytes())?;

    let doc = document(&h, "records", serde_json::to_value(&records)?);
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    emit(Some(&dir.join("replay.json")), &bytes)
}

fn sfs(cfg: &RunConfig, mode: SfsMode, estimator: Estimator) -> Result<(), CliError> {
    let p = &cfg.params;
    if cfg.n < 2 {
        return Err(CliError::Usage("the spectrum needs n >= 2".into()));
    }
    let expected = match cfg.z0 {
        Some(z0) => expected_sfs(p, cfg.n, z0, cfg.exec)?,
        None => expected_sfs_averaged(p, cfg.n, cfg.exec)?,
    };
    let (table, reps, extra): (SfsTable, Option<u64>, Vec<(&str, String)>) = match mode {
        SfsMode::Expected => (expected, None, vec![("mode", "expected".into())]),
        SfsMode::Simulate => {
            let reps = cfg.reps_or(10_000);
            let sim_mode = match estimator {
                Estimator::Lengths => SimulationMode::ExpectedLengths,
                Estimator::Counts => SimulationMode::PoissonCounts,
            };
            let mut sim = simulate_sfs(p, cfg.n, cfg.z0, reps, cfg.seed, sim_mode, LengthRoute::ClosedForm, cfg.exec)?;
            attach_expected(&mut sim, &expected);
            let est = match estimator {
                Estimator::Lengths => "lengths",
                Estimator::Counts => "counts",
            };
            (sim, Some(reps), vec![("mode", "simulate".into()), ("estimator", est.into())])
        }
    };
    let mut t = Table::new(["k", "expected_L", "expected_xi", "mc_mean", "mc_se"]);
    for e in &table.entries {
        t.push(vec![Some(e.k as f64), Some(e.expected_l), Some(e.expected_xi), e.mc_mean, e.mc_se]);
    }
    write_table(cfg, &header("sfs", cfg, reps, &extra), &t)
}

fn density(cfg: &RunConfig, explicit: &[f64], r_min: f64, r_max: f64, points: usize) -> Result<(), CliError> {
    let grid: Vec<f64> = if !explicit.is_empty() {
        explicit.to_vec()
    } else {
        if !(r_min > 0.0 && r_max > r_min && points >= 2) {
            return Err(CliError::Usage("need 0 < r-min < r-max and points >= 2".into()));
        }
        let (a, b) = (r_min.ln(), r_max.ln());
        (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
    };
    if let Some(bad) = grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(CliError::Usage(format!("density grid values must be positive, got {bad}")));
    }
    let curve = density_curve(&cfg.params, &grid)?;
    let mut t = Table::new(["r", "f"]);
    for (r, f) in curve.points {
        t.push(vec![Some(r), Some(f)]);
    }
    write_table(cfg, &header("density", cfg, None, &[]), &t)
}

fn g1_table(cfg: &RunConfig, zs: &[f64], points: usize) -> Result<(), CliError> {
    if points < 2 || zs.is_empty() {
        return Err(CliError::Usage("g1 needs at least one z and points >= 2".into()));
    }
    let mut cols = vec!["u".to_string()];
    cols.extend(zs.iter().map(|z| format!("g1@z={z}")));
    let mut t = Table::new(cols);
    for i in 0..points {
        let u = i as f64 / (points - 1) as f64;
        let mut row = vec![Some(u)];
        for &z in zs {
            row.push(Some(g1(z, u).map_err(|e| CliError::Usage(e.to_string()))?));
        }
        t.push(row);
    }
    let list: Vec<String> = zs.iter().map(|z| z.to_string()).collect();
    let h = Header { command: "g1", echo: vec![("z".into(), list.join(","))], notes: Vec::new() };
    write_table(cfg, &h, &t)
}

fn clonal(cfg: &RunConfig, n_max: u32, mode: ClonalMode, statistic: StatisticArg) -> Result<(), CliError> {
    if n_max == 0 {
        return Err(CliError::Usage("n-max must be at least 1".into()));
    }
    let p = &cfg.params;
    let stat = match statistic {
        StatisticArg::ZpowR => ClonalStatistic::ZPowR,
        StatisticArg::Zpow => ClonalStatistic::ZPow,
    };
    let reps = match mode {
        ClonalMode::Analytic => None,
        ClonalMode::Simulate => Some(cfg.reps_or(10_000).max(100)),
    };
    let mut t = Table::new(["n", "analytic", "mc_mean", "mc_se"]);
    for n in 1..=n_max {
        let row = match reps {
            Some(r) => {
                let m = mc_clonal(p, n, r, cfg.seed, stat, cfg.exec)?;
                vec![Some(f64::from(n)), Some(m.analytic), m.mc_mean, m.mc_se]
            }
            None => {
                let a = match stat {
                    ClonalStatistic::ZPowR => e_zcl_pow_r(p, n)?,
                    ClonalStatistic::ZPow => e_zcl_pow(p, n)?,
                };
                vec![Some(f64::from(n)), Some(a), None, None]
            }
        };
        t.push(row);
    }
    let s = clonal_summary(p);
    let stat_name = match statistic {
        StatisticArg::ZpowR => "zpow-r",
        StatisticArg::Zpow => "zpow",
    };
    let mode_name = match mode {
        ClonalMode::Analytic => "analytic",
        ClonalMode::Simulate => "simulate",
    };
    let mut h = header("clonal", cfg, reps, &[("mode", mode_name.into()), ("statistic", stat_name.into())]);
    h.notes = vec![
        ("alpha".into(), format!("{:?}", s.alpha)),
        ("E_R".into(), format!("{:?}", s.e_r)),
        ("E_Zcl".into(), format!("{:?}", s.e_zcl)),
        ("Cov_R_Z0".into(), format!("{:?}", s.cov_r_z0)),
        ("Corr_note".into(), s.corr_note.clone()),
    ];
    write_table(cfg, &h, &t)
}
