//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Parameters are the desk-scale calibration recorded in the decisions ledger;
//! every criterion runs its check exactly as the library defines it.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ymcal_core::estimates::suite::{
    check_assembly_identities, check_deturck_equivalence, check_energy_conservation,
    check_flow_identities, check_gauge_ode, check_gauss_constraint, check_magnetic_monotonicity,
    check_pointwise_refinement, check_substitution,
};
use ymcal_core::estimates::{
    check_duhamel_comparison, check_improved_fs0, check_smoothing_f, check_smoothing_fs,
    fs0_amplitude_scaling, EstimateReport, Sigma,
};
use ymcal_core::heatflow::{run_dymhf, run_ymhf, FlowConfig, FlowGauge, FlowTrajectory, Schedule};
use ymcal_core::hyperbolic::{
    build_caloric_temporal, evolve_temporal, generate, Assembly, CauchyData, DataSpec, Generator,
};
use ymcal_core::lattice::Grid;
use ymcal_core::{Error, Result};

const LENGTH: f64 = 8.0;

type Outcome = std::result::Result<(bool, String), String>;

fn data(n: usize, spec: DataSpec) -> Result<CauchyData> {
    generate(Grid::new(n, LENGTH)?, &spec)
}

fn band(amplitude: f64) -> DataSpec {
    DataSpec {
        generator: Generator::RandomBandlimited,
        amplitude,
        ..DataSpec::default()
    }
}

fn d(r: &EstimateReport, key: &str) -> f64 {
    r.details.get(key).copied().unwrap_or(f64::NAN)
}

fn e<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|x| x.to_string())
}

fn energy_conservation() -> Outcome {
    let data = e(data(32, band(0.1)))?;
    let r = e(check_energy_conservation(&data, 1.0, 0.25))?;
    // super-CFL step: the evolution must refuse to run
    let control = check_energy_conservation(&data, 1.0, 0.6);
    let control_fails =
        matches!(control, Err(Error::CflViolation(_))) || control.as_ref().is_ok_and(|c| !c.pass);
    Ok((
        r.pass && control_fails,
        format!(
            "drift {:.2e} (≤ 1e-4), halving ratio {:.3} (4 ± 15%), super-CFL control {}",
            d(&r, "drift"),
            d(&r, "halving_ratio"),
            if control_fails {
                "rejected"
            } else {
                "ACCEPTED"
            }
        ),
    ))
}

fn gauss_constraint() -> Outcome {
    let (c, f) = (e(data(16, band(0.1)))?, e(data(32, band(0.1)))?);
    let r = e(check_gauss_constraint(&c, &f, 1.0, 0.25))?;
    let loose = DataSpec {
        constrained: false,
        ..band(0.1)
    };
    let (uc, uf) = (e(data(16, loose))?, e(data(32, loose))?);
    let control = e(check_gauss_constraint(&uc, &uf, 1.0, 0.25))?;
    let rel = d(&control, "relative_data_residual");
    let order_one = rel > 0.1;
    Ok((
        r.pass && !control.pass && order_one,
        format!(
            "growth {:.2e} -> {:.2e}, order {:.3}, C = {:.3}; unconstrained control residual {:.2} ({})",
            d(&r, "growth_coarse"),
            d(&r, "growth_fine"),
            r.refinement_order.unwrap_or(f64::NAN),
            r.measured_constant,
            rel,
            if control.pass { "PASSED" } else { "fails" }
        ),
    ))
}

fn magnetic_monotonicity() -> Outcome {
    let cfg = FlowConfig::default();
    let mut flows = Vec::new();
    for k in 0..50u64 {
        let amplitude = [0.05, 0.1, 0.2, 0.4, 0.8][(k % 5) as usize];
        let spec = match k % 4 {
            0 | 1 => DataSpec {
                modes: 1 + (k as usize % 2),
                ..band(amplitude)
            },
            2 => DataSpec {
                generator: Generator::Bump,
                width: 1.0 / 20.0,
                ..band(amplitude)
            },
            _ => DataSpec {
                generator: Generator::AbelianWave,
                modes: 1 + (k as usize % 3),
                ..band(amplitude)
            },
        };
        let d = e(data(
            16,
            DataSpec {
                seed: k + 1,
                ..spec
            },
        ))?;
        flows.push(e(run_ymhf(&d.connection(), &cfg, FlowGauge::Caloric))?);
    }
    let r = check_magnetic_monotonicity(&flows);
    Ok((
        r.pass,
        format!(
            "{} flows, {} increases, {} stalls",
            flows.len(),
            d(&r, "increases"),
            d(&r, "stalls")
        ),
    ))
}

fn deturck_equivalence() -> Outcome {
    let data = e(data(16, band(1e-4)))?;
    let r = e(check_deturck_equivalence(
        &data.connection(),
        &FlowConfig::default(),
    ))?;
    Ok((
        r.pass,
        format!(
            "agreement {:.2e} (≤ 1e-5), residual {:.2e} -> {:.2e}, order {:.2} (≥ 1)",
            d(&r, "agreement"),
            d(&r, "residual"),
            d(&r, "residual_half_step"),
            r.refinement_order.unwrap_or(f64::NAN)
        ),
    ))
}

fn smoothing() -> Outcome {
    let cfg = FlowConfig::default();
    let flows = [0.05, 0.1, 0.2]
        .iter()
        .map(|&a| {
            e(data(16, band(a)))
                .and_then(|d| e(run_ymhf(&d.connection(), &cfg, FlowGauge::Caloric)))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let f = e(check_smoothing_f(&flows, 3))?;
    let fs = e(check_smoothing_fs(&flows, 3))?;
    let spread = |r: &EstimateReport| {
        r.details
            .iter()
            .filter(|(k, _)| k.ends_with("_spread"))
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    };
    Ok((
        f.pass && fs.pass,
        format!(
            "worst spread of ratio to √E: F {:.3}, F_s {:.3} (≤ 0.20)",
            spread(&f),
            spread(&fs)
        ),
    ))
}

fn dynamic_sweep(constrained: bool) -> std::result::Result<Vec<(f64, FlowTrajectory)>, String> {
    let cfg = FlowConfig::default();
    [0.4, 0.2, 0.1]
        .iter()
        .map(|&a| {
            let d = e(data(
                16,
                DataSpec {
                    constrained,
                    ..band(a)
                },
            ))?;
            Ok((a, e(run_dymhf(&d.connection(), &d.e, &cfg))?))
        })
        .collect()
}

fn improved_fs0() -> Outcome {
    let runs = dynamic_sweep(true)?;
    let sweep: Vec<(f64, &FlowTrajectory)> = runs.iter().map(|(a, t)| (*a, t)).collect();
    let r = e(check_improved_fs0(&sweep, 3))?;
    let loose = dynamic_sweep(false)?;
    let loose: Vec<(f64, &FlowTrajectory)> = loose.iter().map(|(a, t)| (*a, t)).collect();
    let refused = matches!(
        check_improved_fs0(&loose, 3),
        Err(Error::ConstraintViolated(_))
    );
    let control = e(fs0_amplitude_scaling(&loose, 3))?;
    Ok((
        r.pass && refused && !control.pass,
        format!(
            "halving ratios {:.3}, {:.3} (in [3.4, 4.6]); unconstrained control: {}, ratios {:.2}, {:.2}",
            d(&r, "step0_sup_ratio"),
            d(&r, "step1_sup_ratio"),
            if refused { "refused" } else { "ACCEPTED" },
            d(&control, "step0_sup_ratio"),
            d(&control, "step1_sup_ratio")
        ),
    ))
}

fn pointwise_spec(seed: u64) -> DataSpec {
    let amplitude = [0.1, 0.2, 0.3, 0.5][(seed % 4) as usize];
    DataSpec {
        seed,
        modes: 1 + (seed as usize % 2),
        ..band(amplitude)
    }
}

fn pointwise_runs(
    n: usize,
    seeds: impl Iterator<Item = u64>,
) -> std::result::Result<Vec<EstimateReport>, String> {
    let cfg = FlowConfig {
        s_max: 0.25,
        dense: true,
        ..FlowConfig::default()
    };
    let mut out = Vec::new();
    for seed in seeds {
        let d = e(data(n, pointwise_spec(seed)))?;
        let traj = e(run_ymhf(&d.connection(), &cfg, FlowGauge::Caloric))?;
        out.push(e(check_duhamel_comparison(&traj, Sigma::F))?);
        out.push(e(check_duhamel_comparison(&traj, Sigma::DxF))?);
    }
    Ok(out)
}

fn pointwise() -> Outcome {
    let runs = pointwise_runs(16, 1..=20)?;
    let coarse: Vec<EstimateReport> = runs.iter().take(4).cloned().collect();
    let fine = pointwise_runs(32, 1..=2)?;
    let r = check_pointwise_refinement(&coarse, &fine, 2.0);
    let all_pass = runs.iter().all(|r| r.pass);
    let worst = |key: &str| runs.iter().map(|r| d(r, key)).fold(0.0, f64::max);
    Ok((
        all_pass && r.pass,
        format!(
            "20 runs × (F, DxF): worst violation kato {:.1e}, majorant {:.1e}, max principle {:.1e}; refinement order {}",
            worst("kato"),
            worst("majorant"),
            worst("max_principle"),
            r.refinement_order.map_or("n/a (violations at the floor)".to_string(), |o| format!("{o:.2}"))
        ),
    ))
}

fn assembly(n: usize) -> Result<Assembly> {
    let d = data(n, band(0.2))?;
    let slab = evolve_temporal(&d, 0.25, 0.25)?;
    build_caloric_temporal(
        &slab,
        &FlowConfig {
            s_max: 0.25,
            schedule: Schedule {
                per_octave: 2,
                octaves: 6,
            },
            ..FlowConfig::default()
        },
    )
}

fn orders(r: &EstimateReport) -> String {
    let mut s: Vec<String> = r
        .details
        .iter()
        .filter(|(k, _)| k.ends_with("_order"))
        .map(|(k, v)| format!("{} {v:.3}", k.trim_end_matches("_order")))
        .collect();
    s.sort();
    s.join(", ")
}

fn identities(pair: &(Assembly, Assembly)) -> Outcome {
    let short = FlowConfig {
        s_max: 1.0 / 64.0,
        schedule: Schedule {
            per_octave: 1,
            octaves: 2,
        },
        ..FlowConfig::default()
    };
    let flows = [32, 64]
        .iter()
        .map(|&n| {
            e(data(n, band(0.2)))
                .and_then(|d| e(run_ymhf(&d.connection(), &short, FlowGauge::Caloric)))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let flow = check_flow_identities(&flows[0], &flows[1]);
    let asm = e(check_assembly_identities(&pair.0, &pair.1))?;
    let (c, f) = (e(data(32, band(0.2)))?, e(data(64, band(0.2)))?);
    let sub = e(check_substitution(
        (&c.connection(), &c.e),
        (&f.connection(), &f.e),
    ))?;
    Ok((
        flow.pass && asm.pass && sub.pass,
        format!(
            "{}; {}; substitution min order {:.3}, reconstruction {:.1e} (≤ 1e-10)",
            orders(&flow),
            orders(&asm),
            sub.refinement_order.unwrap_or(f64::NAN),
            d(&sub, "reconstruction")
        ),
    ))
}

fn gauge_ode(pair: &(Assembly, Assembly)) -> Outcome {
    let r = e(check_gauge_ode(&pair.0, &pair.1))?;
    Ok((
        r.pass,
        format!(
            "‖A̲_0‖ {:.2e} -> {:.2e}, order {:.3}, C = {:.2e}; envelope ratio {:.3}, derivative ratios {:.3}, {:.3}",
            d(&r, "a0_after_coarse"),
            d(&r, "a0_after_fine"),
            r.refinement_order.unwrap_or(f64::NAN),
            r.measured_constant,
            d(&r, "envelope_ratio"),
            d(&r, "first_derivative_ratio"),
            d(&r, "second_derivative_ratio")
        ),
    ))
}

const DETERMINISM_CONFIG: &str = r#"
checks = ["energy-conservation", "gauss-constraint", "magnetic-monotonicity", "smoothing-fs", "improved-fs0", "energy-integral", "ctrl-by-energy"]

[grid]
n = 16

[data]
generator = "random-bandlimited"
amplitude = 0.2
seed = 7
"#;

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable output") {
            let p = entry.expect("entry").path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(
                    p.strip_prefix(root).expect("inside").display().to_string(),
                    std::fs::read(&p).expect("readable"),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|x| x.to_string())?;
    let cfg = dir.path().join("det.toml");
    std::fs::write(&cfg, DETERMINISM_CONFIG).map_err(|x| x.to_string())?;
    let mut trees = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "8")] {
        let out = dir.path().join(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_ymcal"))
            .env("YMCAL_THREADS", threads)
            .arg("--out")
            .arg(&out)
            .arg("run")
            .arg(&cfg)
            .output()
            .map_err(|x| x.to_string())?;
        if status.status.code() != Some(0) {
            return Ok((
                false,
                format!(
                    "run {tag} exited with {:?}: {}",
                    status.status.code(),
                    String::from_utf8_lossy(&status.stderr)
                ),
            ));
        }
        trees.push(tree(&out));
    }
    let files = trees[0].len();
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    let differing = |a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>| {
        a.keys()
            .chain(b.keys())
            .filter(|k| a.get(*k) != b.get(*k))
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
    };
    let (rerun, threads) = (
        differing(&trees[0], &trees[1]),
        differing(&trees[0], &trees[2]),
    );
    Ok((
        rerun.is_empty() && threads.is_empty(),
        format!("{files} files, {bytes} bytes; differing across reruns: {:?}, across 1 vs 8 workers: {:?}", rerun, threads),
    ))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |k: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let line = match &o {
            Ok((true, msg)) => format!("criterion {k:>2} PASS  {name}: {msg}"),
            Ok((false, msg)) => format!("criterion {k:>2} FAIL  {name}: {msg}"),
            Err(msg) => format!("criterion {k:>2} FAIL  {name}: error: {msg}"),
        };
        println!("{line} ({:.1}s)", t.elapsed().as_secs_f64());
        results.push((k, name, o, t.elapsed().as_secs_f64()));
    };
    run(1, "energy conservation", &energy_conservation);
    run(2, "Gauss constraint", &gauss_constraint);
    run(3, "magnetic energy monotonicity", &magnetic_monotonicity);
    run(4, "DeTurck and caloric routes", &deturck_equivalence);
    run(5, "smoothing estimates", &smoothing);
    run(6, "improved F_s0 bound", &improved_fs0);
    run(7, "pointwise comparison suite", &pointwise);
    let pair = match (assembly(16), assembly(32)) {
        (Ok(c), Ok(f)) => Ok((c, f)),
        (Err(x), _) | (_, Err(x)) => Err(x.to_string()),
    };
    run(8, "identity residuals", &|| {
        identities(pair.as_ref().map_err(Clone::clone)?)
    });
    run(9, "gauge ODE suite", &|| {
        gauge_ode(pair.as_ref().map_err(Clone::clone)?)
    });
    run(10, "determinism", &determinism);
    let failed: Vec<usize> = results
        .iter()
        .filter(|r| !matches!(r.2, Ok((true, _))))
        .map(|r| r.0)
        .collect();
    println!(
        "acceptance: {}/{} criteria pass ({:.0}s)",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
