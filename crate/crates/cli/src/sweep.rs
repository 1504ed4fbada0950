//! Cross product of amplitudes and resolutions, with refinement orders and
//! amplitude scaling exponents computed across points.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use ymcal_core::estimates::{observed_order, EstimateReport};

use crate::config::ExperimentConfig;
use crate::output::{self, csv_field, num};
use crate::pipeline::{run_point, PointOutcome};
use crate::{CliError, Log};

pub struct SweepPoint {
    pub amplitude: f64,
    pub n: usize,
    pub dir: String,
    pub outcome: PointOutcome,
}

pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub refinement: Vec<Refinement>,
    pub scaling: Vec<Scaling>,
}

impl SweepOutcome {
    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.outcome.all_pass())
    }
}

/// Order of one report's measured constant between two resolutions.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub name: String,
    pub amplitude: f64,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub order: f64,
}

/// Least-squares slope of `log q` against `log amplitude` at one resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    pub name: String,
    pub n: usize,
    pub quantity: &'static str,
    pub exponent: f64,
    pub points: usize,
}

/// Slope of the least-squares line through `(x, y)`; `None` without two distinct `x`.
pub fn log_log_slope(pairs: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn point_dir(k: usize, amplitude: f64, n: usize) -> String {
    format!("points/{k:03}_a{}_n{n}", num(amplitude))
}

pub fn run_sweep(cfg: &ExperimentConfig, out: &Path, log: &Log) -> Result<SweepOutcome, CliError> {
    let amps = if cfg.sweep.amplitudes.is_empty() {
        vec![cfg.data.amplitude]
    } else {
        cfg.sweep.amplitudes.clone()
    };
    let mut ns = if cfg.sweep.resolutions.is_empty() {
        vec![cfg.grid.n]
    } else {
        cfg.sweep.resolutions.clone()
    };
    ns.sort_unstable();
    ns.dedup();
    let grid: Vec<(f64, usize)> = amps
        .iter()
        .flat_map(|&a| ns.iter().map(move |&n| (a, n)))
        .collect();
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(k, &(amplitude, n))| {
            let dir = point_dir(k, amplitude, n);
            log.note(format!("sweep point {k}: amplitude {amplitude}, n = {n}"));
            let outcome = run_point(&cfg.at_point(amplitude, n), &out.join(&dir), log)?;
            Ok(SweepPoint {
                amplitude,
                n,
                dir,
                outcome,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut outcome = SweepOutcome {
        refinement: refinements(&points),
        scaling: scalings(&points),
        points,
    };
    fill_orders(&mut outcome);
    write_sweep(cfg, out, &outcome)?;
    Ok(outcome)
}

fn by_name(reports: &[EstimateReport]) -> BTreeMap<&str, &EstimateReport> {
    reports.iter().map(|r| (r.name.as_str(), r)).collect()
}

fn refinements(points: &[SweepPoint]) -> Vec<Refinement> {
    let mut out = Vec::new();
    for w in points.windows(2) {
        let (c, f) = (&w[0], &w[1]);
        if c.amplitude != f.amplitude {
            continue;
        }
        let fine = by_name(&f.outcome.reports);
        for r in &c.outcome.reports {
            let Some(g) = fine.get(r.name.as_str()) else {
                continue;
            };
            if r.measured_constant > 0.0 && g.measured_constant > 0.0 {
                out.push(Refinement {
                    name: r.name.clone(),
                    amplitude: c.amplitude,
                    n_coarse: c.n,
                    n_fine: f.n,
                    order: observed_order(
                        r.measured_constant,
                        g.measured_constant,
                        f.n as f64 / c.n as f64,
                    ),
                });
            }
        }
    }
    out
}

fn scalings(points: &[SweepPoint]) -> Vec<Scaling> {
    let mut groups: BTreeMap<(usize, String), Vec<(f64, &EstimateReport)>> = BTreeMap::new();
    for p in points {
        for r in &p.outcome.reports {
            groups
                .entry((p.n, r.name.clone()))
                .or_default()
                .push((p.amplitude, r));
        }
    }
    let mut out = Vec::new();
    for ((n, name), runs) in groups {
        let constant: Vec<(f64, f64)> = runs
            .iter()
            .map(|(a, r)| (*a, r.measured_constant))
            .collect();
        if let Some(e) = log_log_slope(&constant) {
            out.push(Scaling {
                name: name.clone(),
                n,
                quantity: "measured_constant",
                exponent: e,
                points: runs.len(),
            });
        }
        let scaled: Vec<(f64, f64)> = runs
            .iter()
            .filter_map(|(a, r)| r.details.get("scaling_quantity").map(|q| (*a, *q)))
            .collect();
        if let Some(e) = log_log_slope(&scaled) {
            out.push(Scaling {
                name,
                n,
                quantity: "scaling_quantity",
                exponent: e,
                points: scaled.len(),
            });
        }
    }
    out
}

/// Reports without an order of their own take the one measured across the sweep.
fn fill_orders(outcome: &mut SweepOutcome) {
    for p in outcome.points.iter_mut() {
        for r in p
            .outcome
            .reports
            .iter_mut()
            .filter(|r| r.refinement_order.is_none())
        {
            r.refinement_order = outcome
                .refinement
                .iter()
                .find(|x| x.name == r.name && x.amplitude == p.amplitude && x.n_coarse == p.n)
                .map(|x| x.order);
        }
    }
}

fn write_sweep(cfg: &ExperimentConfig, out: &Path, o: &SweepOutcome) -> Result<(), CliError> {
    let mut csv = format!("point,amplitude,n,{}\n", output::REPORT_HEADER);
    for (k, p) in o.points.iter().enumerate() {
        for r in &p.outcome.reports {
            let _ = writeln!(
                csv,
                "{k},{},{},{}",
                num(p.amplitude),
                p.n,
                output::report_line(r)
            );
        }
    }
    output::write_text(out, "reports.csv", &csv)?;
    let mut rcsv = String::from("name,amplitude,n_coarse,n_fine,order\n");
    for r in &o.refinement {
        let _ = writeln!(
            rcsv,
            "{},{},{},{},{}",
            csv_field(&r.name),
            num(r.amplitude),
            r.n_coarse,
            r.n_fine,
            num(r.order)
        );
    }
    output::write_text(out, "refinement.csv", &rcsv)?;
    let mut scsv = String::from("name,n,quantity,exponent,points\n");
    for s in &o.scaling {
        let _ = writeln!(
            scsv,
            "{},{},{},{},{}",
            csv_field(&s.name),
            s.n,
            s.quantity,
            num(s.exponent),
            s.points
        );
    }
    output::write_text(out, "scaling.csv", &scsv)?;
    let points: Vec<_> = o
        .points
        .iter()
        .map(|p| serde_json::json!({ "amplitude": p.amplitude, "n": p.n, "dir": p.dir, "stages": p.outcome.stages, "reports": p.outcome.reports }))
        .collect();
    let refinement: Vec<_> = o
        .refinement
        .iter()
        .map(|r| serde_json::json!({ "name": r.name, "amplitude": r.amplitude, "n_coarse": r.n_coarse, "n_fine": r.n_fine, "order": r.order }))
        .collect();
    let scaling: Vec<_> = o
        .scaling
        .iter()
        .map(|s| serde_json::json!({ "name": s.name, "n": s.n, "quantity": s.quantity, "exponent": s.exponent, "points": s.points }))
        .collect();
    output::write_json(
        out,
        "sweep.json",
        &serde_json::json!({ "config": cfg, "points": points, "refinement": refinement, "scaling": scaling }),
    )?;
    let manifest = serde_json::json!({
        "tool": "ymcal",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "points": o.points.iter().map(|p| p.dir.clone()).collect::<Vec<_>>(),
        "files": ["reports.csv", "refinement.csv", "scaling.csv", "sweep.json"],
        "all_pass": o.all_pass(),
    });
    output::write_json(out, "manifest.json", &manifest)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pairs: Vec<(f64, f64)> = [0.1, 0.2, 0.4].iter().map(|&a| (a, 3.0 * a * a)).collect();
        assert!((log_log_slope(&pairs).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_needs_two_distinct_abscissae() {
        assert_eq!(log_log_slope(&[(0.1, 1.0)]), None);
        assert_eq!(log_log_slope(&[(0.1, 1.0), (0.1, 2.0)]), None);
        assert_eq!(log_log_slope(&[(0.0, 1.0), (0.1, 2.0)]), None);
    }
}
