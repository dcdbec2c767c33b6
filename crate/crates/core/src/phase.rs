//! Batch runs just above the Erdős–Rényi curve: grid scans, cross-model
//! comparisons and plot generation.
//!
//! Scans process each density on its own thread (paths are sequential in
//! `τ`) and always emit rows in grid order, so the CSV depends only on the
//! configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bipodal::{self, log_schedule, BipodalSolution};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::fmt17;
use crate::graphon::MultipodalGraphon;
use crate::optimizer::{self, ConstrainedProblem, OptimizerConfig};
use crate::star::classify;

/// Side length of rendered graphon rasters.
pub const RASTER_SIZE: usize = 512;
/// Largest parameter deviation a cross-check accepts.
pub const CROSS_CHECK_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub model: DensityModel,
    pub e_min: f64,
    pub e_max: f64,
    pub e_count: usize,
    /// Extra densities added to the grid as they are.
    pub e_extra: Vec<f64>,
    pub dtau_min: f64,
    pub dtau_max: f64,
    pub dtau_count: usize,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    /// Re-solve converged rows with the multipodal optimizer at this podality.
    pub cross_check: Option<usize>,
    pub optimizer: OptimizerConfig,
}

impl ScanConfig {
    pub fn new(model: DensityModel) -> Self {
        Self {
            model,
            e_min: 0.1,
            e_max: 0.9,
            e_count: 9,
            e_extra: Vec::new(),
            dtau_min: 1e-6,
            dtau_max: 1e-3,
            dtau_count: 4,
            threads: 0,
            cross_check: None,
            optimizer: OptimizerConfig {
                restarts: 4,
                bipodal_seed: false,
                ..OptimizerConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("e_min", self.e_min), ("e_max", self.e_max)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain {
                    what,
                    value: v,
                    domain: "(0, 1)",
                });
            }
        }
        if self.e_max < self.e_min {
            return Err(Error::Domain {
                what: "e_max",
                value: self.e_max,
                domain: ">= e_min",
            });
        }
        if let Some(&bad) = self.e_extra.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Domain {
                what: "e",
                value: bad,
                domain: "(0, 1)",
            });
        }
        if !(self.dtau_min > 0.0 && self.dtau_max >= self.dtau_min) {
            return Err(Error::Domain {
                what: "dtau",
                value: self.dtau_min,
                domain: "0 < dtau_min <= dtau_max",
            });
        }
        if self.e_count == 0 || self.dtau_count == 0 {
            return Err(Error::Domain {
                what: "grid count",
                value: 0.0,
                domain: ">= 1",
            });
        }
        Ok(())
    }

    /// Sorted, deduplicated density grid.
    pub fn e_grid(&self) -> Vec<f64> {
        let mut grid: Vec<f64> = if self.e_count == 1 {
            vec![self.e_min]
        } else {
            (0..self.e_count)
                .map(|i| self.e_min + (self.e_max - self.e_min) * i as f64 / (self.e_count - 1) as f64)
                .collect()
        };
        grid.extend(&self.e_extra);
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        grid
    }

    pub fn dtau_grid(&self) -> Vec<f64> {
        log_schedule(self.dtau_min, self.dtau_max, self.dtau_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// The density is in the bad set; nothing was solved.
    Flagged,
    Failed,
    /// Solved, but the multipodal optimizer disagrees.
    Mismatch,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Flagged => "flagged",
            Self::Failed => "failed",
            Self::Mismatch => "mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub podality: usize,
    /// Largest of `|Δc|, |Δp11|, |Δp12|, |Δp22|`.
    pub max_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub e: f64,
    pub dtau: f64,
    pub tau: f64,
    pub status: RowStatus,
    pub solution: Option<BipodalSolution>,
    pub cross: Option<CrossCheck>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
}

impl ScanOutcome {
    pub fn count(&self, status: RowStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    pub fn fully_successful(&self) -> bool {
        self.count(RowStatus::Failed) == 0 && self.count(RowStatus::Mismatch) == 0
    }

    /// Per density: the largest `Δτ` that converged, if any.
    pub fn windows(&self) -> BTreeMap<u64, (f64, Option<f64>)> {
        let mut out: BTreeMap<u64, (f64, Option<f64>)> = BTreeMap::new();
        for r in &self.rows {
            let entry = out.entry(r.e.to_bits()).or_insert((r.e, None));
            if r.solution.is_some() {
                entry.1 = Some(entry.1.map_or(r.dtau, |d: f64| d.max(r.dtau)));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows {}", self.rows.len());
        for status in [RowStatus::Ok, RowStatus::Flagged, RowStatus::Failed, RowStatus::Mismatch] {
            let _ = writeln!(out, "{} {}", status.as_str(), self.count(status));
        }
        let _ = writeln!(out, "# e, largest converged dtau");
        for (e, window) in self.windows().into_values() {
            match window {
                Some(d) => {
                    let _ = writeln!(out, "{},{}", fmt17(e), fmt17(d));
                }
                None => {
                    let _ = writeln!(out, "{},none", fmt17(e));
                }
            }
        }
        for r in self.rows.iter().filter(|r| matches!(r.status, RowStatus::Failed | RowStatus::Mismatch)) {
            let _ = writeln!(out, "{} e={} dtau={}: {}", r.status.as_str(), r.e, r.dtau, r.note);
        }
        out
    }
}

pub const SCAN_COLUMNS: [&str; 17] = [
    "e",
    "dtau",
    "tau",
    "status",
    "c",
    "p11",
    "p12",
    "p22",
    "alpha",
    "beta",
    "s",
    "f1_identity",
    "residual",
    "newton_iters",
    "cross_podality",
    "cross_delta",
    "note",
];

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt17)
}

pub fn scan_csv(outcome: &ScanOutcome) -> String {
    let mut out = SCAN_COLUMNS.join(",");
    out.push('\n');
    for r in &outcome.rows {
        let s = r.solution.as_ref();
        let fields = [
            fmt17(r.e),
            fmt17(r.dtau),
            fmt17(r.tau),
            r.status.as_str().to_string(),
            num(s.map(|s| s.c)),
            num(s.map(|s| s.p11)),
            num(s.map(|s| s.p12)),
            num(s.map(|s| s.p22)),
            num(s.map(|s| s.alpha)),
            num(s.map(|s| s.beta)),
            num(s.map(|s| s.s)),
            num(s.map(|s| s.f1_identity())),
            num(s.map(|s| s.residual)),
            s.map_or_else(|| "0".to_string(), |s| s.newton_iters.to_string()),
            r.cross.as_ref().map_or_else(|| "0".to_string(), |c| c.podality.to_string()),
            num(r.cross.as_ref().map(|c| c.max_delta)),
            r.note.replace([',', '\n'], ";"),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_string())
}

fn parameter_delta(a: &MultipodalGraphon, b: &MultipodalGraphon) -> f64 {
    let (a, b) = (a.canonical(), b.canonical());
    if a.podality() != 2 || b.podality() != 2 {
        return f64::INFINITY;
    }
    let pa = [a.widths()[0], a.p(0, 0), a.p(0, 1), a.p(1, 1)];
    let pb = [b.widths()[0], b.p(0, 0), b.p(0, 1), b.p(1, 1)];
    pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn scan_density(cfg: &ScanConfig, e: f64, dtaus: &[f64]) -> Vec<ScanRow> {
    let er = cfg.model.er_value(e);
    let row = |dtau: f64, status, solution, note: String| ScanRow {
        e,
        dtau,
        tau: er + dtau,
        status,
        solution,
        cross: None,
        note,
    };
    let gate = cfg.model.reduced_weights(e).and_then(|w| classify(w, e));
    match gate {
        Ok(r) if r.flagged => {
            return dtaus
                .iter()
                .map(|&d| row(d, RowStatus::Flagged, None, "bad density".into()))
                .collect();
        }
        Err(err) => {
            return dtaus
                .iter()
                .map(|&d| row(d, RowStatus::Failed, None, err.to_string()))
                .collect();
        }
        Ok(_) => {}
    }
    let taus: Vec<f64> = dtaus.iter().map(|d| er + d).collect();
    let (points, error) = match bipodal::continue_along(&cfg.model, e, &taus) {
        Ok(path) => (path.points, None),
        Err(err) => (err.partial.points, Some(err.source.to_string())),
    };
    let mut rows: Vec<ScanRow> = dtaus
        .iter()
        .enumerate()
        .map(|(i, &d)| match points.get(i) {
            Some(sol) => row(d, RowStatus::Ok, Some(*sol), String::new()),
            None => row(
                d,
                RowStatus::Failed,
                None,
                error.clone().unwrap_or_else(|| "not reached".into()),
            ),
        })
        .collect();
    if let Some(m) = cfg.cross_check {
        for r in rows.iter_mut().filter(|r| r.status == RowStatus::Ok) {
            let sol = r.solution.expect("ok rows carry a solution");
            let checked = ConstrainedProblem::new(cfg.model.clone(), e, sol.tau, m)
                .and_then(|p| optimizer::maximize(&p, &cfg.optimizer));
            match checked {
                Ok(report) => {
                    let delta = parameter_delta(&report.best, &sol.graphon());
                    if report.effective_podality != 2 || delta > CROSS_CHECK_TOL {
                        r.status = RowStatus::Mismatch;
                        r.note = format!("optimizer podality {}", report.effective_podality);
                    }
                    r.cross = Some(CrossCheck {
                        podality: report.effective_podality,
                        max_delta: delta,
                    });
                }
                Err(err) => {
                    r.status = RowStatus::Mismatch;
                    r.note = format!("optimizer: {err}");
                }
            }
        }
    }
    rows
}

/// Runs the scan. Failures are recorded per row; only an invalid
/// configuration is an error.
pub fn scan(cfg: &ScanConfig) -> Result<ScanOutcome> {
    cfg.validate()?;
    let dtaus = cfg.dtau_grid();
    let run = || -> Vec<ScanRow> {
        cfg.e_grid()
            .par_iter()
            .map(|&e| {
                catch_unwind(AssertUnwindSafe(|| scan_density(cfg, e, &dtaus))).unwrap_or_else(|payload| {
                    let note = format!("panic: {}", panic_message(payload));
                    dtaus
                        .iter()
                        .map(|&d| ScanRow {
                            e,
                            dtau: d,
                            tau: cfg.model.er_value(e) + d,
                            status: RowStatus::Failed,
                            solution: None,
                            cross: None,
                            note: note.clone(),
                        })
                        .collect()
                })
            })
            .flatten()
            .collect()
    };
    let rows = if cfg.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?
            .install(run)
    };
    Ok(ScanOutcome { rows })
}

/// Writes `scan.csv` and `summary.txt` into `dir`.
pub fn write_scan(outcome: &ScanOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("scan.csv"), scan_csv(outcome))?;
    std::fs::write(dir.join("summary.txt"), outcome.summary())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub e: f64,
    pub a: BipodalSolution,
    pub b: BipodalSolution,
    /// `Σ a_k(B) / Σ a_k(A)` of the reduced star weights at `e`; the
    /// leading-order ratio `Δτ_B / Δτ_A` of comparable solutions.
    pub conversion_factor: f64,
    /// `B - A` in `(c, p11, p12, p22)`.
    pub deltas: [f64; 4],
    pub max_delta: f64,
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "e = {}", fmt17(self.e));
        let _ = writeln!(out, "conversion_factor = {}", fmt17(self.conversion_factor));
        let _ = writeln!(out, "model,tau,c,p11,p12,p22,alpha,beta,s");
        for (name, s) in [("A", &self.a), ("B", &self.b)] {
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{},{},{},{}",
                fmt17(s.tau),
                fmt17(s.c),
                fmt17(s.p11),
                fmt17(s.p12),
                fmt17(s.p22),
                fmt17(s.alpha),
                fmt17(s.beta),
                fmt17(s.s)
            );
        }
        let d = self.deltas;
        let _ = writeln!(
            out,
            "delta,,{},{},{},{},,,",
            fmt17(d[0]),
            fmt17(d[1]),
            fmt17(d[2]),
            fmt17(d[3])
        );
        let _ = writeln!(out, "max_delta = {}", fmt17(self.max_delta));
        out
    }
}

fn weight_sum(model: &DensityModel, e: f64) -> Result<f64> {
    Ok(model.reduced_weights(e)?.terms().iter().map(|t| t.1).sum())
}

/// Solves both models at `e` with `τ = τ_ER + Δτ` and compares the parameters.
pub fn compare(a: &DensityModel, b: &DensityModel, e: f64, dtau_a: f64, dtau_b: f64) -> Result<CompareReport> {
    let sa = bipodal::solve_continued(a, e, a.er_value(e) + dtau_a)?;
    let sb = bipodal::solve_continued(b, e, b.er_value(e) + dtau_b)?;
    let deltas = [sb.c - sa.c, sb.p11 - sa.p11, sb.p12 - sa.p12, sb.p22 - sa.p22];
    Ok(CompareReport {
        e,
        a: sa,
        b: sb,
        conversion_factor: weight_sum(b, e)? / weight_sum(a, e)?,
        max_delta: deltas.iter().fold(0.0, |m, d| m.max(d.abs())),
        deltas,
    })
}

/// Binary 16-bit graymap of `g` on a `size × size` grid, sampled at pixel
/// centers; white is `g = 1`.
pub fn render_pgm(g: &MultipodalGraphon, size: usize) -> Vec<u8> {
    let mut out = format!("P5\n{size} {size}\n65535\n").into_bytes();
    out.reserve(2 * size * size);
    for row in 0..size {
        let y = (row as f64 + 0.5) / size as f64;
        for col in 0..size {
            let x = (col as f64 + 0.5) / size as f64;
            let v = (g.value_at(x, y) * 65535.0).round() as u16;
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Pixel values of a graymap written by [`render_pgm`].
pub fn read_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let bad = || Error::Format("not a 16-bit binary graymap".into());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_string());
    }
    pos += 1;
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
    if fields[0] != "P5" || parse(&fields[3])? != 65535 {
        return Err(bad());
    }
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let data = bytes.get(pos..pos + 2 * w * h).ok_or_else(bad)?;
    Ok((w, h, data.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

pub fn write_compare(report: &CompareReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("compare.txt")];
    std::fs::write(&written[0], report.render())?;
    for (name, s) in [("graphon_a.pgm", &report.a), ("graphon_b.pgm", &report.b)] {
        let path = dir.join(name);
        std::fs::write(&path, render_pgm(&s.graphon(), RASTER_SIZE))?;
        written.push(path);
    }
    Ok(written)
}

/// A parsed scan CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Columns [`emit_plots`] needs.
pub const PLOT_COLUMNS: [&str; 9] = ["e", "tau", "dtau", "status", "c", "p11", "p12", "p22", "s"];

impl ScanTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("missing header row".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let rows: Vec<Vec<String>> = lines
            .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
            .collect();
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
            return Err(Error::Format(format!("row {} has the wrong number of fields", i + 1)));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column `{name}`")))
    }

    pub fn number(&self, row: usize, col: usize) -> Result<f64> {
        self.rows[row][col]
            .parse()
            .map_err(|_| Error::Format(format!("row {}: `{}` is not a number", row + 1, self.rows[row][col])))
    }

    /// Converged rows' `(e, p12)` at the smallest `Δτ` for each density.
    pub fn zeta_curve(&self) -> Result<Vec<(f64, f64)>> {
        let (ce, cd, cs, cp) = (self.column("e")?, self.column("dtau")?, self.column("status")?, self.column("p12")?);
        let mut best: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
        for i in 0..self.rows.len() {
            if self.rows[i][cs] != "ok" && self.rows[i][cs] != "mismatch" {
                continue;
            }
            let (e, d, p) = (self.number(i, ce)?, self.number(i, cd)?, self.number(i, cp)?);
            let entry = best.entry(e.to_bits()).or_insert((e, d, p));
            if d < entry.1 {
                *entry = (e, d, p);
            }
        }
        let mut curve: Vec<(f64, f64)> = best.into_values().map(|(e, _, p)| (e, p)).collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(curve)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOutputs {
    pub script: PathBuf,
    pub zeta_curve: PathBuf,
    pub rasters: Vec<PathBuf>,
}

fn gnuplot_script(csv_name: &str, table: &ScanTable) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# gnuplot script generated from {csv_name}");
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set terminal pngcairo size 800,600");
    let _ = writeln!(out, "set xlabel 'e'");
    let _ = writeln!(out, "set ylabel 'tau'");
    let _ = writeln!(out, "set palette rgbformulae 33,13,10");
    if table.rows.is_empty() {
        let _ = writeln!(out, "# no rows to plot");
        return Ok(out);
    }
    let status = table.column("status")? + 1;
    let e = table.column("e")? + 1;
    let tau = table.column("tau")? + 1;
    let mut quantities = vec!["c", "p12", "s"];
    if table.column("beta").is_ok() {
        quantities.push("beta");
    }
    for q in quantities {
        let col = table.column(q)? + 1;
        let _ = writeln!(out, "set output '{q}.png'");
        let _ = writeln!(out, "set title '{q}'");
        let _ = writeln!(
            out,
            "plot '{csv_name}' every ::1 using {e}:(strcol({status}) eq 'ok' ? ${tau} : NaN):{col} with points pt 5 palette notitle"
        );
    }
    let _ = writeln!(out, "set output 'zeta.png'");
    let _ = writeln!(out, "set title 'p12 at the smallest dtau'");
    let _ = writeln!(out, "set ylabel 'p12'");
    let _ = writeln!(out, "plot 'zeta_curve.csv' every ::1 using 1:2 with linespoints notitle");
    Ok(out)
}

/// Writes a gnuplot script, the extracted `ζ` curve and graymaps of up to
/// `max_rasters` converged rows (evenly spaced through the table).
pub fn emit_plots(csv: &Path, dir: &Path, max_rasters: usize) -> Result<PlotOutputs> {
    let text = std::fs::read_to_string(csv)?;
    let table = ScanTable::parse(&text)?;
    for name in PLOT_COLUMNS {
        table.column(name)?;
    }
    std::fs::create_dir_all(dir)?;
    let csv_name = csv.file_name().and_then(|s| s.to_str()).unwrap_or("scan.csv");
    let script = dir.join("plots.gp");
    std::fs::write(&script, gnuplot_script(csv_name, &table)?)?;

    let mut zeta_text = String::from("e,p12\n");
    for (e, p) in table.zeta_curve()? {
        let _ = writeln!(zeta_text, "{},{}", fmt17(e), fmt17(p));
    }
    let zeta_curve = dir.join("zeta_curve.csv");
    std::fs::write(&zeta_curve, zeta_text)?;

    let status = table.column("status")?;
    let cols: Vec<usize> = ["c", "p11", "p12", "p22"]
        .iter()
        .map(|n| table.column(n))
        .collect::<Result<_>>()?;
    let converged: Vec<usize> = (0..table.rows.len())
        .filter(|&i| table.rows[i][status] == "ok")
        .collect();
    let picks: Vec<usize> = if converged.len() <= max_rasters {
        converged
    } else {
        (0..max_rasters)
            .map(|j| converged[j * (converged.len() - 1) / (max_rasters - 1).max(1)])
            .collect()
    };
    let mut rasters = Vec::new();
    for i in picks {
        let v: Vec<f64> = cols.iter().map(|&c| table.number(i, c)).collect::<Result<_>>()?;
        let g = MultipodalGraphon::bipodal(v[0], v[1], v[2], v[3])?;
        let path = dir.join(format!("graphon_row{:04}.pgm", i + 1));
        std::fs::write(&path, render_pgm(&g, RASTER_SIZE))?;
        rasters.push(path);
    }
    Ok(PlotOutputs {
        script,
        zeta_curve,
        rasters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let mut cfg = ScanConfig::new(DensityModel::kstar(2).unwrap());
        cfg.e_min = 0.2;
        cfg.e_max = 0.4;
        cfg.e_count = 3;
        cfg.e_extra = vec![0.3, 0.35];
        let g = cfg.e_grid();
        assert_eq!(g.len(), 4);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        cfg.e_min = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn pgm_roundtrip() {
        let g = MultipodalGraphon::bipodal(0.25, 0.9, 0.6, 0.3).unwrap();
        let bytes = render_pgm(&g, 8);
        let (w, h, px) = read_pgm(&bytes).unwrap();
        assert_eq!((w, h), (8, 8));
        assert_eq!(px[0], (0.9f64 * 65535.0).round() as u16);
        assert_eq!(px[7], (0.6f64 * 65535.0).round() as u16);
        assert_eq!(px[63], (0.3f64 * 65535.0).round() as u16);
    }

    #[test]
    fn csv_parse_errors() {
        assert!(ScanTable::parse("").is_err());
        assert!(ScanTable::parse("a,b\n1\n").is_err());
        let t = ScanTable::parse("e,dtau\n0.1,0.2\n").unwrap();
        assert!(t.column("p12").is_err());
    }
}
