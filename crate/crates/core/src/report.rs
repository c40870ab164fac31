//! Grid sweeps, reference rate table, and CSV / JSON / SVG output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cycle_lp::{lp_margin, FEAS_TOL};
use crate::error::{Error, Result};
use crate::hb_engine::SimTrace;
use crate::quad_rates::{
    ghadimi_contains, ghadimi_optimum, optimal_tuning, rate_on_quadratics, sublevel_contains,
    FunctionClass, HbParams,
};
use crate::rou_region::{rou_member_any, RouCycle, DEFAULT_K_MAX};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a sweep evaluates at each grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Quadratic rate and region.
    Rate,
    /// Smallest roots-of-unity cycle period.
    RouRegion,
    /// Smallest period with a feasible cycle LP.
    LpRegion,
    /// Ghadimi region with the quadratic rate.
    Ghadimi,
    /// Sublevel set at `(1 - C kappa) / (1 + C kappa)` against the cycling region.
    SlsOverlay,
}

/// Grid of `(gamma, beta)` cells; both axes are inclusive linear spacings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mu: f64,
    pub ell: f64,
    pub gamma_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub n_gamma: usize,
    pub n_beta: usize,
    pub k_max: usize,
    pub mode: SweepMode,
    /// Constant `C` of the overlay mode.
    pub sls_constant: f64,
}

impl SweepSpec {
    /// `n x n` grid over `gamma in (0, 2(1 + beta_max)/L]` and `beta in [0, 1)`.
    pub fn default_grid(c: FunctionClass, mode: SweepMode, n: usize) -> Self {
        let beta_max = (n as f64 - 1.0) / n as f64;
        let gamma_max = 2.0 * (1.0 + beta_max) / c.ell();
        Self {
            mu: c.mu(),
            ell: c.ell(),
            gamma_range: (gamma_max / n as f64, gamma_max),
            beta_range: (0.0, beta_max),
            n_gamma: n,
            n_beta: n,
            k_max: DEFAULT_K_MAX,
            mode,
            sls_constant: 50.0 / 3.0 + 0.01,
        }
    }

    pub fn class(&self) -> Result<FunctionClass> {
        FunctionClass::new(self.mu, self.ell)
    }

    fn validate(&self) -> Result<()> {
        if self.n_gamma < 2 || self.n_beta < 2 {
            return Err(Error::Domain("grid counts must be at least 2".into()));
        }
        let r = [self.gamma_range.0, self.gamma_range.1, self.beta_range.0, self.beta_range.1];
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid ranges must be finite".into()));
        }
        self.class().map(|_| ())
    }

    /// Grid point `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> HbParams {
        let lin = |(a, b): (f64, f64), i: usize, n: usize| a + (b - a) * i as f64 / (n - 1) as f64;
        HbParams::new(lin(self.gamma_range, i, self.n_gamma), lin(self.beta_range, j, self.n_beta))
    }
}

/// One grid cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub gamma: f64,
    pub beta: f64,
    pub value: f64,
    pub tag: String,
}

/// Sweep output: rows in row-major order (gamma outer, beta inner) and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureBundle {
    pub rows: Vec<Row>,
    pub metadata: serde_json::Value,
}

fn lp_cell(p: HbParams, c: FunctionClass, k_max: usize) -> Result<(f64, &'static str)> {
    if !c.converges_on_quadratics(p) {
        return Ok((f64::NAN, "outside"));
    }
    let mut boundary = None;
    for k in 3..=k_max {
        let (margin, _) = lp_margin(p, c, k)?;
        if margin < -FEAS_TOL {
            return Ok((k as f64, "feasible"));
        }
        if margin <= FEAS_TOL && boundary.is_none() {
            boundary = Some(k);
        }
    }
    Ok(match boundary {
        Some(k) => (k as f64, "indeterminate"),
        None => (f64::NAN, "infeasible"),
    })
}

fn cell(spec: &SweepSpec, c: FunctionClass, p: HbParams) -> Result<(f64, String)> {
    let nan = f64::NAN;
    Ok(match spec.mode {
        SweepMode::Rate => {
            let r = rate_on_quadratics(p, c);
            (r.rho.unwrap_or(nan), r.region.as_str().into())
        }
        SweepMode::RouRegion => match rou_member_any(p, c, spec.k_max) {
            Some(k) => (k as f64, "cycle".into()),
            None => (nan, "no-cycle".into()),
        },
        SweepMode::LpRegion => {
            let (v, t) = lp_cell(p, c, spec.k_max)?;
            (v, t.into())
        }
        SweepMode::Ghadimi => {
            let rho = rate_on_quadratics(p, c).rho.unwrap_or(nan);
            (rho, if ghadimi_contains(c, p) { "ghadimi" } else { "outside" }.into())
        }
        SweepMode::SlsOverlay => {
            let kappa = c.kappa();
            let level = (1.0 - spec.sls_constant * kappa) / (1.0 + spec.sls_constant * kappa);
            let in_sls = sublevel_contains(c, level, p);
            let k = rou_member_any(p, c, spec.k_max);
            let tag = match (in_sls, k.is_some()) {
                (true, true) => "sls-cycle",
                (true, false) => "sls-no-cycle",
                (false, true) => "cycle",
                (false, false) => "other",
            };
            (k.map_or(nan, |k| k as f64), tag.into())
        }
    })
}

/// Evaluates the sweep in parallel; the row order is deterministic.
pub fn sweep(spec: &SweepSpec, figure: &str) -> Result<FigureBundle> {
    spec.validate()?;
    let c = spec.class()?;
    let rows: Vec<Row> = (0..spec.n_gamma * spec.n_beta)
        .into_par_iter()
        .map(|idx| {
            let p = spec.point(idx / spec.n_beta, idx % spec.n_beta);
            let (value, tag) = cell(spec, c, p)?;
            Ok(Row { gamma: p.gamma, beta: p.beta, value, tag })
        })
        .collect::<Result<_>>()?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rows {
        *counts.entry(r.tag.clone()).or_default() += 1;
    }
    let mut metadata = json!({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "figure": figure,
        "spec": spec,
        "kappa": c.kappa(),
        "tag_counts": counts,
    });
    if spec.mode == SweepMode::SlsOverlay {
        let kappa = c.kappa();
        metadata["verdict"] = json!({
            "level": (1.0 - spec.sls_constant * kappa) / (1.0 + spec.sls_constant * kappa),
            "empty_intersection": !counts.contains_key("sls-no-cycle"),
        });
    }
    Ok(FigureBundle { rows, metadata })
}

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// CSV text of the sweep rows: header `gamma,beta,value,tag`.
pub fn bundle_csv(bundle: &FigureBundle) -> Result<String> {
    let mut w = csv_writer(vec![]);
    w.write_record(["gamma", "beta", "value", "tag"])?;
    for r in &bundle.rows {
        w.write_record([fmt17(r.gamma), fmt17(r.beta), fmt17(r.value), r.tag.clone()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

/// Writes `<out>` (CSV), `<out>.json` (metadata) and optionally `<out>.svg`.
pub fn write_bundle(bundle: &FigureBundle, out: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    let text = bundle_csv(bundle)?;
    std::fs::write(out, &text)?;
    let json_path = sidecar(out, "json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&bundle.metadata)? + "\n")?;
    let mut written = vec![out.to_path_buf(), json_path];
    if svg {
        let svg_path = sidecar(out, "svg");
        std::fs::write(&svg_path, render_svg(&text)?)?;
        written.push(svg_path);
    }
    Ok(written)
}

const PALETTE: [&str; 8] =
    ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c"];

/// Filled-cell raster of a sweep CSV, colored by tag, with a legend.
pub fn render_svg(csv_text: &str) -> Result<String> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let mut rows = vec![];
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Io(format!("bad number in column {i}")))
        };
        rows.push((num(0)?, num(1)?, rec.get(3).unwrap_or("").to_string()));
    }
    let mut gammas: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut betas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    for v in [&mut gammas, &mut betas] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let tags: Vec<String> = {
        let mut t: Vec<String> = rows.iter().map(|r| r.2.clone()).collect();
        t.sort();
        t.dedup();
        t
    };
    let (w, h, legend) = (600.0, 600.0, 160.0);
    let (cw, ch) = (w / gammas.len().max(1) as f64, h / betas.len().max(1) as f64);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{h}\" shape-rendering=\"crispEdges\">\n",
        w + legend
    );
    for (g, b, tag) in &rows {
        let i = gammas.partition_point(|v| v < g);
        let j = betas.partition_point(|v| v < b);
        let color = PALETTE[tags.iter().position(|t| t == tag).unwrap_or(0) % PALETTE.len()];
        s += &format!(
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{color}\"/>\n",
            i as f64 * cw,
            h - (j + 1) as f64 * ch,
            cw,
            ch
        );
    }
    for (n, tag) in tags.iter().enumerate() {
        let y = 20.0 + 24.0 * n as f64;
        s += &format!(
            "<rect x=\"{}\" y=\"{y}\" width=\"16\" height=\"16\" fill=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"14\" font-family=\"sans-serif\">{tag}</text>\n",
            w + 10.0,
            PALETTE[n % PALETTE.len()],
            w + 32.0,
            y + 13.0
        );
    }
    s += "</svg>\n";
    Ok(s)
}

/// One algorithm of the reference rate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    pub algorithm: &'static str,
    /// Rate on smooth strongly convex functions; `None` when unknown or non-convergent.
    pub smooth_strongly_convex: Option<f64>,
    /// Rate on quadratics.
    pub quadratic: Option<f64>,
    pub note: &'static str,
}

/// Known rates of standard first-order methods at inverse condition number `kappa`.
pub fn table4(kappa: f64) -> Result<Vec<RateEntry>> {
    let c = FunctionClass::with_kappa(kappa)?;
    let sk = kappa.sqrt();
    let cheb = (1.0 - sk) / (1.0 + sk);
    let gd = (1.0 - kappa) / (1.0 + kappa);
    let row = |algorithm, f, q, note| RateEntry { algorithm, smooth_strongly_convex: f, quadratic: q, note };
    Ok(vec![
        row("GD(1/L)", Some(1.0 - kappa), Some(1.0 - kappa), "1 - kappa"),
        row("GD(2/(L+mu))", Some(gd), Some(gd), "1 - 2 kappa"),
        row("Chebyshev", None, Some(cheb), "1 - 2 sqrt(kappa) on quadratics"),
        row("HB quadratic-optimal tuning", None, Some(optimal_tuning(c).1), "cycles on the smooth strongly convex class"),
        row("HB best Ghadimi tuning", None, Some(ghadimi_optimum(c).1), "1 - Theta(kappa)"),
        row("NAG(1/L, (1-sqrt k)/(1+sqrt k))", Some((1.0 - sk).sqrt()), Some(1.0 - sk), "1 - sqrt(kappa)/2 and 1 - sqrt(kappa)"),
        row("Information-theoretic exact method", Some(1.0 - sk), Some(1.0 - sk), "optimal on the smooth strongly convex class"),
        row("Triple momentum", Some(1.0 - sk), Some(1.0 - sk), "1 - sqrt(kappa)"),
        row("Lower bound", Some(1.0 - sk), Some(cheb), "complexity lower bounds"),
    ])
}

/// Writes a trace as CSV with columns `t, x0.., dist_to_cycle, gamma_t, beta_t`.
///
/// `gamma_t, beta_t` are the parameters of the step taken from `z_t`. Distances use
/// the cycle scaled by `lambda` when a cycle is given.
pub fn trace_csv(trace: &SimTrace, cycle: Option<(&RouCycle, f64)>) -> Result<String> {
    let d = trace.iterates.first().map_or(0, |z| z.len());
    let mut w = csv_writer(vec![]);
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.extend(["dist_to_cycle", "gamma_t", "beta_t"].map(String::from));
    w.write_record(&header)?;
    for (t, z) in trace.iterates.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(z.iter().map(|v| fmt17(*v)));
        let dist = match cycle {
            Some((c, lambda)) if d == 2 => {
                let x = lambda * c.point(t as i64);
                ((z[0] - x.x).powi(2) + (z[1] - x.y).powi(2)).sqrt()
            }
            _ => f64::NAN,
        };
        rec.push(fmt17(dist));
        let p = t.checked_sub(1).and_then(|i| trace.params_used.get(i));
        rec.push(fmt17(p.map_or(f64::NAN, |p| p.gamma)));
        rec.push(fmt17(p.map_or(f64::NAN, |p| p.beta)));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
