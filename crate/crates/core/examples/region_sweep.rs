//! Grid sweep of the cycling region with CSV, JSON and SVG output.

use hb_landscape::quad_rates::FunctionClass;
use hb_landscape::report::{bundle_csv, render_svg, sweep, table4, SweepMode, SweepSpec};

pub fn run_example() -> hb_landscape::Result<Vec<String>> {
    let c = FunctionClass::with_kappa(0.01)?;
    let mut spec = SweepSpec::default_grid(c, SweepMode::RouRegion, 40);
    spec.k_max = 50;
    let bundle = sweep(&spec, "cycling-region")?;
    let csv = bundle_csv(&bundle)?;
    let svg = render_svg(&csv)?;
    let mut lines = vec![
        format!("{} rows, tags {}", bundle.rows.len(), bundle.metadata["tag_counts"]),
        format!("csv {} bytes, svg {} bytes", csv.len(), svg.len()),
    ];
    for r in table4(0.01)? {
        lines.push(format!("{}: {:?} / {:?}", r.algorithm, r.smooth_strongly_convex, r.quadratic));
    }
    Ok(lines)
}

fn main() -> hb_landscape::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
