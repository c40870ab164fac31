//! Builds the piecewise-quadratic counterexample at the parameters of the seven-point
//! cycle and runs heavy-ball on it.

use hb_landscape::hb_engine::{detect_cycle, run, Objective};
use hb_landscape::quad_rates::{FunctionClass, HbParams};
use hb_landscape::rou_region::{build_counterexample, membership_polynomial, rou_member_any};
use nalgebra::DVector;

pub fn run_example() -> hb_landscape::Result<Vec<String>> {
    let c = FunctionClass::new(0.005, 1.0)?;
    let p = HbParams::new(3.5, 0.75);
    let q = membership_polynomial(p.beta, 7, c)?;
    let mut lines = vec![format!(
        "period 7 roots: gamma in [{:.4}, {:.4}]",
        q.gamma_minus.unwrap_or(f64::NAN),
        q.gamma_plus.unwrap_or(f64::NAN)
    )];
    lines.push(format!("smallest cycling period: {:?}", rou_member_any(p, c, 25)));
    let ce = build_counterexample(p, c, 7)?;
    lines.push(format!("r_max {:.6e}", ce.r_max));
    let x = |t: i64| DVector::from_column_slice(ce.cycle.point(t).as_slice());
    let trace = run(|z| ce.grad(z), p, x(0), x(1), 10_000)?;
    let dev = trace.iterates.iter().enumerate().map(|(t, z)| (z - x(t as i64)).norm()).fold(0.0, f64::max);
    let (cycles, _) = detect_cycle(&trace, 7, 1e-9)?;
    lines.push(format!("max distance to the cycle over 1e4 steps {dev:.3e}, cycles {cycles}"));
    Ok(lines)
}

fn main() -> hb_landscape::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
