//! Mollified counterexample: the cycle survives smoothing, and dilation shrinks the
//! third derivative.

use hb_landscape::quad_rates::{FunctionClass, HbParams};
use hb_landscape::rou_region::build_counterexample;
use hb_landscape::smooth::{
    dilate, hull_crossing_samples, scaled_cycle_deviation, smoothed_grad, third_derivative_estimate, QuadratureSpec,
    SmoothedCounterExample,
};

pub fn run_example() -> hb_landscape::Result<Vec<String>> {
    let c = FunctionClass::new(0.005, 1.0)?;
    let p = HbParams::new(3.5, 0.75);
    let ce = build_counterexample(p, c, 7)?;
    let sce = SmoothedCounterExample::new(ce.clone(), ce.r_max / 2.0, QuadratureSpec::default())?;
    let gap = (0..7)
        .map(|t| {
            let x = ce.cycle.point(t);
            (smoothed_grad(&sce, &x).grad - ce.eval(&x).1).norm()
        })
        .fold(0.0, f64::max);
    let mut lines = vec![format!("largest gradient change at the cycle points {gap:.3e}")];
    let samples = hull_crossing_samples(&ce, ce.r_max, &[-0.5, 0.0, 0.5]);
    let h = 1e-3 * ce.r_max;
    let tau = third_derivative_estimate(&sce, &samples, h);
    for lambda in [1.0, 10.0] {
        let scaled: Vec<_> = samples.iter().map(|(x, v)| (lambda * x, v.clone())).collect();
        let dil = dilate(sce.clone(), lambda)?;
        let dev = scaled_cycle_deviation(&dil, &ce, p, lambda, 100)?;
        let tau_l = third_derivative_estimate(&dil, &scaled, lambda * h);
        lines.push(format!(
            "lambda {lambda}: relative cycle deviation {:.3e}, third-derivative estimate {tau_l:.3e} (ratio {:.2})",
            dev / lambda,
            tau / tau_l
        ));
    }
    Ok(lines)
}

fn main() -> hb_landscape::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
