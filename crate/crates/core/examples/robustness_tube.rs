//! Perturbed heavy-ball runs around the seven-point cycle under guaranteed noise bounds.

use hb_landscape::hb_engine::{perturbed_run, stability_constants, NoiseMode, NoiseSpec};
use hb_landscape::quad_rates::{rate_on_quadratics, FunctionClass, HbParams};
use hb_landscape::rou_region::build_counterexample;

pub fn run_example() -> hb_landscape::Result<Vec<String>> {
    let c = FunctionClass::new(0.005, 1.0)?;
    let p = HbParams::new(3.5, 0.75);
    let ce = build_counterexample(p, c, 7)?;
    let consts = stability_constants(p, c.mu(), None)?;
    let mut lines = vec![format!(
        "kappa_P {:.4} rho_D {:.4} ({:?}), r_max {:.4e}",
        consts.kappa_p, consts.rho_d, consts.region_used, ce.r_max
    )];
    let mut inside = 0;
    for seed in 0..20 {
        let noise = NoiseSpec::within_guarantee(&ce, &consts, 0.5, 1.0, NoiseMode::UniformRandom, seed);
        inside += perturbed_run(&ce, c, p, 7, &noise, 1000, true)?.stayed_in_tube as usize;
    }
    lines.push(format!("{inside}/20 noisy runs stayed within r_max of the cycle"));
    let init = perturbed_run(&ce, c, p, 7, &NoiseSpec::init_only(0.5, 1), 3000, true)?;
    let iso = rate_on_quadratics(p, FunctionClass::new(c.mu(), c.mu())?);
    lines.push(format!(
        "initial perturbation decays at {:.4}; isotropic quadratic rate {:.4}",
        init.residual_decay_rate.unwrap_or(f64::NAN),
        iso.rho.unwrap_or(f64::NAN)
    ));
    Ok(lines)
}

fn main() -> hb_landscape::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
