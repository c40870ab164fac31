//! Worst-case rates of heavy-ball on quadratics: regions, optimal tuning, level sets
//! and the Ghadimi region.

use hb_landscape::quad_rates::{
    ghadimi_optimum, level_set, optimal_tuning, rate_on_quadratics, FunctionClass, HbParams,
};

pub fn run_example() -> hb_landscape::Result<Vec<String>> {
    let c = FunctionClass::new(1.0, 25.0)?;
    let mut lines = vec![];
    for (gamma, beta) in [(0.04, 0.0), (1.0 / 9.0, 4.0 / 9.0), (0.02, 0.5), (0.11, 0.1), (0.2, 0.5)] {
        let r = rate_on_quadratics(HbParams::new(gamma, beta), c);
        lines.push(format!("gamma {gamma:.4} beta {beta:.4}: {} rho {:?}", r.region.as_str(), r.rho));
    }
    let (p, rho) = optimal_tuning(c);
    lines.push(format!("optimal tuning gamma {:.6} beta {:.6} rho {rho:.6}", p.gamma, p.beta));
    let tri = level_set(c, 0.8)?;
    for v in tri.vertices() {
        lines.push(format!("level 0.8 vertex gamma {:.6} beta {:.6}", v.gamma, v.beta));
    }
    let (g, rho_g) = ghadimi_optimum(c);
    lines.push(format!("best Ghadimi tuning gamma {:.6} beta {:.6} rho {rho_g:.6}", g.gamma, g.beta));
    Ok(lines)
}

fn main() -> hb_landscape::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
