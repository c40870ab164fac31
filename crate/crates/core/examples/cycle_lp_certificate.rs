//! Linear feasibility test for cycles, its certificate, and the symmetrization of a
//! known three-point cycle.

use hb_landscape::cycle_lp::{decompose_circulant, lp_feasible_any, symmetrize_gram};
use hb_landscape::quad_rates::{optimal_tuning, FunctionClass};
use hb_landscape::rou_region::rou_member_any;
use nalgebra::DMatrix;

pub fn run_example() -> hb_landscape::Result<Vec<String>> {
    let c = FunctionClass::new(1.0, 25.0)?;
    let (p, _) = optimal_tuning(c);
    let mut lines = vec![format!("analytic period at the quadratic-optimal tuning: {:?}", rou_member_any(p, c, 25))];
    match lp_feasible_any(p, c, 25)? {
        Some(cert) => {
            lines.push(format!("LP period {} weights {:?} margin {:.3e}", cert.k, cert.nu, cert.margin));
            lines.push(format!("interpolation residual {:.3e}", cert.max_residual(p, c)?));
        }
        None => lines.push("no cycle certificate".into()),
    }
    let g0 = DMatrix::from_row_slice(3, 3, &[4.0, -26.0, 22.0, -26.0, 169.0, -143.0, 22.0, -143.0, 121.0])
        * (8.0_f64 / 49.0).powi(2);
    let g = symmetrize_gram(&g0)?;
    lines.push(format!("symmetrized Gram diagonal {:.6}, harmonic weights {:?}", g[(0, 0)], decompose_circulant(&g)?));
    Ok(lines)
}

fn main() -> hb_landscape::Result<()> {
    for line in run_example()? {
        println!("{line}");
    }
    Ok(())
}
