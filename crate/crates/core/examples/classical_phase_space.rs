//! A finite phase space: conditioning is Bayes' rule, flows are permutations, and an abelian
//! algebra is a function algebra on its pure states.

use cstar_workbench::algebra::generate_algebra;
use cstar_workbench::classical::{conditional_update, flow_automorphism, gelfand_transform, Measure};
use cstar_workbench::error::Result;
use cstar_workbench::linalg::diag;

fn main() -> Result<()> {
    let mu = Measure::new(vec![0.1, 0.2, 0.3, 0.4])?;
    let g = [1.0, -1.0, 2.0, 1.5];
    println!("E[g | {{1, 3}}] = {:.4}", conditional_update(&mu, &[1, 3], &g)?);

    let shift = flow_automorphism(&[1, 2, 3, 0])?;
    let moved = shift.schrodinger(&mu.to_state())?;
    println!("one step of the cyclic flow: {:?}", (0..4).map(|i| moved.density()[(i, i)].re).collect::<Vec<_>>());

    let alg = generate_algebra(&[diag(&[1.0, 1.0, 2.0])], 3)?;
    let gt = gelfand_transform(&alg)?;
    println!("{} pure states; round trip residual {:.1e}", gt.space.len(), gt.round_trip_residual());
    Ok(())
}
