//! GNS triples for a pure and a mixed state, and the irreducibility test.

use cstar_workbench::error::Result;
use cstar_workbench::gns::{gns_construct, is_irreducible, is_pure_on};
use cstar_workbench::linalg::ket;
use cstar_workbench::scenario::parse_algebra;
use cstar_workbench::states::State;

fn main() -> Result<()> {
    let alg = parse_algebra("M2+C")?;
    let pure = State::pure(&ket(3, 0));
    let mixed = State::diagonal(&[0.5, 0.25, 0.25])?;
    for (name, rho) in [("pure", &pure), ("mixed", &mixed)] {
        let g = gns_construct(&alg, rho)?;
        println!(
            "{name}: carrier dim {}, state residual {:.1e}, homomorphism residual {:.1e}, irreducible {} (pure on algebra {})",
            g.carrier_dim,
            g.state_residual(rho),
            g.homomorphism_residual(),
            is_irreducible(&g)?,
            is_pure_on(rho, &alg)?
        );
    }
    Ok(())
}
