//! One mixed state, two different splits into pure states; impossible on an abelian algebra.

use cstar_workbench::error::{Error, Result};
use cstar_workbench::gns::ambiguous_mixture;
use cstar_workbench::scenario::parse_algebra;

fn main() -> Result<()> {
    for spec in ["M2", "M2xI2", "M2+C", "D3"] {
        let alg = parse_algebra(spec)?;
        match ambiguous_mixture(&alg, 0) {
            Ok(mix) => {
                let s = mix.states();
                println!(
                    "{spec}: (w1 + w2)/2 = (w+ + w-)/2 to {:.1e}; |w1 - w+|_HS = {:.3}",
                    mix.mixture_residual(),
                    s[0].distance_hs(s[2])
                );
            }
            Err(Error::AbelianAlgebra) => println!("{spec}: abelian, every mixture decomposes uniquely"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
