//! Operations on one algebra leave another's statistics alone exactly when the two commute.

use cstar_workbench::algebra::StarAlgebra;
use cstar_workbench::error::Result;
use cstar_workbench::linalg::random_unitary;
use cstar_workbench::theorems::{check_nosignaling_equivalence, signaling_witness};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let a = StarAlgebra::full(2).tensor_identity(3);
    let b = StarAlgebra::identity_tensor(2, &StarAlgebra::full(3));
    let tilted = b.conjugate(&random_unitary(6, &mut ChaCha8Rng::seed_from_u64(1)));
    for (name, other) in [("tensor factors", &b), ("tilted factor", &tilted)] {
        let r = check_nosignaling_equivalence(&a, other, 10, 0, 1e-9)?;
        println!(
            "{name}: verdict {:?}, commutator {:.3}, max signal {:.3}",
            r.verdict,
            r.residual("commutator").unwrap_or(0.0),
            r.residual("max_signal").unwrap_or(0.0)
        );
    }
    let w = signaling_witness(&a, &tilted)?;
    println!("witness: measuring one effect of A moves an observable of B by {:.3}", w.signal);
    Ok(())
}
