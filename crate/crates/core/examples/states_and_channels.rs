//! States, Kraus channels in both pictures, and how channels shrink distances.

use cstar_workbench::algebra::StarAlgebra;
use cstar_workbench::error::Result;
use cstar_workbench::linalg::{hadamard, ket, pauli_z, projector};
use cstar_workbench::states::{make_luders, state_distance, transition_probability, Channel, State};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let full = StarAlgebra::full(2);
    let zero = State::pure(&ket(2, 0));
    let plus = State::pure(&(hadamard() * ket(2, 0)));
    println!("|0> vs |+>: distance {:.4}, transition probability {:.4}",
        state_distance(&zero, &plus, &full)?, transition_probability(&zero, &plus, &full)?);

    let t = Channel::random(2, 2, &mut rng);
    let (a, b) = (t.schrodinger(&zero)?, t.schrodinger(&plus)?);
    println!("after a random channel: distance {:.4}", state_distance(&a, &b, &full)?);

    // duality: Tr(T*(rho) Z) = rho(T(Z))
    let z = pauli_z();
    let lhs = (a.density() * &z).trace().re;
    let rhs = zero.expect(&t.heisenberg(&z)?).re;
    println!("Schrodinger {lhs:.6} vs Heisenberg {rhs:.6}");

    // the nonselective Luders measurement of |0><0| erases the coherence of |+>
    let measured = make_luders(&projector(&ket(2, 0)))?.schrodinger(&plus)?;
    println!("|+> after measuring Z, without reading the outcome: off-diagonal {:.3}", measured.density()[(0, 1)].norm());
    Ok(())
}
