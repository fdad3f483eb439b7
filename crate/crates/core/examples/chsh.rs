//! CHSH values: the singlet reaches 2*sqrt(2), the commitment states stay classical.

use cstar_workbench::bitcommit::{build_commit_states, chsh_max_two_qubit, chsh_value, optimize_chsh, singlet, ObservablePair};
use cstar_workbench::error::Result;
use cstar_workbench::gns::AmbiguousMixture;
use cstar_workbench::states::Bipartition;

fn main() -> Result<()> {
    let (a, b) = ObservablePair::singlet_optimal();
    println!("singlet, optimal settings: {:.6}", chsh_value(&singlet(), &a, &b)?);
    let pair = build_commit_states(&AmbiguousMixture::qubit());
    let (best, _, _) = optimize_chsh(&pair.rho0, Bipartition::symmetric(2), 8, 200, 0)?;
    println!("commitment state: optimized {best:.6}, closed form {:.6}", chsh_max_two_qubit(&pair.rho0)?);
    Ok(())
}
