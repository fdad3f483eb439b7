//! Generate a *-algebra, take its commutant twice, and read off its block structure.

use cstar_workbench::algebra::{center, commutant, generate_algebra, wedderburn_decompose};
use cstar_workbench::error::Result;
use cstar_workbench::linalg::{diag, kron, pauli_x, pauli_z};

fn main() -> Result<()> {
    // X ⊗ I together with Z ⊗ diag(1, 0) breaks the tensor symmetry of M2 ⊗ I2
    let gens = [kron(&pauli_x(), &diag(&[1.0, 1.0])), kron(&pauli_z(), &diag(&[1.0, 0.0]))];
    let alg = generate_algebra(&gens, 4)?;
    let comm = commutant(&alg)?;
    let back = commutant(&comm)?;
    println!("dim A = {}, dim A' = {}, dim A'' = {}", alg.dim(), comm.dim(), back.dim());
    println!("A'' = A: {}", back.same_span(&alg, 1e-9));
    println!("center dim = {}, factor: {}", center(&alg).dim(), alg.is_factor());

    let blocks = wedderburn_decompose(&alg)?;
    for (k, b) in blocks.blocks.iter().enumerate() {
        println!("block {k}: M_{} with multiplicity {}", b.dim, b.multiplicity);
    }
    println!("sum of n_k^2 = {}, shape residual = {:.1e}", blocks.algebra_dim(), blocks.residual(&alg));
    Ok(())
}
