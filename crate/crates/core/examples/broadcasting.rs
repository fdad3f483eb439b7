//! Classical copying always works; quantum broadcasting works only for commuting pairs.

use cstar_workbench::error::Result;
use cstar_workbench::linalg::{hadamard, ket};
use cstar_workbench::states::State;
use cstar_workbench::theorems::{
    broadcast_commuting, broadcast_residual, classical_broadcaster, no_broadcast_search, SearchConfig,
};

fn main() -> Result<()> {
    let t = classical_broadcaster(3);
    let rho = State::diagonal(&[0.2, 0.5, 0.3])?;
    let ready = State::diagonal(&[1.0, 0.0, 0.0])?;
    println!("classical copy of a 3-point measure: marginal residual {:.1e}", broadcast_residual(&t, &rho, &ready)?);

    let (d0, d1) = (State::diagonal(&[0.9, 0.1])?, State::diagonal(&[0.4, 0.6])?);
    let c = broadcast_commuting(&d0, &d1)?;
    let ready2 = State::pure(&ket(2, 0));
    println!(
        "commuting pair: residuals {:.1e}, {:.1e}",
        broadcast_residual(&c, &d0, &ready2)?,
        broadcast_residual(&c, &d1, &ready2)?
    );

    let zero = State::pure(&ket(2, 0));
    let plus = State::pure(&(hadamard() * ket(2, 0)));
    let report = no_broadcast_search(&zero, &plus, SearchConfig::default())?;
    println!(
        "|0>, |+>: best marginal fidelity over {} restarts is {:.5} ({:?})",
        report.trials,
        report.residual("best_fidelity").unwrap_or(f64::NAN),
        report.verdict
    );
    Ok(())
}
