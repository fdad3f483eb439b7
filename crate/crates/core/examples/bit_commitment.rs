//! The commitment protocol: honest and lying senders, the entangled attack, and the separable search.

use cstar_workbench::bitcommit::{
    build_commit_states, run_epr_attack, run_honest, run_lying, separable_attack_search, AttackConfig, AttackMode,
};
use cstar_workbench::error::Result;
use cstar_workbench::gns::AmbiguousMixture;

fn main() -> Result<()> {
    let pair = build_commit_states(&AmbiguousMixture::qubit());
    println!("receiver's view is identical for both bits to {:.1e}", pair.concealment_residual()?);

    let honest = run_honest(&pair, 1, 1000, 0.01, 7)?;
    let lying = run_lying(&pair, 0, 1000, 0.01, 7)?;
    let epr = run_epr_attack(&pair, 1, 1000, 0.01, 7)?;
    for t in [&honest, &lying, &epr] {
        println!(
            "{:?}: agreement {:.3} vs threshold {:.3}, accepted {}",
            t.strategy, t.agreement_rate, t.threshold, t.accept
        );
    }

    for mode in [AttackMode::Separable, AttackMode::Entangled] {
        let r = separable_attack_search(
            &pair,
            AttackConfig { components: 4, restarts: 10, iterations: 300, seed: 1, mode },
        )?;
        println!("{mode:?} resource: best attack objective {:.3e}", r.residual("objective").unwrap_or(f64::NAN));
    }
    Ok(())
}
