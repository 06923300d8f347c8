//! The truncated number-basis oracle: build the dressed thermal state as a
//! matrix and compare its statistics with the closed forms.
//!
//! ```text
//! DRESSED_MODES_ORACLE_DIM=80 cargo run --release --example fock_oracle
//! ```

use dressed_modes::fock::{self, occupations_escalating, rho_fock};
use dressed_modes::statistics::{p_joint, t_closed, t_single};
use dressed_modes::{DressedModelParams, ModeCount};

fn main() -> dressed_modes::Result<()> {
    let params = DressedModelParams::new(1.0, 0.4)?;

    let rho = rho_fock(&params, ModeCount::One, 60)?;
    let g = fock::g_fock(1.1, 0.0, ModeCount::One, 60)?;
    let t = g.trace_product(&rho)?;
    println!(
        "one mode, D = 60: tr(g rho) = {t:.12}, closed form {:.12}, truncation tol {:.1e}",
        t_single(1.1, &params)?,
        rho.truncation_tol()
    );
    println!("purity {:.12}", fock::purity(&rho)?);

    let occ = occupations_escalating(&params, ModeCount::Two, fock::default_dimension())?;
    println!(
        "two modes, D = {} (tol {:.1e}): T(0.3, -1.2) oracle {:.12}, closed {:.12}",
        occ.dim_per_mode,
        occ.truncation_tol,
        occ.generating_function(0.3, -1.2),
        t_closed(0.3, -1.2, &params)
    );
    for (m, n) in [(0, 0), (1, 0), (2, 3), (5, 5)] {
        println!(
            "  P({m}, {n}): oracle {:.14}, closed {:.14}",
            occ.joint(m, n),
            p_joint(m, n, &params)?
        );
    }
    Ok(())
}
