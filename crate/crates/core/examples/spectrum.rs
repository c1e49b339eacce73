//! Eigenvalues of the linearized operator, mode by mode, tagged against the
//! scaling eigenvalue `p-1` and the threshold `p*-1`.

use ckn_lab::spectrum::{full_spectrum, SpectrumOptions};
use ckn_lab::CknParams;

fn main() -> ckn_lab::Result<()> {
    // Degenerate at k = 2: the threshold eigenspace has dimension 1 + 9.
    let params = CknParams::new(4, 2.0, 0.0, 2.0)?;
    let opts = SpectrumOptions { n_eigs: 3, ..SpectrumOptions::default() }.adapted(&params);
    let table = full_spectrum(&params, 3, &opts)?;
    table.write_csv(std::io::stdout())?;
    eprintln!(
        "threshold p*-1 = {}, threshold eigenspace dimension {}",
        params.derived().p_star - 1.0,
        table.count_tagged(ckn_lab::spectrum::Tag::Threshold)
    );
    Ok(())
}
