use thiserror::Error;

/// Which composition theorem a bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// `mn eps^bv + n(n-1)(m-1) eps^q-sec`.
    Protocol1,
    /// `mn eps^bb + n(n-1)(m-1) eps^q-sec + 2n eps^q-sec`.
    Protocol3,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("n and m must be at least 1 (n={n}, m={m})")]
    Size { n: usize, m: usize },
    #[error("{name}={value} is not in [0, 1]")]
    Epsilon { name: &'static str, value: f64 },
}

fn check(name: &'static str, value: f64) -> Result<(), BoundError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(BoundError::Epsilon { name, value })
    }
}

/// The general composed error of an `n`-client, `m`-round run.
pub fn error_bound(
    n: usize,
    m: usize,
    eps_bv: f64,
    eps_qsec: f64,
    eps_bb: f64,
    variant: BoundVariant,
) -> Result<f64, BoundError> {
    if n == 0 || m == 0 {
        return Err(BoundError::Size { n, m });
    }
    check("eps_bv", eps_bv)?;
    check("eps_qsec", eps_qsec)?;
    check("eps_bb", eps_bb)?;
    let (nf, mf) = (n as f64, m as f64);
    let channels = nf * (nf - 1.0) * (mf - 1.0) * eps_qsec;
    Ok(match variant {
        BoundVariant::Protocol1 => mf * nf * eps_bv + channels,
        BoundVariant::Protocol3 => mf * nf * eps_bb + channels + 2.0 * nf * eps_qsec,
    })
}

/// The error stated for the dedicated two-client chain, which differs from
/// the general formula at `n=2, m=1`: `eps^q-sec + 2 eps^bv` and
/// `2 eps^bb + 3 eps^q-sec`.
pub fn two_client_bound(eps_bv: f64, eps_qsec: f64, eps_bb: f64, variant: BoundVariant) -> Result<f64, BoundError> {
    check("eps_bv", eps_bv)?;
    check("eps_qsec", eps_qsec)?;
    check("eps_bb", eps_bb)?;
    Ok(match variant {
        BoundVariant::Protocol1 => eps_qsec + 2.0 * eps_bv,
        BoundVariant::Protocol3 => 2.0 * eps_bb + 3.0 * eps_qsec,
    })
}
