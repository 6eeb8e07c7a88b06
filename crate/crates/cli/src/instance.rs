use coind_core::groups::{BsInstance, FreeProduct, IntegerChain, WreathInstance, ZOrder};

use crate::CliError;

pub enum Inst {
    Wreath(WreathInstance),
    FreeProd(FreeProduct),
    IntChain(IntegerChain),
    Bs(BsInstance),
    AutF2 { n: usize, max_len: usize },
}

fn bad(s: &str) -> CliError {
    CliError::Usage(format!(
        "unknown instance {s:?}; expected wreath:Z<h>,Z, freeprod:<G>,<H>, bs:<n>,<m>, intchain:<d>, intchain:<d>xZ or autf2:n=<n>,L=<L>"
    ))
}

pub fn parse_instance(s: &str) -> Result<Inst, CliError> {
    let (kind, body) = s.split_once(':').ok_or_else(|| bad(s))?;
    match kind {
        "wreath" => {
            let h = body
                .strip_suffix(",Z")
                .and_then(|f| f.strip_prefix('Z'))
                .and_then(|h| h.parse::<u64>().ok())
                .ok_or_else(|| bad(s))?;
            Ok(Inst::Wreath(WreathInstance::new(h, ZOrder::PositiveFirst)?))
        }
        "freeprod" => Ok(Inst::FreeProd(FreeProduct::parse_factors(body)?)),
        "bs" => {
            let (n, m) = body.split_once(',').ok_or_else(|| bad(s))?;
            let (n, m) = (n.trim().parse().map_err(|_| bad(s))?, m.trim().parse().map_err(|_| bad(s))?);
            Ok(Inst::Bs(BsInstance::new(n, m)?))
        }
        "intchain" => match body.strip_suffix("xZ") {
            Some(d) => Ok(Inst::IntChain(IntegerChain::plane(d.parse().map_err(|_| bad(s))?)?)),
            None => Ok(Inst::IntChain(IntegerChain::line(body.parse().map_err(|_| bad(s))?)?)),
        },
        "autf2" => {
            let (mut n, mut max_len) = (None, None);
            for kv in body.split(',') {
                match kv.split_once('=') {
                    Some(("n", v)) => n = v.parse().ok(),
                    Some(("L", v)) => max_len = v.parse().ok(),
                    _ => return Err(bad(s)),
                }
            }
            Ok(Inst::AutF2 { n: n.ok_or_else(|| bad(s))?, max_len: max_len.ok_or_else(|| bad(s))? })
        }
        _ => Err(bad(s)),
    }
}
