//! Named groups: `heisenberg`, `engel`, `abelian:n`, `example6:t3,t4,t5,t6`.

use alloc::format;
use alloc::vec::Vec;

use crate::algebra::{abelian, engel, heisenberg, StratifiedAlgebra};
use crate::discrete::{build_example_algebra, parse_qsqrt2, ExampleParams};
use crate::error::{Error, Result};
use crate::scalar::QSqrt2;

pub const PRESET_NAMES: &[&str] = &["heisenberg", "engel", "abelian:n", "example6:{t3,t4,t5,t6}"];

/// Build a preset over `Q(√2)`, which contains every preset's constants.
pub fn parse_preset(name: &str) -> Result<StratifiedAlgebra<QSqrt2>> {
    let name = name.trim();
    let unknown = || {
        Error::InvalidParameter(format!(
            "unknown group preset '{name}'; available: {}",
            PRESET_NAMES.join(", ")
        ))
    };
    match name {
        "heisenberg" => return Ok(heisenberg()),
        "engel" => return Ok(engel()),
        _ => {}
    }
    let (head, arg) = name.split_once(':').ok_or_else(unknown)?;
    match head {
        "abelian" => {
            let n: usize = arg
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("abelian dimension '{arg}' is not an integer")))?;
            abelian(n)
        }
        "example6" => {
            let arg = arg.trim().trim_start_matches('{').trim_end_matches('}');
            let ts: Vec<QSqrt2> = arg.split(',').map(parse_qsqrt2).collect::<Result<_>>()?;
            let t: [QSqrt2; 4] = ts
                .try_into()
                .map_err(|_| Error::InvalidParameter("example6 takes four parameters t3,t4,t5,t6".into()))?;
            Ok(build_example_algebra(&ExampleParams { t })?.algebra)
        }
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        assert_eq!(parse_preset("heisenberg").unwrap().dim(), 3);
        assert_eq!(parse_preset("engel").unwrap().step(), 3);
        assert_eq!(parse_preset("abelian:4").unwrap().dim(), 4);
        let e = parse_preset("example6:{sqrt2,sqrt2,sqrt2,sqrt2}").unwrap();
        assert_eq!(e.homogeneous_dimension(), 22);
        assert!(parse_preset("example6:1,1,1,1").is_ok());
        assert!(matches!(parse_preset("example6:1,2,3,sqrt2"), Err(Error::InconsistentJacobi(_))));
        let err = parse_preset("nope").unwrap_err();
        assert!(format!("{err}").contains("heisenberg"));
        assert!(parse_preset("abelian:x").is_err());
        assert!(parse_preset("example6:1,1").is_err());
    }
}
