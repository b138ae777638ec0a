//! Plain-text parameter checkpoints for trained vector fields.
//!
//! ```text
//! lti-checkpoint v1
//! activation relu_power 2
//! masked true
//! widths 2 16 16 1
//! params 337
//! <one parameter per line>
//! ```

use std::fmt::Write as _;

use lti_core::network::{Activation, Architecture, Mlp, MlpVectorField};
use thiserror::Error;

const MAGIC: &str = "lti-checkpoint v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Network(#[from] lti_core::network::NetworkError),
}

pub fn format(field: &MlpVectorField) -> String {
    let arch = field.mlp().architecture();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    match arch.activation {
        Activation::ReluPower(s) => {
            let _ = writeln!(out, "activation relu_power {s}");
        }
        Activation::Identity => {
            let _ = writeln!(out, "activation identity");
        }
    }
    let _ = writeln!(out, "masked {}", field.masked());
    let widths: Vec<String> = arch.widths.iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "widths {}", widths.join(" "));
    let _ = writeln!(out, "params {}", field.param_count());
    for p in field.params() {
        // shortest representation that parses back to the same bits
        let _ = writeln!(out, "{p:e}");
    }
    out
}

pub fn parse(text: &str) -> Result<MlpVectorField, CheckpointError> {
    let bad = |line: usize, message: String| CheckpointError::Parse { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(0, format!("missing {what}")));

    let (n, magic) = next("header")?;
    if magic != MAGIC {
        return Err(bad(n, format!("expected {MAGIC:?}")));
    }
    let (n, act) = next("activation")?;
    let activation = match act.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["activation", "identity"] => Activation::Identity,
        ["activation", "relu_power", s] => {
            Activation::ReluPower(s.parse().map_err(|e| bad(n, format!("activation power: {e}")))?)
        }
        _ => return Err(bad(n, format!("bad activation line {act:?}"))),
    };
    let (n, masked) = next("masked")?;
    let masked = match masked.strip_prefix("masked ") {
        Some("true") => true,
        Some("false") => false,
        _ => return Err(bad(n, format!("bad masked line {masked:?}"))),
    };
    let (n, widths) = next("widths")?;
    let widths = widths
        .strip_prefix("widths ")
        .ok_or_else(|| bad(n, "expected `widths`".into()))?
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|e| bad(n, format!("width {s:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let (n, count) = next("params")?;
    let count: usize = count
        .strip_prefix("params ")
        .ok_or_else(|| bad(n, "expected `params`".into()))?
        .parse()
        .map_err(|e| bad(n, format!("param count: {e}")))?;
    let mut params = Vec::with_capacity(count);
    for (n, l) in lines {
        if l.is_empty() {
            continue;
        }
        params.push(l.parse::<f64>().map_err(|e| bad(n, format!("{l:?}: {e}")))?);
    }
    if params.len() != count {
        return Err(bad(0, format!("header announces {count} parameters, found {}", params.len())));
    }
    let arch = Architecture::new(widths, activation)?;
    Ok(MlpVectorField::from_mlp(Mlp::new(arch, params)?, masked)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_keeps_every_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = MlpVectorField::random(2, &[5, 7], Activation::ReluPower(3), true, &mut rng).unwrap();
        let text = format(&f);
        assert!(text.starts_with("lti-checkpoint v1\nactivation relu_power 3\nmasked true\nwidths 3 5 7 2\n"));
        let g = parse(&text).unwrap();
        assert_eq!(g.params(), f.params());
        assert_eq!(g.masked(), f.masked());
        assert_eq!(g.mlp().architecture(), f.mlp().architecture());
    }

    #[test]
    fn rejects_truncated_files() {
        let f = MlpVectorField::zeros(1, &[3], Activation::ReluPower(2), false).unwrap();
        let text = format(&f);
        let cut: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        assert!(parse(&cut).is_err());
        assert!(parse("lti-checkpoint v2\n").is_err());
    }
}
