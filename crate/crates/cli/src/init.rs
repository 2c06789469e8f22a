//! `--init` values: `caseA`, `caseB`, `ket1`, `mix:beta=X` or `file=PATH`.
//!
//! A file holds `{"coins": [...]}` with one entry per coin, each either a
//! name (`"mixed"`, `"caseA"`, `"ket1"`, `"ketm1"`) or an amplitude pair
//! `{"up": [re, im], "down": [re, im]}`.

use serde::Deserialize;

use mcqw::coin_kernel::Qubit;
use mcqw::walk_engine::{CoinInit, InitialSpec};
use mcqw::C64;

use crate::Failure;

#[derive(Deserialize)]
#[serde(untagged)]
enum CoinEntry {
    Named(String),
    Amplitudes { up: [f64; 2], down: [f64; 2] },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitFile {
    coins: Vec<CoinEntry>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn coin(entry: &CoinEntry) -> Result<CoinInit, Failure> {
    Ok(match entry {
        CoinEntry::Named(n) => match n.as_str() {
            "mixed" | "caseB" => CoinInit::MixedBasis,
            "caseA" | "symmetric" => CoinInit::Pure(Qubit::symmetric()),
            "ket1" => CoinInit::Pure(Qubit::right()),
            "ketm1" => CoinInit::Pure(Qubit::left()),
            other => return Err(usage(format!("unknown coin `{other}`"))),
        },
        CoinEntry::Amplitudes { up, down } => CoinInit::Pure(
            Qubit::new(C64::new(up[0], up[1]), C64::new(down[0], down[1])).map_err(|e| usage(e.to_string()))?,
        ),
    })
}

/// `round(M^β)` leading coins in `(1, i)/√2`, the rest random.
pub fn mixture_count(m: usize, beta: f64) -> usize {
    ((m as f64).powf(beta).round() as usize).min(m)
}

pub fn parse(s: &str, m: usize) -> Result<InitialSpec, Failure> {
    if m == 0 {
        return Err(usage("--M must be positive"));
    }
    match s {
        "caseA" => return Ok(InitialSpec::case_a(m)),
        "caseB" => return Ok(InitialSpec::case_b(m)),
        "ket1" => return Ok(InitialSpec::ket1(m)),
        _ => {}
    }
    if let Some(b) = s.strip_prefix("mix:beta=") {
        let beta: f64 = b.parse().map_err(|_| usage(format!("bad beta in `{s}`")))?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(usage(format!("beta must lie in [0, 1], got {beta}")));
        }
        return Ok(InitialSpec::mixture(m, mixture_count(m, beta)));
    }
    if let Some(path) = s.strip_prefix("file=") {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?;
        let file: InitFile = serde_json::from_str(&text).map_err(|e| usage(format!("{path}: {e}")))?;
        if file.coins.len() != m {
            return Err(usage(format!("{path} lists {} coins, --M is {m}", file.coins.len())));
        }
        let coins = file.coins.iter().map(coin).collect::<Result<Vec<_>, _>>()?;
        return InitialSpec::new(coins).map_err(|e| usage(e.to_string()));
    }
    Err(usage(format!("unknown --init `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_rounding() {
        assert_eq!(mixture_count(100, 0.5), 10);
        assert_eq!(mixture_count(10, 0.5), 3);
        assert_eq!(mixture_count(7, 1.0), 7);
        assert_eq!(mixture_count(7, 0.0), 1);
        let spec = parse("mix:beta=0.5", 10).unwrap();
        assert_eq!(spec.count_mixed(), 7);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse("caseC", 3).is_err());
        assert!(parse("mix:beta=1.5", 3).is_err());
        assert!(parse("mix:beta=x", 3).is_err());
        assert!(parse("caseA", 0).is_err());
    }

    #[test]
    fn file_entries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("init.json");
        std::fs::write(&p, r#"{"coins": ["mixed", "ket1", {"up": [0.6, 0.0], "down": [0.0, 0.8]}]}"#).unwrap();
        let spec = parse(&format!("file={}", p.display()), 3).unwrap();
        assert_eq!(spec.count_mixed(), 1);
        assert!(parse(&format!("file={}", p.display()), 2).is_err());
        std::fs::write(&p, r#"{"coins": [{"up": [1.0, 0.0], "down": [1.0, 0.0]}]}"#).unwrap();
        assert!(parse(&format!("file={}", p.display()), 1).is_err());
    }
}
