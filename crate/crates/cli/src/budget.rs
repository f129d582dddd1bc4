//! Budgets from the environment: `ANONELECT_BUDGET=max_ticks=5000,max_memory_nodes=100000`.

use anyhow::{bail, Context, Result};

use anonelect::sim::Budget;

pub const VAR: &str = "ANONELECT_BUDGET";

pub fn from_env() -> Result<Budget> {
    match std::env::var(VAR) {
        Ok(s) => parse(&s).with_context(|| format!("parsing {VAR}")),
        Err(_) => Ok(Budget::default()),
    }
}

pub fn parse(s: &str) -> Result<Budget> {
    let mut b = Budget::default();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (key, value) = item.split_once('=').with_context(|| format!("expected key=value, got {item:?}"))?;
        match key.trim() {
            "max_ticks" => b.max_ticks = value.trim().parse()?,
            "max_memory_nodes" => b.max_memory_nodes = value.trim().parse()?,
            "max_trail_nodes" => b.max_trail_nodes = value.trim().parse()?,
            "trail_cap" => b.trail_cap = value.trim().parse()?,
            other => bail!("unknown budget key {other:?}"),
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_overrides() {
        let b = parse("max_ticks=7, max_memory_nodes=99").unwrap();
        assert_eq!(b.max_ticks, 7);
        assert_eq!(b.max_memory_nodes, 99);
        assert_eq!(b.max_trail_nodes, Budget::default().max_trail_nodes);
        assert_eq!(parse("").unwrap(), Budget::default());
    }

    #[test]
    fn rejects_junk() {
        assert!(parse("ticks=3").is_err());
        assert!(parse("max_ticks").is_err());
        assert!(parse("max_ticks=x").is_err());
    }
}
