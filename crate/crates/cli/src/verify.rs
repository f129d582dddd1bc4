//! Corpus-wide agreement between the eligibility checker and the protocol executor.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use anonelect::corpus::{generate_corpus, CorpusSpec};
use anonelect::eligibility::{check_ec, Verdict};
use anonelect::protocol::run_semantic;
use anonelect::{Configuration, GraphDocument};

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub index: usize,
    pub verdict: String,
    pub consistent: bool,
    pub false_marks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
    pub graph: GraphDocument,
    /// Smallest placement found that still disagrees.
    pub minimized: GraphDocument,
    pub repro: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub spec: CorpusSpec,
    pub configurations: usize,
    pub eligible: usize,
    pub counterexamples: Vec<Counterexample>,
    pub errors: Vec<(usize, String)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.errors.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} configurations, {} eligible, {} counterexamples, {} errors\n",
            self.configurations,
            self.eligible,
            self.counterexamples.len(),
            self.errors.len()
        );
        for c in &self.counterexamples {
            s += &format!("  #{}: {} but consistent={}, repro {}\n", c.index, c.verdict, c.consistent, c.repro.display());
        }
        for (i, e) in &self.errors {
            s += &format!("  #{i}: {e}\n");
        }
        s
    }
}

struct Check {
    eligible: bool,
    verdict: Verdict,
    consistent: bool,
    false_marks: usize,
    diagnosis: Option<String>,
}

impl Check {
    fn failed(&self) -> bool {
        self.eligible != self.consistent || self.false_marks > 0
    }
}

fn check(cfg: &Configuration) -> anonelect::Result<Check> {
    let ec = check_ec(cfg)?;
    let run = run_semantic(cfg)?;
    Ok(Check {
        eligible: ec.verdict == Verdict::Eligible,
        verdict: ec.verdict,
        consistent: run.consistent,
        false_marks: run.false_marks,
        diagnosis: run.diagnosis,
    })
}

/// Drops agents one at a time as long as the disagreement persists.
fn minimize(cfg: &Configuration) -> Configuration {
    let mut cur = cfg.clone();
    'outer: loop {
        let occ = cur.occupied_nodes();
        if occ.len() <= 2 {
            return cur;
        }
        for skip in 0..occ.len() {
            let fewer: Vec<usize> = occ.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
            let Ok(next) = cur.with_occupied(&fewer) else { continue };
            if check(&next).is_ok_and(|c| c.failed()) {
                cur = next;
                continue 'outer;
            }
        }
        return cur;
    }
}

#[derive(Serialize)]
struct Repro<'a> {
    command: &'a str,
    spec: &'a CorpusSpec,
    index: usize,
    graph: &'a GraphDocument,
    minimized: &'a GraphDocument,
    verdict: &'a str,
    consistent: bool,
    false_marks: usize,
}

fn write_repro(dir: &Path, spec: &CorpusSpec, index: usize, cfg: &Configuration, c: &Check) -> Result<Counterexample> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let graph = cfg.to_document();
    let minimized = minimize(cfg).to_document();
    let path = dir.join(format!("counterexample-{index:05}.json"));
    let repro = Repro {
        command: "anonelect verify",
        spec,
        index,
        graph: &graph,
        minimized: &minimized,
        verdict: c.verdict.as_str(),
        consistent: c.consistent,
        false_marks: c.false_marks,
    };
    fs::write(&path, serde_json::to_string_pretty(&repro)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(Counterexample {
        index,
        verdict: c.verdict.as_str().to_string(),
        consistent: c.consistent,
        false_marks: c.false_marks,
        diagnosis: c.diagnosis.clone(),
        graph,
        minimized,
        repro: path,
    })
}

pub fn verify(spec: &CorpusSpec, repro_dir: &Path) -> Result<VerifyReport> {
    let corpus = generate_corpus(spec)?;
    let results: Vec<anonelect::Result<Check>> = corpus.par_iter().map(check).collect();
    let mut report = VerifyReport {
        spec: spec.clone(),
        configurations: corpus.len(),
        eligible: 0,
        counterexamples: Vec::new(),
        errors: Vec::new(),
    };
    for (i, (cfg, r)) in corpus.iter().zip(results).enumerate() {
        match r {
            Ok(c) => {
                report.eligible += c.eligible as usize;
                if c.failed() {
                    report.counterexamples.push(write_repro(repro_dir, spec, i, cfg, &c)?);
                }
            }
            Err(e) => report.errors.push((i, e.to_string())),
        }
    }
    Ok(report)
}
