use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use anonelect::corpus::{generate_corpus, CorpusSpec, Occupancy};
use anonelect::eligibility::check_ec;
use anonelect::protocol::run_semantic;
use anonelect::sim::{simulate, RunStatus, SchedulerRegistry};
use anonelect::view::{ground_truth_of, truncated_view, view_classes};
use anonelect::{load_configuration, Configuration};

mod budget;
mod verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "anonelect", version, about = "Leader election for anonymous agents in port-labeled graphs")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether leader election is possible in a configuration.
    Check { graph: PathBuf },
    /// Print the truncated view of every node.
    Views {
        graph: PathBuf,
        /// Depth of the views; defaults to the size bound minus one.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Run the protocol phase by phase and report each agent's leader.
    Elect { graph: PathBuf },
    /// Run the protocol step by step under an adversarial scheduler.
    Simulate {
        graph: PathBuf,
        #[arg(long, default_value = "stage-barrier-serial")]
        scheduler: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_ticks: Option<u64>,
        #[arg(long)]
        max_memory_nodes: Option<usize>,
        /// Write the trace as JSON lines to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Cross-check the eligibility checker against the protocol over a generated corpus.
    Verify {
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
        #[arg(long)]
        max_degree: Option<usize>,
        /// Directory for failing configurations.
        #[arg(long, default_value = "repro")]
        repro_dir: PathBuf,
    },
    /// Print generated configurations, one graph document per line.
    Corpus {
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
        #[arg(long)]
        max_degree: Option<usize>,
        /// Keep at most this many placements per graph, drawn with `--seed`.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        min_agents: usize,
        /// Keep configurations isomorphic to earlier ones.
        #[arg(long)]
        no_dedup: bool,
    },
}

fn read_graph(path: &Path) -> Result<Configuration> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    Ok(load_configuration(&text)?)
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    let mut out = io::stdout().lock();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(value)?)?,
        Format::Text => write!(out, "{}", text())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct NodeView {
    node: usize,
    occupied: bool,
    class: u32,
    enhanced_class: u32,
    code: String,
    marks: String,
}

#[derive(Serialize)]
struct ViewsReport {
    depth: usize,
    nodes: Vec<NodeView>,
}

fn views(cfg: &Configuration, depth: Option<usize>) -> ViewsReport {
    let depth = depth.unwrap_or(cfg.bound_n() - 1);
    let occupied: Vec<bool> = (0..cfg.node_count()).map(|v| cfg.is_occupied(v)).collect();
    let plain = view_classes(cfg, depth, None);
    let enhanced = view_classes(cfg, depth, Some(&occupied));
    let nodes = (0..cfg.node_count())
        .map(|v| {
            let view = truncated_view(cfg, v, depth);
            NodeView {
                node: v,
                occupied: occupied[v],
                class: plain[v],
                enhanced_class: enhanced[v],
                code: view.code().to_string(),
                marks: ground_truth_of(cfg, &view).bitstring(),
            }
        })
        .collect();
    ViewsReport { depth, nodes }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    match cli.command {
        Command::Check { graph } => {
            let cfg = read_graph(&graph)?;
            let r = check_ec(&cfg)?;
            emit(format, &r, || {
                format!(
                    "{}\nall enhanced views distinct: {}\nsome views differ: {}\nnon-uniform palindrome: {}\n",
                    r.verdict.as_str(),
                    r.clause_alpha,
                    r.clause_beta,
                    r.clause_gamma
                )
            })?;
        }
        Command::Views { graph, depth } => {
            let cfg = read_graph(&graph)?;
            let r = views(&cfg, depth);
            emit(format, &r, || {
                let mut s = format!("depth {}\n", r.depth);
                for n in &r.nodes {
                    let star = if n.occupied { "*" } else { " " };
                    s += &format!("{}{star} class {} enhanced {} code {}\n", n.node, n.class, n.enhanced_class, n.code);
                }
                s
            })?;
        }
        Command::Elect { graph } => {
            let cfg = read_graph(&graph)?;
            let r = run_semantic(&cfg)?;
            emit(format, &r, || {
                let mut s = String::new();
                for a in &r.agents {
                    s += &format!("agent at {}: leader at {} via {}\n", a.home, a.leader_node, a.leader_trail);
                }
                s += &match &r.diagnosis {
                    None => "consistent\n".to_string(),
                    Some(d) => format!("inconsistent: {d}\n"),
                };
                s
            })?;
        }
        Command::Simulate { graph, scheduler, seed, max_ticks, max_memory_nodes, trace_out } => {
            let cfg = read_graph(&graph)?;
            if !SchedulerRegistry::standard().names().contains(&scheduler.as_str()) {
                bail!("unknown scheduler {scheduler:?}; known: {}", SchedulerRegistry::standard().names().join(", "));
            }
            let mut b = budget::from_env()?;
            if let Some(t) = max_ticks {
                b.max_ticks = t;
            }
            if let Some(m) = max_memory_nodes {
                b.max_memory_nodes = m;
            }
            let (out, trace) = simulate(&cfg, &scheduler, seed, b)?;
            if let Some(path) = trace_out {
                let mut f = io::BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                for e in &trace {
                    serde_json::to_writer(&mut f, e)?;
                    f.write_all(b"\n")?;
                }
                f.flush()?;
            }
            emit(format, &out, || {
                let mut s = format!("{:?} after {} ticks, {} meetings\n", out.status, out.ticks, out.meetings);
                if let Some(r) = &out.reason {
                    s += &format!("reason: {r}\n");
                }
                for a in &out.agents {
                    s += &format!("agent at {}: {:?}", a.home, a.status);
                    if let Some(l) = a.leader_node {
                        s += &format!(", leader at {l}");
                    }
                    s.push('\n');
                }
                s
            })?;
            if out.status == RunStatus::Failed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Verify { max_nodes, max_degree, repro_dir } => {
            let spec = CorpusSpec { max_nodes, max_degree, min_agents: 2, ..CorpusSpec::default() };
            let r = verify::verify(&spec, &repro_dir)?;
            emit(format, &r, || r.summary())?;
            if !r.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Corpus { max_nodes, max_degree, sample, seed, min_agents, no_dedup } => {
            let occupancy = match sample {
                Some(per_graph) => Occupancy::Sampled { per_graph, seed },
                None => Occupancy::All,
            };
            let spec = CorpusSpec { max_nodes, max_degree, occupancy, dedup: !no_dedup, min_agents };
            let mut out = io::BufWriter::new(io::stdout().lock());
            for cfg in generate_corpus(&spec)? {
                let doc = cfg.to_document();
                match format {
                    Format::Json => serde_json::to_writer(&mut out, &doc)?,
                    Format::Text => write!(
                        out,
                        "{} nodes, edges {:?}, agents at {:?}",
                        doc.nodes,
                        cfg.edges(),
                        doc.occupied
                    )?,
                }
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
