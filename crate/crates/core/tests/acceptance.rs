//! Acceptance run: one line per criterion, exit status 1 if any fails.

use std::sync::Arc;
use std::time::Instant;

use anonelect::corpus::{generate_corpus, random_configuration, CorpusSpec};
use anonelect::eligibility::{check_ec, distinct_enhanced_views, Verdict};
use anonelect::fixtures;
use anonelect::graph::{enumerate_trails, Configuration};
use anonelect::protocol::{build_triple_sequence, initial_label, run_semantic_detailed, HistoryOracle};
use anonelect::sim::experiments::{tunnel_experiment, twin_experiment};
use anonelect::sim::{replay_decisions, with_large_stack, Budget, SchedulerRegistry, Simulation};
use anonelect::trail::Trail;
use anonelect::view::{extend_view, ground_truth_of, subtrees_equal, truncated_view, view_classes, TruncatedView};

type Check = Result<String, String>;

struct Shared {
    corpus: Vec<Configuration>,
    /// False marks seen in executor runs and simulator runs.
    semantic_false_marks: usize,
    sim_false_marks: usize,
    sim_runs: usize,
}

fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let chunk = items.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker")).collect()
    })
}

fn c1_cross_validation(sh: &mut Shared) -> Check {
    let start = Instant::now();
    let rows = parallel_map(&sh.corpus, |cfg| {
        let ec = check_ec(cfg).map_err(|e| e.to_string())?;
        let run = run_semantic_detailed(cfg).map_err(|e| e.to_string())?;
        Ok::<_, String>((ec.verdict == Verdict::Eligible, run.outcome.consistent, run.outcome.false_marks))
    });
    let mut bad = 0;
    let mut eligible = 0;
    for r in rows {
        let (e, c, f) = r?;
        eligible += e as usize;
        bad += (e != c) as usize;
        sh.semantic_false_marks += f;
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("{} configurations, {eligible} eligible, {bad} counterexamples, {secs:.1}s", sh.corpus.len());
    if bad == 0 && secs <= 1800.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c2_anchored_verdicts() -> Check {
    for m in 3..=6 {
        let r = check_ec(&fixtures::oriented_ring(m)).map_err(|e| e.to_string())?;
        if r.verdict != Verdict::NotEligible {
            return Err(format!("oriented ring of {m}: {}", r.verdict.as_str()));
        }
    }
    let r = check_ec(&fixtures::c1_ring()).map_err(|e| e.to_string())?;
    if r.verdict != Verdict::Eligible || !r.clause_beta {
        return Err(format!("five-ring with one flipped node: {} beta={}", r.verdict.as_str(), r.clause_beta));
    }
    Ok("oriented rings 3..6 not eligible; flipped five-ring eligible through differing views".into())
}

fn same_classes(a: &[u32], b: &[u32]) -> bool {
    (0..a.len()).all(|u| (0..a.len()).all(|v| (a[u] == a[v]) == (b[u] == b[v])))
}

fn c3_stabilization() -> Check {
    let mut violations = 0;
    let mut direct_checks = 0;
    for seed in 0..200u64 {
        let m = 2 + (seed % 5) as usize;
        let cfg = random_configuration(m, 0.35, 1000 + seed).map_err(|e| e.to_string())?;
        let marks: Vec<bool> = (0..m).map(|v| cfg.is_occupied(v)).collect();
        for mk in [None, Some(&marks[..])] {
            let short = view_classes(&cfg, m - 1, mk);
            let long = view_classes(&cfg, 2 * m, mk);
            if !same_classes(&short, &long) {
                violations += 1;
            }
            // cross-check the short partition against explicitly built views when they are small
            if cfg.max_degree().pow(m as u32 - 1) <= 4096 {
                let views: Vec<TruncatedView> = (0..m).map(|v| truncated_view(&cfg, v, m - 1)).collect();
                for u in 0..m {
                    for v in 0..m {
                        let mut eq = views[u].code() == views[v].code();
                        if mk.is_some() {
                            eq &= ground_truth_of(&cfg, &views[u]) == ground_truth_of(&cfg, &views[v]);
                        }
                        if eq != (short[u] == short[v]) {
                            violations += 1;
                        }
                    }
                }
                direct_checks += 1;
            }
        }
    }
    let msg = format!("200 graphs, plain and enhanced, {direct_checks} cross-checked directly, {violations} violations");
    if violations == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c4_codes(sh: &Shared) -> Check {
    let rows = parallel_map(&sh.corpus, |cfg| {
        let m = cfg.node_count();
        let mut bad = 0;
        for l in 0..=2 * (cfg.bound_n() - 1) {
            let views: Vec<TruncatedView> = (0..m).map(|v| truncated_view(cfg, v, l)).collect();
            for u in 0..m {
                match TruncatedView::decode(&views[u].code()) {
                    Ok(d) if d == views[u] => {}
                    _ => bad += 1,
                }
                for v in 0..m {
                    let by_code = views[u].code() == views[v].code();
                    let by_structure = subtrees_equal(&views[u], 0, &views[v], 0, l);
                    bad += (by_code != by_structure) as usize;
                }
            }
        }
        bad
    });
    let bad: usize = rows.into_iter().sum();
    let msg = format!("{} configurations at every depth up to 2(n-1), {bad} violations", sh.corpus.len());
    if bad == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5_extension() -> Check {
    let mut bad = 0;
    let mut checks = 0;
    for seed in 0..100u64 {
        let m = 2 + (seed % 3) as usize;
        let cfg = random_configuration(m, 0.4, 5000 + seed).map_err(|e| e.to_string())?;
        let n = cfg.bound_n();
        let v = (seed as usize) % m;
        let base = truncated_view(&cfg, v, 2 * n - 1);
        for l in 0..=3 * (n - 1) + 5 {
            let ext = extend_view(&base, l, n).map_err(|e| e.to_string())?;
            bad += (ext != truncated_view(&cfg, v, l)) as usize;
            checks += 1;
        }
    }
    let msg = format!("100 instances, {checks} depths, {bad} mismatches");
    if bad == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c6_tunnels() -> Check {
    let t = |p: &[u32]| Trail::new(p.to_vec());
    let k2 = fixtures::k2(&[0, 1]);
    let p3 = fixtures::p3(&[0, 2]);
    let cases = [
        (&k2, 0, t(&[0, 0]), 1, t(&[0, 0]), 1),
        (&k2, 0, t(&[0, 0]), 1, t(&[0, 0, 0, 0]), 1),
        (&k2, 0, t(&[0, 0, 0, 0, 0, 0]), 1, t(&[0, 0, 0, 0, 0, 0]), 3),
        (&p3, 1, t(&[1, 0]), 2, t(&[0, 1, 0, 0]), 1),
        (&p3, 0, t(&[0, 0, 1, 0]), 2, t(&[0, 1, 0, 0]), 2),
        (&p3, 0, t(&[0, 0, 1, 0, 0, 1]), 1, t(&[1, 0, 0, 1, 0, 0]), 3),
    ];
    let mut total = 0;
    for (cfg, s1, r1, s2, r2, core) in cases {
        let r = tunnel_experiment(cfg, s1, &r1, s2, &r2, 1_000_000).map_err(|e| e.to_string())?;
        if r.core != core || !r.all_meet() {
            return Err(format!("routes {r1} / {r2}: core {} meetings {}/{}", r.core, r.core_split, r.interleavings));
        }
        total += r.interleavings;
    }
    Ok(format!("cores of 1 to 3 edges, {total} interleavings, all meet inside the core"))
}

fn c7_twins(sh: &Shared) -> Check {
    let symmetric: Vec<&Configuration> =
        sh.corpus.iter().filter(|c| !distinct_enhanced_views(c).0).collect();
    let mut fixed = vec![fixtures::oriented_ring(3), fixtures::oriented_ring(4)];
    fixed.extend(symmetric.into_iter().cloned());
    let mut checked = 0;
    for cfg in &fixed {
        let r = twin_experiment(cfg, 20).map_err(|e| e.to_string())?;
        if let Some(d) = r.divergence {
            return Err(format!("twins {:?} diverged at round {}", d.nodes, d.round));
        }
        if r.rounds_checked < 20 {
            return Err(format!("run ended after {} rounds", r.rounds_checked));
        }
        checked += 1;
    }
    if checked < 10 {
        return Err(format!("only {checked} symmetric configurations"));
    }
    Ok(format!("{checked} symmetric configurations, 20 rounds each, twins identical"))
}

fn c9_semi_completeness(sh: &Shared) -> Check {
    let rows = parallel_map(&sh.corpus, |cfg| {
        if check_ec(cfg).map(|r| r.verdict) != Ok(Verdict::Eligible) {
            return Ok(None);
        }
        let run = run_semantic_detailed(cfg).map_err(|e| e.to_string())?;
        let near = 2 * (cfg.bound_n() - 1);
        let mut bad = 0;
        for (a, view) in run.outcome.agents.iter().zip(&run.views) {
            let f4 = &a.label.mappings[3];
            let truth = ground_truth_of(cfg, view);
            bad += view.nodes_within(near).filter(|&x| f4.get(x) != truth.get(x)).count();
        }
        Ok::<_, String>(Some(bad))
    });
    let (mut configs, mut bad) = (0, 0);
    for r in rows {
        if let Some(b) = r? {
            configs += 1;
            bad += b;
        }
    }
    let msg = format!("{configs} eligible configurations, {bad} view nodes differ from ground truth");
    if bad == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c10_c11_runs(sh: &mut Shared) -> (Check, Check) {
    let mut h_checked = 0;
    let mut h_bad = Vec::new();
    let mut replays = 0;
    let mut replay_bad = 0;
    let registry = SchedulerRegistry::standard();
    let mut runs: Vec<(Configuration, &str, u64, u64)> = vec![
        (fixtures::k2(&[0, 1]), "stage-barrier-serial", 0, 1_000_000),
        (fixtures::p3(&[0, 2]), "stage-barrier-serial", 0, 1_000_000),
        (fixtures::p3(&[0, 1]), "stage-barrier-serial", 0, 1_000_000),
    ];
    for (i, cfg) in sh.corpus.iter().filter(|c| c.node_count() <= 3).enumerate() {
        runs.push((cfg.clone(), "random", i as u64, 20_000));
        runs.push((cfg.clone(), "synchronous", 0, 20_000));
    }
    for (idx, (cfg, name, seed, ticks)) in runs.into_iter().enumerate() {
        let sched = registry.create(name, seed).expect("registered");
        let mut sim = match Simulation::new(&cfg, sched, Budget { max_ticks: ticks, ..Budget::default() }) {
            Ok(s) => s.without_trace(),
            Err(e) => return (Err(e.to_string()), Err(e.to_string())),
        };
        let out = sim.run();
        sh.sim_runs += 1;
        sh.sim_false_marks += out.agents.iter().map(|a| a.false_marks).sum::<usize>();
        if idx < 3 {
            for e in sim.stage_ends().to_vec() {
                let st = sim.protocol_mut().state_at(e.mem).expect("replay");
                let label = st.labels()[e.phase - 1].clone();
                let h = sim.protocol_mut().oracle.history(&label, e.stage).expect("history");
                let len = sim.protocol().oracle.arena.len(h);
                let walked = sim.protocol().mem.trail(e.mem);
                let same = walked.len() as u64 == len
                    && sim.protocol().oracle.arena.materialize(h, len).as_deref() == Some(&walked[..]);
                h_checked += 1;
                if !same {
                    h_bad.push((e.agent, e.phase, e.stage));
                }
            }
        }
        replays += sim.decisions().len();
        replay_bad += replay_decisions(&sim).unwrap_or(usize::MAX / 2);
    }
    let c10 = if h_bad.is_empty() && h_checked > 0 {
        Ok(format!("{h_checked} completed stages on two-node and three-node paths match their histories"))
    } else {
        Err(format!("{h_checked} stages checked, mismatches at {h_bad:?}"))
    };
    let c11 = if replay_bad == 0 && replays > 0 {
        Ok(format!("{replays} recorded decisions reproduced from memory alone"))
    } else {
        Err(format!("{replay_bad} of {replays} decisions differ on replay"))
    };
    (c10, c11)
}

fn c8_no_false_marks(sh: &Shared) -> Check {
    let msg = format!(
        "{} false marks over {} executor runs, {} over {} simulator runs",
        sh.semantic_false_marks,
        sh.corpus.len(),
        sh.sim_false_marks,
        sh.sim_runs
    );
    if sh.semantic_false_marks == 0 && sh.sim_false_marks == 0 && sh.sim_runs > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c12_growth() -> Check {
    let cfg = fixtures::oriented_ring(4).with_occupied(&[0, 2]).map_err(|e| e.to_string())?;
    let n = cfg.bound_n();
    let labels: Vec<_> = cfg
        .occupied_nodes()
        .into_iter()
        .map(|v| initial_label(&truncated_view(&cfg, v, 3 * (n - 1)), n))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let trails = Arc::new(enumerate_trails(&cfg, n, true, 1 << 20).map_err(|e| e.to_string())?);
    let mut oracle = HistoryOracle::new(n, 1 << 22);
    oracle.publish(build_triple_sequence(&labels, trails).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let lengths: Vec<u64> =
        oracle.moving_stage_lengths(&labels[0]).map_err(|e| e.to_string())?.iter().map(|m| m.1).collect();
    let ok = lengths.len() >= 30 && (2..lengths.len()).all(|k| lengths[k] >= lengths[k - 1].saturating_add(lengths[k - 2]));
    let msg = format!(
        "{} moving stages, final history length {}, {} trail store nodes",
        lengths.len(),
        lengths.last().copied().unwrap_or(0),
        oracle.arena.node_count()
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let failed = with_large_stack(|| {
        let corpus = generate_corpus(&CorpusSpec { max_nodes: 4, min_agents: 2, ..CorpusSpec::default() })
            .expect("corpus");
        let mut sh = Shared { corpus, semantic_false_marks: 0, sim_false_marks: 0, sim_runs: 0 };
        let mut results: Vec<(u32, &str, Check)> = Vec::new();
        results.push((1, "eligibility agrees with the executor", c1_cross_validation(&mut sh)));
        results.push((2, "anchored verdicts", c2_anchored_verdicts()));
        results.push((3, "view stabilization", c3_stabilization()));
        results.push((4, "code soundness", c4_codes(&sh)));
        results.push((5, "view extension", c5_extension()));
        results.push((6, "tunnel meetings", c6_tunnels()));
        results.push((7, "twin invariance", c7_twins(&sh)));
        results.push((9, "semi-completeness", c9_semi_completeness(&sh)));
        let (c10, c11) = c10_c11_runs(&mut sh);
        results.push((10, "history consistency", c10));
        results.push((11, "decision purity", c11));
        results.push((8, "no false marks", c8_no_false_marks(&sh)));
        results.push((12, "history growth", c12_growth()));
        results.sort_by_key(|r| r.0);
        let mut failed = 0;
        for (k, name, r) in &results {
            match r {
                Ok(m) => println!("criterion {k:>2} PASS  {name}: {m}"),
                Err(m) => {
                    failed += 1;
                    println!("criterion {k:>2} FAIL  {name}: {m}");
                }
            }
        }
        failed
    });
    if failed > 0 {
        std::process::exit(1);
    }
}
