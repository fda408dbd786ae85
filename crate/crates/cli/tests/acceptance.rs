//! End-to-end acceptance checks. Each test prints exactly one line of the
//! form `criterion N <name>: PASS|FAIL (...)` to stderr, bypassing the test
//! harness capture so the summary is visible in plain `cargo test` output.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdsweep_core::graph::{generate_synthetic, parse_tdgr, write_tdgr, SynthParams};
use tdsweep_core::profile::{one_to_all_profile, Restriction};
use tdsweep_core::tch::{parse_tch, serialize_tch};
use tdsweep_core::*;

const PERIOD: f64 = DEFAULT_PERIOD;

type Outcome = Result<String, String>;

/// Runs one criterion, prints its verdict line and fails the test on FAIL.
fn criterion(number: u32, name: &str, budget: Duration, body: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let took = start.elapsed();
    let outcome = match outcome {
        Ok(d) if took > budget => Err(format!("{d}; took {took:.1?}, budget {budget:?}")),
        other => other,
    };
    let line = match &outcome {
        Ok(detail) => format!("criterion {number} {name}: PASS ({detail}; {took:.1?})"),
        Err(why) => format!("criterion {number} {name}: FAIL ({why})"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(why) = outcome {
        panic!("criterion {number} failed: {why}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Seeded mix of grids and random geometric graphs with 100 to 400 nodes.
fn mixed_graph(seed: u64) -> TdGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let p = if seed.is_multiple_of(2) {
        let w = rng.gen_range(10..=20);
        let h = rng.gen_range(10..=400 / w);
        SynthParams::grid(w, h, seed)
    } else {
        let n = rng.gen_range(100..=400);
        SynthParams::random_geometric(n, 3 * n, seed)
    };
    let g = generate_synthetic(&p).unwrap();
    assert!((100..=400).contains(&g.num_nodes()));
    g
}

fn eps(e: f64) -> SweepOptions {
    SweepOptions {
        prune_epsilon: Epsilon::new(e).unwrap(),
        ..Default::default()
    }
}

// ---------------------------------------------------------------------------
// Independent reference semantics
// ---------------------------------------------------------------------------

/// Piecewise-linear evaluation by a straight scan over the breakpoints.
fn naive_eval(f: &Ttf, t: f64) -> f64 {
    let pts = f.points();
    if pts.len() == 1 {
        return pts[0].val;
    }
    let t = t.rem_euclid(PERIOD);
    let last = pts[pts.len() - 1];
    let mut prev = Point::new(last.at - PERIOD, last.val);
    for &p in pts
        .iter()
        .chain(std::iter::once(&Point::new(pts[0].at + PERIOD, pts[0].val)))
    {
        if t <= p.at {
            return prev.val + (t - prev.at) / (p.at - prev.at) * (p.val - prev.val);
        }
        prev = p;
    }
    unreachable!()
}

#[derive(PartialEq)]
struct Arrival(f64);

impl Eq for Arrival {}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Arrival {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Earliest-arrival Dijkstra for one departure time. Returns travel times,
/// `inf` for unreachable nodes.
fn earliest_arrival(g: &TdGraph, s: NodeId, departure: f64) -> Vec<f64> {
    let mut arrival = vec![f64::INFINITY; g.num_nodes()];
    let mut heap = BinaryHeap::new();
    arrival[s.index()] = departure;
    heap.push(Reverse((Arrival(departure), s.0)));
    while let Some(Reverse((Arrival(t), u))) = heap.pop() {
        if t > arrival[u as usize] {
            continue;
        }
        for e in g.out_edges(NodeId(u)) {
            let a = t + naive_eval(&e.ttf, t);
            if a < arrival[e.head.index()] {
                arrival[e.head.index()] = a;
                heap.push(Reverse((Arrival(a), e.head.0)));
            }
        }
    }
    arrival.iter().map(|a| a - departure).collect()
}

/// Checks a sweep against the profile search on the input graph at every
/// breakpoint of both functions plus 200 random departures, and against
/// plain earliest-arrival Dijkstra at a few departures.
fn check_against_oracles(g: &TdGraph, r: &SweepResult, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let oracle = one_to_all_profile(g, r.source, Restriction::AllEdges);
    for (v, label) in oracle.labels.iter().enumerate() {
        let got = r.profile(NodeId(v as u32));
        match (label.ttf(), got) {
            (None, Profile::Unreached) => {}
            (Some(want), Profile::Reached(f)) => {
                let random: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..PERIOD)).collect();
                let times = want
                    .points()
                    .iter()
                    .chain(f.points())
                    .map(|p| p.at)
                    .chain(random);
                for t in times {
                    let (a, b) = (naive_eval(want, t), naive_eval(f, t));
                    ensure((a - b).abs() <= 1e-6, || {
                        format!(
                            "source {} node {} tau {t}: oracle {a}, sweep {b}",
                            r.source,
                            v + 1
                        )
                    })?;
                }
            }
            (want, got) => {
                return Err(format!(
                    "source {} node {}: reachability differs (oracle {}, sweep {got:?})",
                    r.source,
                    v + 1,
                    want.is_some()
                ))
            }
        }
    }
    for _ in 0..3 {
        let tau = rng.gen_range(0.0..PERIOD);
        for (v, d) in earliest_arrival(g, r.source, tau).into_iter().enumerate() {
            let got = r
                .profile(NodeId(v as u32))
                .ttf()
                .map_or(f64::INFINITY, |f| naive_eval(f, tau));
            let same = (d.is_infinite() && got.is_infinite()) || (d - got).abs() <= 1e-6;
            ensure(same, || {
                format!(
                    "source {} node {} tau {tau}: dijkstra {d}, sweep {got}",
                    r.source,
                    v + 1
                )
            })?;
        }
    }
    Ok(())
}

fn same_bits(a: &Profile, b: &Profile) -> bool {
    match (a, b) {
        (Profile::Reached(f), Profile::Reached(g)) => {
            f.points().len() == g.points().len()
                && f.points().iter().zip(g.points()).all(|(p, q)| {
                    p.at.to_bits() == q.at.to_bits() && p.val.to_bits() == q.val.to_bits()
                })
        }
        _ => a == b,
    }
}

/// Random FIFO function: values drawn freely, then raised until no segment
/// (including the wrap-around) falls faster than `max_drop`.
fn random_fifo(rng: &mut ChaCha8Rng, max_points: usize) -> Ttf {
    let k = rng.gen_range(1..=max_points);
    let mut times: Vec<f64> = (0..k).map(|_| rng.gen_range(0..86_400) as f64).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let n = times.len();
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(10.0..4000.0)).collect();
    let max_drop = [0.5, 0.9, 1.0][rng.gen_range(0..3)];
    for _ in 0..2 {
        for i in 0..n {
            let j = (i + 1) % n;
            let dt = if j == 0 {
                times[0] + PERIOD - times[n - 1]
            } else {
                times[j] - times[i]
            };
            v[j] = v[j].max(v[i] - max_drop * dt);
        }
    }
    Ttf::new(
        times
            .iter()
            .zip(&v)
            .map(|(&t, &w)| Point::new(t, w))
            .collect(),
        PERIOD,
    )
    .unwrap()
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_oracle_equivalence() {
    criterion(1, "oracle equivalence", Duration::from_secs(300), || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut profiles = 0;
        for seed in 0..50 {
            let g = mixed_graph(seed);
            let t = build_tch(&g, &OrderParams::default());
            let sweeper = Sweeper::new(&t, eps(0.001)).unwrap();
            for _ in 0..5 {
                let s = NodeId(rng.gen_range(0..g.num_nodes() as u32));
                let r = sweeper.run(s).unwrap();
                check_against_oracles(&g, &r, &mut rng)
                    .map_err(|e| format!("graph {seed}: {e}"))?;
                profiles += r.profiles.len();
            }
        }
        Ok(format!(
            "50 graphs x 5 sources, {profiles} profiles within 1e-6 s"
        ))
    });
}

#[test]
fn criterion_2_pruning_neutrality() {
    criterion(2, "pruning neutrality", Duration::from_secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pruned_edges = 0;
        for seed in 100..120 {
            let g = mixed_graph(seed);
            let t = build_tch(&g, &OrderParams::default());
            for _ in 0..2 {
                let s = NodeId(rng.gen_range(0..g.num_nodes() as u32));
                let plain = run(
                    &t,
                    s,
                    SweepOptions {
                        pruning: false,
                        ..Default::default()
                    },
                )
                .unwrap();
                for e in [0.1, 0.01, 0.001, 0.0001] {
                    let pruned = run(&t, s, eps(e)).unwrap();
                    pruned_edges += pruned.stats.pruned_p2 + pruned.stats.pruned_p3;
                    for (v, (a, b)) in plain.profiles.iter().zip(&pruned.profiles).enumerate() {
                        ensure(same_bits(a, b), || {
                            format!(
                                "graph {seed} source {s} eps {e} node {}: breakpoints differ",
                                v + 1
                            )
                        })?;
                    }
                }
            }
        }
        ensure(pruned_edges > 0, || "no edge was ever pruned".into())?;
        Ok(format!(
            "20 graphs, 4 epsilons, bitwise equal; {pruned_edges} pruned edge scans"
        ))
    });
}

#[test]
fn criterion_3_pruning_effectiveness() {
    criterion(
        3,
        "pruning effectiveness trend",
        Duration::from_secs(300),
        || {
            let g = generate_synthetic(&SynthParams::grid(100, 100, 42)).unwrap();
            let t = build_tch(&g, &OrderParams::default());
            let sources = [NodeId(0), NodeId(5050), NodeId(9999)];
            let total = |opt: SweepOptions| {
                let sweeper = Sweeper::new(&t, opt).unwrap();
                sources.iter().fold((0u64, 0u64), |(l, b), &s| {
                    let st = sweeper.run(s).unwrap().stats;
                    (l + st.links_exact, b + st.breakpoints_processed)
                })
            };
            let off = total(SweepOptions {
                pruning: false,
                ..Default::default()
            });
            let ten = total(eps(0.1));
            let tenth = total(eps(0.001));
            let detail = format!(
                "links off/10%/0.1% = {}/{}/{}, breakpoints = {}/{}/{}",
                off.0, ten.0, tenth.0, off.1, ten.1, tenth.1
            );
            ensure(tenth.0 < ten.0 && tenth.0 < off.0, || {
                format!("link trend broken: {detail}")
            })?;
            ensure(tenth.1 < ten.1 && tenth.1 < off.1, || {
                format!("breakpoint trend broken: {detail}")
            })?;
            Ok(detail)
        },
    );
}

#[test]
fn criterion_4_kernel_properties() {
    criterion(4, "ttf kernel properties", Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..1000).map(|_| rng.gen_range(0.0..PERIOD)).collect()
        };
        for case in 0..1000 {
            let (f, g, h) = (
                random_fifo(&mut rng, 12),
                random_fifo(&mut rng, 12),
                random_fifo(&mut rng, 8),
            );
            let fg = f.link(&g).unwrap();
            let m = f.merge_min(&g).unwrap();
            ensure(fg.validate_fifo() && m.validate_fifo(), || {
                format!("case {case}: FIFO not closed")
            })?;
            let bound = 2 * (f.len() + g.len()) + 2;
            ensure(fg.len() <= bound && m.len() <= bound, || {
                format!(
                    "case {case}: sizes {} and {} exceed {bound}",
                    fg.len(),
                    m.len()
                )
            })?;
            let left = fg.link(&h).unwrap();
            let right = f.link(&g.link(&h).unwrap()).unwrap();
            for tau in samples(&mut rng) {
                let ft = naive_eval(&f, tau);
                let want = naive_eval(&g, (tau + ft).rem_euclid(PERIOD)) + ft;
                let got = fg.evaluate(tau);
                ensure((got - want).abs() <= 1e-6 * (1.0 + got.abs()), || {
                    format!("case {case}: link at {tau} is {got}, composition {want}")
                })?;
                let lo = naive_eval(&f, tau).min(naive_eval(&g, tau));
                ensure((m.evaluate(tau) - lo).abs() <= 1e-6 * (1.0 + lo), || {
                    format!(
                        "case {case}: min at {tau} is {}, want {lo}",
                        m.evaluate(tau)
                    )
                })?;
                ensure(
                    rel_close(left.evaluate(tau), right.evaluate(tau), 1e-6),
                    || format!("case {case}: link not associative at {tau}"),
                )?;
            }
            let e = [0.1, 0.01, 0.001][case % 3];
            let approx = random_fifo(&mut rng, 40);
            let lower = approx.approximate(Epsilon::new(e).unwrap(), ApproxMode::Lower);
            let upper = approx.approximate(Epsilon::new(e).unwrap(), ApproxMode::Upper);
            let both = approx.approximate(Epsilon::new(e).unwrap(), ApproxMode::TwoSided);
            for tau in samples(&mut rng) {
                let v = naive_eval(&approx, tau);
                let (l, u, b) = (lower.evaluate(tau), upper.evaluate(tau), both.evaluate(tau));
                let slack = 1e-9;
                ensure((1.0 - e) * v - slack <= l && l <= v + slack, || {
                    format!("case {case}: lower band")
                })?;
                ensure(v - slack <= u && u <= (1.0 + e) * v + slack, || {
                    format!("case {case}: upper band")
                })?;
                ensure(
                    (1.0 - e) * v - slack <= b && b <= (1.0 + e) * v + slack,
                    || format!("case {case}: band"),
                )?;
            }
        }
        Ok("1000 seeded cases x 1000 samples".into())
    });
}

#[test]
fn criterion_5_core_consistency() {
    criterion(5, "core consistency", Duration::from_secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 200..220 {
            let g = mixed_graph(seed);
            let t = build_tch(&g, &OrderParams::default());
            let n = t.num_nodes();
            // the most important node, the least important one, and a random one
            let picks = [0, n - 1, rng.gen_range(0..n)].map(|i| t.original_id(NodeId(i as u32)));
            for s in picks {
                let full = run(&t, s, SweepOptions::default()).unwrap();
                for k in [10, 50, n] {
                    let core = run(
                        &t,
                        s,
                        SweepOptions {
                            core_k: Some(k),
                            ..Default::default()
                        },
                    )
                    .unwrap();
                    for v in (0..n as u32).map(NodeId) {
                        let inside = t.internal_id(v).index() < k;
                        let ok = if inside {
                            same_bits(core.profile(v), full.profile(v))
                        } else {
                            core.profile(v) == &Profile::NotComputed
                        };
                        ensure(ok, || {
                            format!("graph {seed} source {s} k {k} node {v} (core: {inside})")
                        })?;
                    }
                }
            }
        }
        Ok("20 graphs, k in {10, 50, n}, sources inside and outside the core".into())
    });
}

#[test]
fn criterion_6_parallel_determinism() {
    criterion(6, "parallel determinism", Duration::from_secs(120), || {
        let mut levels = 0;
        for seed in 300..310 {
            let g = mixed_graph(seed);
            let t = build_tch(&g, &OrderParams::default());
            levels = levels.max(t.max_level());
            let s = NodeId(seed as u32 % g.num_nodes() as u32);
            let dumps: Vec<String> = [1, 2, 4, 8]
                .iter()
                .map(|&workers| {
                    run(
                        &t,
                        s,
                        SweepOptions {
                            workers,
                            ..Default::default()
                        },
                    )
                    .unwrap()
                    .dump()
                })
                .collect();
            for (w, d) in [2, 4, 8].iter().zip(&dumps[1..]) {
                ensure(d.as_bytes() == dumps[0].as_bytes(), || {
                    format!("graph {seed}: {w} workers differ")
                })?;
            }
        }
        Ok(format!(
            "10 graphs, workers 1/2/4/8 byte-identical, up to {levels} levels"
        ))
    });
}

#[test]
fn criterion_7_format_round_trips() {
    criterion(7, "format round-trips", Duration::from_secs(60), || {
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = if seed.is_multiple_of(2) {
                SynthParams::grid(rng.gen_range(1..10), rng.gen_range(1..10), seed)
            } else {
                let n = rng.gen_range(5..80);
                SynthParams::random_geometric(n, 2 * n, seed)
            };
            let g = generate_synthetic(&SynthParams { td_share: 0.3, ..p }).unwrap();
            let text = write_tdgr(&g);
            let back = parse_tdgr(text.as_bytes()).map_err(|e| format!("instance {seed}: {e}"))?;
            ensure(back == g && write_tdgr(&back) == text, || {
                format!("instance {seed}: tdgr round trip")
            })?;
            let t = build_tch(&g, &OrderParams::default());
            let text = serialize_tch(&t);
            let back = parse_tch(text.as_bytes()).map_err(|e| format!("instance {seed}: {e}"))?;
            ensure(back == t && serialize_tch(&back) == text, || {
                format!("instance {seed}: tch round trip")
            })?;
        }

        let graph_golden = "p tdgr 2 2 86400\na 1 2 1 0 100\na 2 1 3 0 50 28800 80.5 61200 50\n";
        let g = parse_tdgr(graph_golden.as_bytes()).unwrap();
        ensure(write_tdgr(&g) == graph_golden, || {
            "tdgr golden not byte-stable".into()
        })?;
        let tch_golden =
            "p tch 2 2 86400\no 1 2\no 2 1\nl 1 0\nl 2 1\na 1 2 -1 1 0 100\na 2 1 -1 1 0 50\n";
        let t = parse_tch(tch_golden.as_bytes()).unwrap();
        ensure(serialize_tch(&t) == tch_golden, || {
            "tch golden not byte-stable".into()
        })?;
        let single = generate_synthetic(&SynthParams::grid(1, 1, 0)).unwrap();
        ensure(write_tdgr(&single) == "p tdgr 1 0 86400\n", || {
            "one-node tdgr golden".into()
        })?;
        let single = serialize_tch(&build_tch(&single, &OrderParams::default()));
        ensure(single == "p tch 1 0 86400\no 1 1\nl 1 0\n", || {
            format!("one-node tch golden: {single:?}")
        })?;
        Ok("100 instances, 4 golden files".into())
    });
}

#[test]
fn criterion_8_fault_detection() {
    criterion(8, "fault detection", Duration::from_secs(10), || {
        let dir = tempfile::tempdir().unwrap();
        let graph = dir.path().join("g.tdgr");
        let tch = dir.path().join("g.tch");
        let broken = dir.path().join("broken.tch");
        let bin = env!("CARGO_BIN_EXE_tdsweep");
        let g = generate_synthetic(&SynthParams::grid(6, 6, 8)).unwrap();
        std::fs::write(&graph, write_tdgr(&g)).unwrap();
        let prep = Command::new(bin)
            .arg("prep")
            .arg(&graph)
            .arg("-o")
            .arg(&tch)
            .output()
            .unwrap();
        ensure(prep.status.success(), || format!("prep failed: {prep:?}"))?;

        // Perturb an input edge whose function is exactly the best profile
        // between its endpoints, so the change must show up from its tail.
        let text = std::fs::read_to_string(&tch).unwrap();
        let t = parse_tch(text.as_bytes()).unwrap();
        let tight = |line: &str| -> bool {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f[0] != "a" || f[3] != "-1" {
                return false;
            }
            let [u, v] = [f[1], f[2]]
                .map(|x| t.original_id(NodeId::from_one_based(x.parse().unwrap()).unwrap()));
            let edge = g.out_edges(u).iter().find(|e| e.head == v).unwrap();
            let best = one_to_all_profile(&g, u, Restriction::AllEdges);
            let best = best.label(v).ttf().unwrap();
            edge.ttf
                .points()
                .iter()
                .all(|p| (best.evaluate(p.at) - p.val).abs() < 1e-9)
        };
        let target = text.lines().position(tight).ok_or("no tight edge found")?;
        let perturbed: Vec<String> = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                if i != target {
                    return line.to_string();
                }
                let mut f: Vec<String> = line.split_whitespace().map(String::from).collect();
                for w in (6..f.len()).step_by(2) {
                    f[w] = (f[w].parse::<f64>().unwrap() + 10.0).to_string();
                }
                f.join(" ")
            })
            .collect();
        std::fs::write(&broken, perturbed.join("\n") + "\n").unwrap();

        let verify = |path: &std::path::Path| {
            Command::new(bin)
                .args(["verify"])
                .arg(&graph)
                .arg(path)
                .args(["--sources", "36"])
                .output()
                .unwrap()
        };
        let good = verify(&tch);
        ensure(good.status.code() == Some(0), || {
            format!("intact hierarchy rejected: {good:?}")
        })?;
        let bad = verify(&broken);
        let stdout = String::from_utf8_lossy(&bad.stdout);
        ensure(bad.status.code() == Some(1), || {
            format!("perturbed hierarchy accepted: {bad:?}")
        })?;
        ensure(stdout.contains("FAIL") && stdout.contains("node"), || {
            format!("report lacks a node: {stdout}")
        })?;
        Ok(format!("perturbed line {}: {}", target + 1, stdout.trim()))
    });
}
