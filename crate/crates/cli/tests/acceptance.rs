//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.
//!
//! Reference values come from oracles written here, independent of the
//! library: brute-force enumeration for RBM likelihoods, a bitwise CRC-32,
//! a hand-written frame encoder and label counting for the metrics.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chainsentry::collab::{node_seed, train, write_history_csv_to};
use chainsentry::dataset::generate_synthetic;
use chainsentry::dbn::{exact_loglik_gradient, RbmLayer, SoftmaxHead};
use chainsentry::error::{Error, FrameError};
use chainsentry::eval::ConfusionMatrix;
use chainsentry::experiment::{run_benchmark, BenchmarkConfig, BenchmarkReport};
use chainsentry::transport::{decode_message, encode_message, RoundMessage};
use chainsentry::{
    ClassLabel, CollabConfig, Dataset, DbnModel, RoundRecord, Scheme, SynthConfig, TrainConfig,
    TransportKind,
};
use ndarray::{Array1, Array2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaussian(rng: &mut StdRng, sd: f64) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// ---------------------------------------------------------------------------
// Enumeration oracle for a 3x2 binary RBM.

const P: usize = 3;
const G: usize = 2;
const N_PARAMS: usize = P * G + P + G;

/// Parameters laid out as W (row-major), visible bias, hidden bias.
fn unnormalized_log(theta: &[f64], v: &[f64], h: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in 0..P {
        for g in 0..G {
            s += v[p] * theta[p * G + g] * h[g];
        }
        s += theta[P * G + p] * v[p];
    }
    for g in 0..G {
        s += theta[P * G + P + g] * h[g];
    }
    s
}

fn bits(index: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| ((index >> i) & 1) as f64).collect()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn oracle_loglik(theta: &[f64], batch: &[Vec<f64>]) -> f64 {
    let free = |v: &[f64]| {
        let terms: Vec<f64> = (0..1 << G).map(|j| unnormalized_log(theta, v, &bits(j, G))).collect();
        log_sum_exp(&terms)
    };
    let all: Vec<f64> = (0..1 << P).map(|i| free(&bits(i, P))).collect();
    let log_z = log_sum_exp(&all);
    batch.iter().map(|v| free(v)).sum::<f64>() / batch.len() as f64 - log_z
}

fn central_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], step: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[i] += step;
            down[i] -= step;
            (f(&up) - f(&down)) / (2.0 * step)
        })
        .collect()
}

struct RbmInstance {
    theta: Vec<f64>,
    batch: Vec<Vec<f64>>,
}

impl RbmInstance {
    fn random(rng: &mut StdRng) -> Self {
        let theta = (0..N_PARAMS).map(|_| gaussian(rng, 0.3)).collect();
        let rows = rng.random_range(1..=6);
        let batch = (0..rows).map(|_| bits(rng.random_range(0..1 << P), P)).collect();
        RbmInstance { theta, batch }
    }

    fn layer(&self) -> RbmLayer {
        RbmLayer {
            weights: Array2::from_shape_vec((P, G), self.theta[..P * G].to_vec()).unwrap(),
            visible_bias: Array1::from(self.theta[P * G..P * G + P].to_vec()),
            hidden_bias: Array1::from(self.theta[P * G + P..].to_vec()),
        }
    }

    fn batch_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.batch.len(), P), self.batch.concat()).unwrap()
    }

    fn library_gradient(&self) -> Vec<f64> {
        let g = exact_loglik_gradient(&self.layer(), self.batch_array().view()).unwrap();
        let mut flat: Vec<f64> = g.weights.iter().copied().collect();
        flat.extend(g.visible_bias.iter());
        flat.extend(g.hidden_bias.iter());
        flat
    }
}

fn rbm_instances() -> Vec<RbmInstance> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    (0..25).map(|_| RbmInstance::random(&mut rng)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle_head_loglik(weights: &[f64], h: usize, u: usize, xs: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (x, &label) in xs.iter().zip(labels) {
        let logits: Vec<f64> = (0..u)
            .map(|k| weights[h * u + k] + (0..h).map(|j| x[j] * weights[j * u + k]).sum::<f64>())
            .collect();
        total += logits[label] - log_sum_exp(&logits);
    }
    total / xs.len() as f64
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let step = 1e-5;
    let instances = rbm_instances();
    let mut worst_rbm = 0.0f64;
    for (i, inst) in instances.iter().enumerate() {
        let numeric = central_difference(|t| oracle_loglik(t, &inst.batch), &inst.theta, step);
        let err = max_abs_diff(&inst.library_gradient(), &numeric);
        ensure(err <= 1e-6, || format!("RBM instance {i}: max-abs gradient error {err:.3e}"))?;
        worst_rbm = worst_rbm.max(err);
    }

    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let mut worst_head = 0.0f64;
    for i in 0..25 {
        let (h, u) = (3, 4);
        let mut head = SoftmaxHead::zeros(h, u);
        head.weights.mapv_inplace(|_| gaussian(&mut rng, 0.3));
        head.bias.mapv_inplace(|_| gaussian(&mut rng, 0.3));
        let n = rng.random_range(1..=6);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..h).map(|_| rng.random::<f64>()).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..u)).collect();
        let mut theta: Vec<f64> = head.weights.iter().copied().collect();
        theta.extend(head.bias.iter());
        let numeric = central_difference(|t| oracle_head_loglik(t, h, u, &xs, &labels), &theta, step);
        let class_labels: Vec<ClassLabel> =
            labels.iter().map(|&l| ClassLabel::from_index(l, u).unwrap()).collect();
        let x_array = Array2::from_shape_vec((n, h), xs.concat()).unwrap();
        let g = head.gradient(x_array.view(), &class_labels).unwrap();
        let mut analytic: Vec<f64> = g.weights.iter().copied().collect();
        analytic.extend(g.bias.iter());
        let err = max_abs_diff(&analytic, &numeric);
        ensure(err <= 1e-6, || format!("head instance {i}: max-abs gradient error {err:.3e}"))?;
        worst_head = worst_head.max(err);
    }
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed < 10.0, || format!("took {elapsed:.1}s, limit 10s"))?;
    Ok(format!(
        "{} RBMs, worst {worst_rbm:.2e}; 25 heads, worst {worst_head:.2e}; {elapsed:.2}s",
        instances.len()
    ))
}

fn criterion_2() -> Outcome {
    let eps = 1e-3;
    let mut smallest = f64::INFINITY;
    for (i, inst) in rbm_instances().iter().enumerate() {
        let before = oracle_loglik(&inst.theta, &inst.batch);
        let g = inst.library_gradient();
        let stepped: Vec<f64> = inst.theta.iter().zip(&g).map(|(t, d)| t + eps * d).collect();
        let after = oracle_loglik(&stepped, &inst.batch);
        ensure(after > before, || format!("instance {i}: {before} -> {after}"))?;
        smallest = smallest.min(after - before);
    }
    Ok(format!("every instance improved, smallest gain {smallest:.3e}"))
}

// ---------------------------------------------------------------------------
// Trajectory comparisons.

type Trajectory = Vec<Vec<Vec<u64>>>;

fn small_config(nodes: usize, seed: u64, iterations: usize) -> CollabConfig {
    let train = TrainConfig {
        learning_rate: 0.05,
        cd_steps: 1,
        batch_size: 16,
        iterations,
        seed,
        hidden: vec![8, 4],
    };
    CollabConfig::new(train, nodes)
}

fn trajectory(scheme: Scheme, data: &[Dataset], config: &CollabConfig) -> Result<Trajectory, String> {
    let mut out = Vec::new();
    train(scheme, data, config, None, &mut |_, models: &[&DbnModel]| {
        out.push(
            models
                .iter()
                .map(|m| m.flatten().iter().map(|v| v.to_bits()).collect())
                .collect(),
        );
    })
    .map_err(|e| format!("{scheme} training failed: {e}"))?;
    Ok(out)
}

fn single_node_data(seed: u64) -> Dataset {
    generate_synthetic(&SynthConfig::uniform(1, &[120, 20, 20, 20], 6, seed))
        .unwrap()
        .remove(0)
}

fn first_divergence(a: &Trajectory, b: &Trajectory, b_model: usize) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x[0] != y[b_model])
        .or_else(|| (a.len() != b.len()).then_some(a.len().min(b.len())))
}

fn criterion_3() -> Outcome {
    let seed = 11;
    let data = vec![single_node_data(seed)];
    let config = small_config(1, seed, 50);
    let pclm = trajectory(Scheme::Pclm, &data, &config)?;
    let llm = trajectory(Scheme::Llm, &data, &config)?;
    let clm = trajectory(Scheme::Clm, &data, &config)?;
    ensure(pclm.len() == 50, || format!("{} iterations observed", pclm.len()))?;
    if let Some(i) = first_divergence(&pclm, &llm, 0) {
        return Err(format!("PCLM and LLM differ at iteration {}", i + 1));
    }
    if let Some(i) = first_divergence(&pclm, &clm, 0) {
        return Err(format!("PCLM and CLM differ at iteration {}", i + 1));
    }
    let moved = pclm.first() != pclm.last();
    ensure(moved, || "parameters never changed".into())?;
    Ok(format!("50 iterations, {} parameters, bitwise identical", pclm[0][0].len()))
}

fn criterion_4() -> Outcome {
    let seed = 11;
    let single = single_node_data(seed);
    let reference = trajectory(Scheme::Pclm, std::slice::from_ref(&single), &small_config(1, seed, 50))?;
    let mut config = small_config(3, seed, 50);
    config.node_seeds = Some(vec![node_seed(seed, 1); 3]);
    let three = trajectory(Scheme::Pclm, &vec![single; 3], &config)?;
    for node in 0..3 {
        if let Some(i) = first_divergence(&reference, &three, node) {
            return Err(format!("node {} differs from L=1 at round {}", node + 1, i + 1));
        }
    }
    Ok("3 nodes x 50 rounds equal the single-node trajectory".into())
}

// ---------------------------------------------------------------------------
// Benchmark, convergence and determinism.

const SEEDS: [u64; 3] = [7, 13, 42];

struct BenchmarkRun {
    reports: Vec<BenchmarkReport>,
    seconds: Vec<f64>,
}

fn run_benchmarks() -> Result<BenchmarkRun, String> {
    let mut reports = Vec::new();
    let mut seconds = Vec::new();
    for seed in SEEDS {
        let started = Instant::now();
        let report = run_benchmark(&BenchmarkConfig::heterogeneous(seed), &Scheme::ALL)
            .map_err(|e| format!("benchmark seed {seed}: {e}"))?;
        seconds.push(started.elapsed().as_secs_f64());
        reports.push(report);
    }
    Ok(BenchmarkRun { reports, seconds })
}

fn mean_points(run: &BenchmarkRun, scheme: Scheme) -> f64 {
    100.0 * run.reports.iter().map(|r| r.get(scheme).unwrap().mean_accuracy).sum::<f64>()
        / run.reports.len() as f64
}

fn criterion_5(run: &BenchmarkRun) -> Outcome {
    let pclm = mean_points(run, Scheme::Pclm);
    let clm = mean_points(run, Scheme::Clm);
    let llm = mean_points(run, Scheme::Llm);
    let per_seed: Vec<String> = run
        .reports
        .iter()
        .zip(&run.seconds)
        .map(|(r, s)| {
            format!(
                "seed {}: pclm {:.2} clm {:.2} llm {:.2} ({s:.0}s)",
                r.seed,
                100.0 * r.get(Scheme::Pclm).unwrap().mean_accuracy,
                100.0 * r.get(Scheme::Clm).unwrap().mean_accuracy,
                100.0 * r.get(Scheme::Llm).unwrap().mean_accuracy,
            )
        })
        .collect();
    let summary = format!(
        "mean pclm {pclm:.3} clm {clm:.3} llm {llm:.3} [{}]",
        per_seed.join("; ")
    );
    let slowest = run.seconds.iter().copied().fold(0.0, f64::max);
    let mut failures = Vec::new();
    if clm < pclm {
        failures.push(format!("CLM < PCLM by {:.3} points", pclm - clm));
    }
    if (clm - pclm).abs() > 1.5 {
        failures.push(format!("|CLM - PCLM| = {:.3} > 1.5", (clm - pclm).abs()));
    }
    if pclm - llm < 3.0 {
        failures.push(format!("PCLM - LLM = {:.3} < 3", pclm - llm));
    }
    if slowest >= 300.0 {
        failures.push(format!("slowest seed took {slowest:.0}s"));
    }
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join(", ")))
    }
}

fn history_bits(history: &[RoundRecord]) -> Vec<u64> {
    let mut out = Vec::new();
    for r in history {
        out.push(u64::from(r.iteration));
        out.extend(r.nodes.iter().map(|&n| u64::from(n)));
        out.extend(r.losses.iter().map(|v| v.to_bits()));
        if let Some(acc) = &r.accuracy {
            out.extend(acc.iter().map(|v| v.to_bits()));
        }
    }
    out
}

fn criterion_6(run: &BenchmarkRun) -> Outcome {
    let budget = BenchmarkConfig::ITERATIONS as u32;
    let tail_from = budget - budget / 10;
    let mut notes = Vec::new();
    for report in &run.reports {
        let history = &report.get(Scheme::Pclm).unwrap().history;
        ensure(history.last().map(|r| r.iteration) == Some(budget), || {
            format!("seed {}: history does not reach the budget", report.seed)
        })?;
        let final_acc = 100.0 * history.last().unwrap().mean_accuracy().ok_or("no final evaluation")?;
        let worst = history
            .iter()
            .filter(|r| r.iteration >= tail_from)
            .filter_map(RoundRecord::mean_accuracy)
            .map(|a| (100.0 * a - final_acc).abs())
            .fold(0.0, f64::max);
        ensure(worst <= 0.5, || {
            format!(
                "seed {}: accuracy strays {worst:.3} points from its final value after iteration {tail_from}",
                report.seed
            )
        })?;
        notes.push(format!("seed {} {worst:.2}", report.seed));

        let mut csv = Vec::new();
        write_history_csv_to(Scheme::Pclm, history, &mut csv).map_err(|e| e.to_string())?;
        let text = String::from_utf8(csv).unwrap();
        let iterations: Vec<u32> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        ensure(iterations.windows(2).all(|w| w[0] <= w[1]), || {
            format!("seed {}: CSV iterations not monotone", report.seed)
        })?;
        ensure(iterations.len() == 3 * budget as usize, || {
            format!("seed {}: CSV has {} rows", report.seed, iterations.len())
        })?;
    }

    let seed = SEEDS[0];
    let again = run_benchmark(&BenchmarkConfig::heterogeneous(seed), &[Scheme::Pclm])
        .map_err(|e| format!("re-run of seed {seed}: {e}"))?;
    let first = &run.reports[0].get(Scheme::Pclm).unwrap().history;
    let second = &again.get(Scheme::Pclm).unwrap().history;
    ensure(history_bits(first) == history_bits(second), || {
        format!("re-running seed {seed} changed the history")
    })?;
    Ok(format!(
        "max deviation over last {} iterations: {}; CSV monotone; seed {seed} re-run bitwise equal",
        budget / 10,
        notes.join(", ")
    ))
}

// ---------------------------------------------------------------------------
// Metrics oracle.

fn criterion_7() -> Outcome {
    let counts = [[40u64, 10], [5, 45]];
    let cm = ConfusionMatrix::from_counts(counts.iter().map(|r| r.to_vec()).collect())
        .map_err(|e| e.to_string())?;
    let m = cm.metrics().map_err(|e| e.to_string())?;

    let mut pairs = Vec::new();
    for (t, row) in counts.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            pairs.extend(std::iter::repeat_n((t, p), n as usize));
        }
    }
    let n = pairs.len() as f64;
    let mut acc = 0.0;
    let mut precision = 0.0;
    let mut recall = 0.0;
    for class in 0..2 {
        let tp = pairs.iter().filter(|&&(t, p)| t == class && p == class).count() as f64;
        let tn = pairs.iter().filter(|&&(t, p)| t != class && p != class).count() as f64;
        let predicted = pairs.iter().filter(|&&(_, p)| p == class).count() as f64;
        let actual = pairs.iter().filter(|&&(t, _)| t == class).count() as f64;
        acc += (tp + tn) / n;
        precision += tp / predicted;
        recall += tp / actual;
    }
    let (acc, precision, recall) = (acc / 2.0, precision / 2.0, recall / 2.0);

    let checks = [
        ("accuracy vs 0.85", m.accuracy, 0.85),
        ("accuracy vs counting", m.accuracy, acc),
        ("macro precision vs (40/45 + 45/55)/2", m.macro_precision, (40.0 / 45.0 + 45.0 / 55.0) / 2.0),
        ("macro precision vs counting", m.macro_precision, precision),
        ("macro recall vs counting", m.macro_recall, recall),
    ];
    for (what, got, want) in checks {
        ensure((got - want).abs() <= 1e-12, || format!("{what}: {got} != {want}"))?;
    }
    ensure((m.macro_precision - 0.8535).abs() < 5e-5, || {
        format!("macro precision {} is not about 0.8535", m.macro_precision)
    })?;
    Ok(format!(
        "accuracy {}, macro precision {:.6}, macro recall {:.6}",
        m.accuracy, m.macro_precision, m.macro_recall
    ))
}

// ---------------------------------------------------------------------------
// Transport.

fn reference_crc32(bytes: &[u8]) -> u32 {
    let mut crc = 0xffff_ffffu32;
    for &b in bytes {
        crc ^= u32::from(b);
        for _ in 0..8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ 0xedb8_8320 } else { crc >> 1 };
        }
    }
    !crc
}

fn reference_frame(msg: &RoundMessage) -> Vec<u8> {
    let mut out = b"BNCD".to_vec();
    out.push(1);
    out.push(1);
    out.extend(msg.round.to_le_bytes());
    out.extend(msg.node_id.to_le_bytes());
    out.extend((msg.gradient.len() as u32).to_le_bytes());
    for v in &msg.gradient {
        out.extend(v.to_le_bytes());
    }
    let crc = reference_crc32(&out);
    out.extend(crc.to_le_bytes());
    out
}

fn random_finite(rng: &mut StdRng) -> f64 {
    match rng.random_range(0..4) {
        0 => gaussian(rng, 1.0),
        1 => [0.0, -0.0, f64::MIN_POSITIVE / 4.0, f64::MAX, f64::MIN][rng.random_range(0..5)],
        _ => loop {
            let v = f64::from_bits(rng.random());
            if v.is_finite() {
                break v;
            }
        },
    }
}

fn random_message(rng: &mut StdRng, max_len: usize) -> RoundMessage {
    let len = rng.random_range(0..=max_len);
    RoundMessage {
        round: rng.random_range(1..=u32::MAX),
        node_id: rng.random(),
        gradient: (0..len).map(|_| random_finite(rng)).collect(),
    }
}

fn same_message(a: &RoundMessage, b: &RoundMessage) -> bool {
    a.round == b.round
        && a.node_id == b.node_id
        && a.gradient.len() == b.gradient.len()
        && a.gradient.iter().zip(&b.gradient).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn socket_equivalence() -> Result<String, String> {
    let seed = 23;
    let data = generate_synthetic(&SynthConfig::uniform(3, &[120, 20, 20, 20], 6, seed)).unwrap();
    let config = small_config(3, seed, 200);
    let inproc = trajectory(Scheme::Pclm, &data, &config)?;
    let mut socket_config = config.clone();
    socket_config.transport = TransportKind::Socket;
    let socket = trajectory(Scheme::Pclm, &data, &socket_config)?;
    ensure(inproc == socket, || "socket and in-process trajectories differ".into())?;
    Ok("3-node PCLM, 200 rounds identical over loopback TCP".into())
}

fn criterion_8() -> Outcome {
    let socket = socket_equivalence()?;

    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    for i in 0..10_000 {
        let msg = random_message(&mut rng, 64);
        let bytes = encode_message(&msg).map_err(|e| format!("frame {i}: {e}"))?;
        ensure(bytes == reference_frame(&msg), || format!("frame {i}: bytes differ from reference encoder"))?;
        let back = decode_message(&bytes).map_err(|e| format!("frame {i}: {e}"))?;
        ensure(same_message(&msg, &back), || format!("frame {i}: round trip changed the message"))?;
    }

    let mut flips = 0usize;
    let mut by_crc = 0usize;
    for f in 0..100 {
        let msg = random_message(&mut rng, 24);
        let frame = encode_message(&msg).unwrap();
        let count = msg.gradient.len() as u32;
        for bit in 0..frame.len() * 8 {
            let mut bad = frame.clone();
            bad[bit / 8] ^= 1 << (bit % 8);
            flips += 1;
            let err = match decode_message(&bad) {
                Ok(_) => return Err(format!("frame {f}: flip of bit {bit} accepted")),
                Err(e) => e,
            };
            let byte = bit / 8;
            let declared = u32::from_le_bytes(bad[12..16].try_into().unwrap());
            let (crc_body, crc_tail) = bad.split_at(bad.len() - 4);
            let crc_mismatch = reference_crc32(crc_body) != u32::from_le_bytes(crc_tail.try_into().unwrap());
            ensure(crc_mismatch, || format!("frame {f}: bit {bit} escapes the checksum"))?;
            let ok = match err {
                Error::Frame(FrameError::ForeignProtocol(_)) => byte < 4,
                Error::Frame(FrameError::IncompleteFrame { .. }) => (12..16).contains(&byte) && declared > count,
                Error::Frame(FrameError::CorruptFrame { .. }) => {
                    by_crc += 1;
                    byte >= 4 && !((12..16).contains(&byte) && declared > count)
                }
                _ => false,
            };
            ensure(ok, || format!("frame {f}: bit {bit} rejected as {err}"))?;
        }
    }
    Ok(format!(
        "{socket}; 10000 frames round-trip; {flips} single-bit flips rejected ({by_crc} by CRC, rest by magic or declared length)"
    ))
}

// ---------------------------------------------------------------------------
// Streaming detector through the command-line binary.

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_chainsentry"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("`chainsentry {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn numbers(v: &Value) -> Vec<f64> {
    match v {
        Value::Number(n) => vec![n.as_f64().unwrap()],
        Value::Array(items) => items.iter().flat_map(numbers).collect(),
        Value::Object(map) => map.values().flat_map(numbers).collect(),
        _ => Vec::new(),
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (data, run) = (p("data"), p("run"));
    cli(&["gen", "--nodes", "3", "--per-class", "12000,1200,1200,1200", "--features", "10", "--seed", "9", "--out", &data])?;
    cli(&[
        "train", "--data", &data, "--scheme", "pclm", "--epochs", "400", "--lr", "0.1", "--arch", "16",
        "--seed", "9", "--eval-every", "100", "--out", &run,
    ])?;
    let model = format!("{run}/model_node1.bndm");
    let scaler = format!("{run}/scaler.json");
    let input = format!("{data}/node1.csv");
    let report = p("report.json");
    let summary = p("summary.json");
    cli(&["eval", "--model", &model, "--data", &input, "--scaler", &scaler, "--out", &report])?;
    cli(&[
        "detect", "--model", &model, "--input", &input, "--scaler", &scaler, "--alerts", &p("alerts.jsonl"),
        "--summary", &summary,
    ])?;

    let report = read_json(Path::new(&report))?;
    let summary = read_json(Path::new(&summary))?;
    let metrics = &summary["metrics"];
    ensure(metrics.is_object(), || "detect summary has no metrics".into())?;
    for key in ["accuracy", "accuracy_plain", "macro_precision", "macro_recall", "per_class", "confusion"] {
        let (a, b) = (numbers(&report[key]), numbers(&metrics[key]));
        ensure(!a.is_empty() && a.len() == b.len(), || format!("{key}: shapes differ"))?;
        let diff = max_abs_diff(&a, &b);
        ensure(diff <= 1e-12, || format!("{key}: detect and eval differ by {diff:e}"))?;
    }
    let records = summary["records"].as_u64().unwrap_or(0);
    ensure(records == 15_600, || format!("detector saw {records} records"))?;
    let rate = summary["records_per_sec"].as_f64().unwrap_or(0.0);
    let throughput = if rate >= 1e4 {
        format!("{rate:.0} records/s")
    } else {
        format!("{rate:.0} records/s, below the soft 10^4 target")
    };
    Ok(format!(
        "{records} records, metrics equal eval (accuracy {:.4}); {throughput}",
        report["accuracy"].as_f64().unwrap_or(f64::NAN)
    ))
}

fn main() {
    // libtest flags such as --nocapture or a filter are accepted and ignored.
    let mut results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
    ];
    match run_benchmarks() {
        Ok(run) => {
            results.push((5, criterion_5(&run)));
            results.push((6, criterion_6(&run)));
        }
        Err(e) => {
            results.push((5, Err(e.clone())));
            results.push((6, Err(e)));
        }
    }
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));

    println!();
    let mut failed = 0;
    for (n, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL  {why}");
            }
        }
    }
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
