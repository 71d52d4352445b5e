//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the verdict lines always reach the output.
//! Training runs use the shipped presets and are shared between criteria.

use std::path::PathBuf;
use std::time::Instant;

use deepmod_cli::config::ExperimentConfig;
use deepmod_core::autodiff::{
    binary_cross_entropy_batch, finite_difference_check, softmax_cross_entropy, GradCheckConfig,
    ParamSet, Tape, Tensor,
};
use deepmod_core::channel::{default_plc_taps, fir_filter, Channel, ChannelConfig, ChannelKind};
use deepmod_core::checkpoint::{verify_round_trip, NodeCheckpoint};
use deepmod_core::graphs::{
    bits_per_sample, waveforms_to_features, ArchConfig, ClassMessage, CriticNet, DecoderNet,
    EncoderNet, Network, Waveform,
};
use deepmod_core::metrics::{
    convergence_epoch, convexity_score, median, median_with_missing, roughness, CerCurve, MetricsLog,
};
use deepmod_core::protocol::{
    crit_objective, evaluate_cer, run_direction_pass, rx_objective, train_link, tx_objective,
    Direction, Leg, LinkSession, Node, Transcript, TrainingConfig,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const TRAIN_SNR_GRID: [f64; 6] = [0.0, 5.0, 10.0, 15.0, 20.0, 30.0];
const STUDY_TEST_SNR: f64 = 10.0;
const TRIALS: usize = 10_000;
const EVAL_SEED: u64 = 1000;
/// Tensors up to this size are checked in full; larger ones (embedding table, decoder output
/// layer) at this many sampled coordinates.
const GRAD_COORDS_PER_TENSOR: usize = 512;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn preset(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{name}.toml"));
    ExperimentConfig::load(&path, &[]).expect("preset parses")
}

struct Run {
    session: LinkSession,
    log: MetricsLog,
}

impl Run {
    fn c90(&self) -> Option<f64> {
        convergence_epoch(&self.log, 0.9).unwrap().map(|e| e as f64)
    }

    /// Jaggedness over the second half, after the initial climb.
    fn roughness(&self) -> f64 {
        let trace: Vec<f64> = self.log.success_trace(None).into_iter().map(|p| p.1).collect();
        roughness(&trace[trace.len() / 2..])
    }

    fn cer(&self, tcfg: &TrainingConfig, test_snr_db: f64) -> deepmod_core::metrics::CerEstimate {
        evaluate_cer(
            &self.session.node_a,
            &self.session.node_b,
            &tcfg.channel_fwd,
            &tcfg.channel_rev,
            test_snr_db,
            TRIALS,
            EVAL_SEED,
        )
        .unwrap()
        .pooled()
    }
}

fn train(cfg: &ExperimentConfig, seed: u64, snr: f64) -> Run {
    let tcfg = cfg.training_config(seed, snr);
    assert!(tcfg.early_stop_threshold.is_none(), "acceptance runs train the full budget");
    let out = train_link(&tcfg, None).expect("training");
    Run {
        session: out.session,
        log: out.log,
    }
}

// ---- criterion 1 ------------------------------------------------------------------------

fn classes(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Vec<ClassMessage> {
    (0..b)
        .map(|_| ClassMessage::new(rng.random_range(0..n), n).unwrap())
        .collect()
}

fn waves(rng: &mut ChaCha8Rng, s: usize, b: usize) -> Vec<Waveform> {
    (0..b)
        .map(|_| {
            Waveform::new(
                (0..s)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect(),
            )
        })
        .collect()
}

/// Smallest winner/runner-up gap over the decoder's pooling windows. Central differences
/// are only a valid oracle when no perturbation can flip a window's winner.
fn pool_margin(dec: &DecoderNet, rx: &[Waveform]) -> f64 {
    let arch = dec.arch();
    let mut tape = Tape::new();
    let v = dec.params().bind(&mut tape);
    let x = tape.leaf(waveforms_to_features(rx, arch.samples_per_class).unwrap());
    let h = tape.dense(x, v[0], v[1]).unwrap();
    let h = tape.tanh(h);
    let h = tape.dense(h, v[2], v[3]).unwrap();
    let h = tape.tanh(h);
    let h = tape.reshape(h, &[rx.len(), 1, arch.decoder_hidden2]).unwrap();
    let conv = tape.conv1d(h, v[4], v[5]).unwrap();
    let out = tape.value(conv);
    let (len, w) = (arch.conv_len(), arch.pool_window);
    let mut margin = f64::INFINITY;
    for row in out.values().chunks(len) {
        for win in row[..len / w * w].chunks(w) {
            let mut sorted = win.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            margin = margin.min(sorted[0] - sorted[1]);
        }
    }
    margin
}

fn grad_error(params: &ParamSet, grads: Vec<Tensor>, loss: impl FnMut(&ParamSet) -> deepmod_core::Result<f64>) -> f64 {
    let mut p = params.clone();
    p.set_grads(grads).unwrap();
    let cfg = GradCheckConfig {
        step: 1e-5,
        tolerance: 1e-4,
        max_coords_per_param: Some(GRAD_COORDS_PER_TENSOR),
        ..GradCheckConfig::default()
    };
    finite_difference_check(&p, loss, &cfg).unwrap().max_rel_error
}

fn criterion_1() -> Verdict {
    let started = Instant::now();
    let arch = ArchConfig::default();
    let batch = 4;
    let (mut rx_err, mut tx_err, mut crit_err) = (0f64, 0f64, 0f64);
    for point in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + point);

        let (dec, rx, known) = loop {
            let dec = DecoderNet::init(arch, &mut rng).unwrap();
            let rx = waves(&mut rng, arch.samples_per_class, batch);
            let known = classes(&mut rng, arch.num_classes, batch);
            if pool_margin(&dec, &rx) > 1e-3 {
                break (dec, rx, known);
            }
        };
        let (obj, _) = rx_objective(&dec, &rx, &known).unwrap();
        rx_err = rx_err.max(grad_error(dec.params(), obj.grads, |q| {
            Ok(rx_objective(&DecoderNet::from_params(arch, q.clone())?, &rx, &known)?.0.loss)
        }));

        let enc = EncoderNet::init(arch, &mut rng).unwrap();
        let critic = CriticNet::init(arch, &mut rng).unwrap();
        let sent = classes(&mut rng, arch.num_classes, batch);
        let obj = tx_objective(&enc, &critic, &sent).unwrap();
        tx_err = tx_err.max(grad_error(enc.params(), obj.grads, |q| {
            Ok(tx_objective(&EncoderNet::from_params(arch, q.clone())?, &critic, &sent)?.loss)
        }));

        let tx = waves(&mut rng, arch.samples_per_class, batch);
        let labels: Vec<bool> = (0..batch).map(|i| i % 2 == 0).collect();
        let (obj, _) = crit_objective(&critic, &tx, &sent, &labels).unwrap();
        crit_err = crit_err.max(grad_error(critic.params(), obj.grads, |q| {
            Ok(crit_objective(&CriticNet::from_params(arch, q.clone())?, &tx, &sent, &labels)?.0.loss)
        }));
    }
    let worst = rx_err.max(tx_err).max(crit_err);
    let secs = started.elapsed().as_secs_f64();
    check(
        worst < 1e-4 && secs < 60.0,
        format!(
            "max rel error at 10 points: L_RX {rx_err:.2e}, L_TX {tx_err:.2e}, L_CRIT {crit_err:.2e} (up to {GRAD_COORDS_PER_TENSOR} coordinates per tensor)"
        ),
    )
}

// ---- criterion 2 ------------------------------------------------------------------------

// 5.5452 and 0.6931 are the pinned reference values, checked alongside the exact constants.
#[allow(clippy::approx_constant)]
fn criterion_2() -> Verdict {
    let n = 256;
    let logits = Tensor::zeros(&[1, n]);
    let mut labels = Tensor::zeros(&[1, n]);
    labels.values_mut()[17] = 1.0;
    let (ce, _) = softmax_cross_entropy(&logits, &labels).unwrap();
    let (bce, _) = binary_cross_entropy_batch(&Tensor::zeros(&[1, 1]), &[true]).unwrap();
    let ok = (ce - 5.5452).abs() < 1e-4
        && (ce - (n as f64).ln()).abs() < 1e-6
        && (bce - 0.6931).abs() < 1e-4
        && (bce - 2f64.ln()).abs() < 1e-6;
    check(ok, format!("CE(uniform, N=256) = {ce:.7}, BCE(C=0.5) = {bce:.7}"))
}

// ---- criteria 3 and 4 -------------------------------------------------------------------

fn criterion_3(flat: &[Run], secs_per_seed: f64) -> Verdict {
    let c90: Vec<Option<f64>> = flat.iter().map(Run::c90).collect();
    let med = median_with_missing(&c90);
    let best: Vec<f64> = flat
        .iter()
        .map(|r| r.log.success_trace(None).iter().map(|p| p.1).fold(0.0, f64::max))
        .collect();
    check(
        med.is_some_and(|m| m < 200.0) && secs_per_seed < 600.0,
        format!(
            "epochs to sustained 90% per seed {:?}, median {:?}; peak success {:?}; {secs_per_seed:.1} s/seed",
            c90, med, best
        ),
    )
}

fn criterion_4(flat: &[Run], plc: &[Run]) -> Verdict {
    let to_epochs = |runs: &[Run]| -> Vec<Option<f64>> { runs.iter().map(Run::c90).collect() };
    let (cf, cp) = (to_epochs(flat), to_epochs(plc));
    // a run that never converges counts as slower than any that does
    let (mf, mp) = (median_with_missing(&cf), median_with_missing(&cp));
    let slower = match (mf, mp) {
        (Some(f), Some(p)) => p > f,
        (Some(_), None) => true,
        _ => false,
    };
    let rf: Vec<f64> = flat.iter().map(Run::roughness).collect();
    let rp: Vec<f64> = plc.iter().map(Run::roughness).collect();
    let (rmf, rmp) = (median(&rf), median(&rp));
    check(
        slower && rmp > rmf,
        format!(
            "median epochs to 90%: rf_flat {mf:?}, plc_selective {mp:?}; median second-half roughness: rf_flat {rmf:.2e}, plc_selective {rmp:.2e}"
        ),
    )
}

// ---- criterion 5 ------------------------------------------------------------------------

fn criterion_5(run: &Run, tcfg: &TrainingConfig) -> Verdict {
    let mut curve = CerCurve::new();
    for snr in [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0] {
        curve.insert(snr, run.cer(tcfg, snr));
    }
    let at = |s: f64| curve.at(s).unwrap().cer;
    let violations = curve.monotonicity_violations(2.0);
    let pts: Vec<String> = curve
        .points()
        .iter()
        .map(|p| format!("{}:{:.4}", p.test_snr_db, p.cer))
        .collect();
    check(
        violations.is_empty() && at(20.0) < 0.05 && at(-5.0) > at(10.0),
        format!("CER by test SNR [{}]; rises beyond 2 se: {violations:?}", pts.join(" ")),
    )
}

// ---- criterion 6 ------------------------------------------------------------------------

fn criterion_6(cfg: &ExperimentConfig, at_10db: &[Run]) -> Verdict {
    let mut points = Vec::new();
    for &snr in &TRAIN_SNR_GRID {
        let cers: Vec<f64> = SEEDS[..3]
            .iter()
            .map(|&seed| {
                let tcfg = cfg.training_config(seed, snr);
                if snr == 10.0 {
                    at_10db[seed as usize].cer(&tcfg, STUDY_TEST_SNR).cer
                } else {
                    train(cfg, seed, snr).cer(&tcfg, STUDY_TEST_SNR).cer
                }
            })
            .collect();
        points.push((snr, median(&cers)));
    }
    let report = convexity_score(&points).unwrap();
    let shown: Vec<String> = points.iter().map(|(t, c)| format!("{t}:{c:.4}")).collect();
    check(
        report.interior_minimum,
        format!(
            "median CER at test {STUDY_TEST_SNR} dB by train SNR [{}]; minimum at {} dB",
            shown.join(" "),
            report.argmin_train_snr_db
        ),
    )
}

// ---- criterion 7 ------------------------------------------------------------------------

fn node_bits(node: &Node) -> Vec<u64> {
    [node.encoder.params(), node.decoder.params(), node.critic.params()]
        .into_iter()
        .flat_map(|p| p.iter().flat_map(|e| e.value.values().iter().map(|v| v.to_bits())).collect::<Vec<_>>())
        .collect()
}

fn scramble(node: &mut Node) {
    for params in [node.encoder.params_mut(), node.decoder.params_mut(), node.critic.params_mut()] {
        for p in params.iter_mut() {
            for v in p.value.values_mut() {
                *v = 0.5 - *v;
            }
        }
    }
}

fn payloads(t: &Transcript, d: Direction, leg: Leg, epoch: usize) -> Vec<Waveform> {
    t.filter(d, leg, epoch).into_iter().map(|m| m.payload.clone()).collect()
}

fn criterion_7(trained: &Run) -> Verdict {
    let s = &trained.session;
    let epoch = s.next_epoch;
    let (a0, b0) = (s.node_a.clone(), s.node_b.clone());
    let mut tap = Transcript::new();
    let (mut a1, mut b1) = (a0.clone(), b0.clone());
    let (mut ch_ab, mut ch_ba) = (s.channel_ab.clone(), s.channel_ba.clone());
    run_direction_pass(&mut a1, &mut b1, &mut ch_ab, &mut ch_ba, epoch, Some(&mut tap)).unwrap();

    let fwd = payloads(&tap, Direction::AToB, Leg::Forward, epoch);
    let echo = payloads(&tap, Direction::BToA, Leg::Echo, epoch);

    // B's update from the samples it heard, while A's weights are scrambled
    let mut remote_a = a0.clone();
    scramble(&mut remote_a);
    let mut b_replay = b0.clone();
    let schedule = b_replay.schedule(epoch).permutation;
    b_replay.receiver_update(&fwd, &schedule).unwrap();
    let b_same = node_bits(&b_replay) == node_bits(&b1);

    // A's update from the echo it heard, while B's weights are scrambled
    let mut remote_b = b0.clone();
    scramble(&mut remote_b);
    let mut a_replay = a0.clone();
    let stored = a_replay.transmit(&schedule).unwrap();
    a_replay.transmitter_update(&schedule, &stored, &echo).unwrap();
    let a_same = node_bits(&a_replay) == node_bits(&a1);
    let scrambled = node_bits(&remote_a) != node_bits(&a0) && node_bits(&remote_b) != node_bits(&b0);

    let spc = trained.session.node_a.encoder.arch().samples_per_class;
    let mut buf = Vec::new();
    tap.write_jsonl(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut only_samples = true;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        only_samples &= keys == ["direction", "epoch", "index", "leg", "samples"]
            && v["samples"].as_array().unwrap().len() == spc;
    }
    check(
        a_same && b_same && scrambled && only_samples && !tap.is_empty(),
        format!(
            "replayed updates bitwise equal: receiver {b_same}, transmitter {a_same}; {} transcript messages, all {spc}-sample payloads: {only_samples}",
            tap.len()
        ),
    )
}

// ---- criterion 8 ------------------------------------------------------------------------

fn criterion_8() -> Verdict {
    let cfg = TrainingConfig {
        max_epochs: 1,
        ..TrainingConfig::default()
    };
    let mut tap = Transcript::new();
    let mut session = LinkSession::new(&cfg).unwrap();
    let out = session.run_epoch(Some(&mut tap)).unwrap();
    let counted = |d| -> usize { tap.filter(d, Leg::Forward, 0).iter().map(|m| m.payload.len()).sum() };
    let (ab, ba) = (counted(Direction::AToB), counted(Direction::BToA));
    let bps = bits_per_sample(cfg.arch.num_classes, cfg.arch.samples_per_class);
    check(
        ab == 2048 && ba == 2048 && out.a_to_b.forward_samples == 2048 && out.b_to_a.forward_samples == 2048 && bps == 1.0,
        format!("samples per epoch A->B {ab}, B->A {ba}; bits per sample {bps}"),
    )
}

// ---- criterion 9 ------------------------------------------------------------------------

fn random_block(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn criterion_9() -> Verdict {
    let x = random_block(1_000_000, 9);
    let mut worst: f64 = 0.0;
    for (i, snr) in [-5.0, 0.0, 10.0, 20.0, 30.0].into_iter().enumerate() {
        for cfg in [
            ChannelConfig::awgn(snr),
            ChannelConfig::fir(snr, default_plc_taps()),
            ChannelConfig::new(ChannelKind::Narrowband, snr),
        ] {
            let out = Channel::new(cfg.with_seed(i as u64)).unwrap().apply(&x).unwrap();
            worst = worst.max((out.measured_snr_db - snr).abs());
        }
    }

    let block = &x[..4096];
    let taps = default_plc_taps();
    let whole = fir_filter(block, &taps, &mut Vec::new());
    let mut split_ok = true;
    for cuts in [vec![1], vec![7, 300, 301], vec![2048], vec![5, 6, 7, 8, 4000]] {
        let mut delay = Vec::new();
        let mut pieced = Vec::new();
        let mut start = 0;
        for end in cuts.into_iter().chain([block.len()]) {
            pieced.extend(fir_filter(&block[start..end], &taps, &mut delay));
            start = end;
        }
        split_ok &= pieced == whole;
    }

    let run = |seed| {
        let cfg = ChannelConfig::fir(10.0, default_plc_taps()).with_seed(seed);
        let mut ch = Channel::new(cfg).unwrap();
        let mut out = ch.apply(&block[..1000]).unwrap().samples;
        out.extend(ch.apply(&block[1000..]).unwrap().samples);
        out.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect::<Vec<u64>>()
    };
    let deterministic = run(42) == run(42) && run(42) != run(43);
    check(
        worst <= 0.25 && split_ok && deterministic,
        format!(
            "worst |measured - configured| SNR {worst:.3} dB over 1e6 samples; FIR split exact {split_ok}; seeded runs bitwise equal {deterministic}"
        ),
    )
}

// ---- criterion 10 -----------------------------------------------------------------------

fn criterion_10(trained: &Run) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("node_b.ckpt");
    let ck = NodeCheckpoint::new(trained.session.node_b.clone(), trained.session.next_epoch);
    ck.save(&path).unwrap();
    let report = verify_round_trip(&path, &dir.path().join("again.ckpt")).unwrap();

    let text = ck.to_text();
    let cut = text.find("layer conv.kernels").unwrap();
    let truncated = NodeCheckpoint::from_text(&text[..cut]).unwrap_err().to_string();
    let mid = text.find("layer output.weights").unwrap() + 100;
    let ragged = NodeCheckpoint::from_text(&text[..mid]).unwrap_err().to_string();
    let versioned = NodeCheckpoint::from_text(&text.replacen("deepmod-checkpoint 1", "deepmod-checkpoint 2", 1))
        .unwrap_err()
        .to_string();
    let named = truncated.contains("conv.kernels") && ragged.contains("output.weights");
    let version_ok = versioned.contains("unsupported checkpoint version 2");
    check(
        report.identical && named && version_ok,
        format!(
            "{} probe values bitwise identical: {}; truncation: \"{truncated}\" / \"{ragged}\"; version: \"{versioned}\"",
            report.probe_values, report.identical
        ),
    )
}

// -----------------------------------------------------------------------------------------

fn report(n: usize, what: &str, started: Instant, verdict: Verdict) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let (tag, detail, ok) = match verdict {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("{tag} criterion {n:>2} ({what}): {detail} [{secs:.1} s]");
    ok
}

fn main() {
    // `cargo test -- --list` and filters are libtest conventions; honour listing only.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut ok = true;

    let t = Instant::now();
    ok &= report(1, "gradient correctness", t, criterion_1());
    let t = Instant::now();
    ok &= report(2, "loss unit values", t, criterion_2());

    let flat_cfg = preset("rf_flat");
    let plc_cfg = preset("plc_selective");
    let t = Instant::now();
    let flat: Vec<Run> = SEEDS.iter().map(|&s| train(&flat_cfg, s, 10.0)).collect();
    let per_seed = t.elapsed().as_secs_f64() / SEEDS.len() as f64;
    ok &= report(3, "convergence reproduction", t, criterion_3(&flat, per_seed));

    let t = Instant::now();
    let plc: Vec<Run> = SEEDS.iter().map(|&s| train(&plc_cfg, s, 10.0)).collect();
    ok &= report(4, "medium-difficulty ordering", t, criterion_4(&flat, &plc));

    let t = Instant::now();
    ok &= report(5, "CER monotonicity", t, criterion_5(&flat[0], &flat_cfg.training_config(0, 10.0)));

    let t = Instant::now();
    ok &= report(6, "train-SNR interior minimum", t, criterion_6(&flat_cfg, &flat));

    let t = Instant::now();
    ok &= report(7, "gradient isolation", t, criterion_7(&flat[0]));
    let t = Instant::now();
    ok &= report(8, "sample-budget identity", t, criterion_8());
    let t = Instant::now();
    ok &= report(9, "channel statistics", t, criterion_9());
    let t = Instant::now();
    ok &= report(10, "checkpoint round trip", t, criterion_10(&flat[1]));

    if !ok {
        std::process::exit(1);
    }
}
