use deepmod_core::channel::{default_plc_taps, Channel, ChannelConfig};
use deepmod_core::checkpoint::NodeCheckpoint;
use deepmod_core::graphs::{bits_per_sample, ArchConfig, Network, Waveform};
use deepmod_core::metrics::{convergence_epoch, MetricsLog};
use deepmod_core::protocol::{
    evaluate_cer, run_direction_pass, train_link, Direction, Leg, LinkSession, Node, NodeId,
    Transcript, TrainingConfig,
};

fn small_arch() -> ArchConfig {
    ArchConfig {
        num_classes: 16,
        samples_per_class: 4,
        embedding_dim: 8,
        encoder_hidden: 16,
        decoder_hidden1: 16,
        decoder_hidden2: 16,
        conv_filters: 4,
        conv_kernel: 3,
        pool_window: 2,
        critic_hidden1: 16,
        critic_hidden2: 8,
        critic_sees_class: false,
    }
}

fn small_cfg(seed: u64) -> TrainingConfig {
    TrainingConfig {
        arch: small_arch(),
        seed,
        max_epochs: 8,
        early_stop_threshold: None,
        ..TrainingConfig::default()
    }
}

fn node_bits(node: &Node) -> Vec<u64> {
    [node.encoder.params(), node.decoder.params(), node.critic.params()]
        .into_iter()
        .flat_map(|p| p.iter().flat_map(|e| e.value.values().iter().map(|v| v.to_bits())).collect::<Vec<_>>())
        .collect()
}

fn perturb(node: &mut Node) {
    for params in [
        node.encoder.params_mut(),
        node.decoder.params_mut(),
        node.critic.params_mut(),
    ] {
        for p in params.iter_mut() {
            for v in p.value.values_mut() {
                *v = -*v + 0.01;
            }
        }
    }
}

fn received(t: &Transcript, direction: Direction, leg: Leg, epoch: usize) -> Vec<Waveform> {
    t.filter(direction, leg, epoch)
        .into_iter()
        .map(|m| m.payload.clone())
        .collect()
}

#[test]
fn local_updates_ignore_remote_parameters() {
    let mut session = LinkSession::new(&small_cfg(3)).unwrap();
    session.train(2, None, None, &mut MetricsLog::new()).unwrap();
    let epoch = session.next_epoch;
    let a0 = session.node_a.clone();
    let b0 = session.node_b.clone();

    let mut tap = Transcript::new();
    let mut ch_ab = session.channel_ab.clone();
    let mut ch_ba = session.channel_ba.clone();
    let (mut a1, mut b1) = (a0.clone(), b0.clone());
    run_direction_pass(&mut a1, &mut b1, &mut ch_ab, &mut ch_ba, epoch, Some(&mut tap)).unwrap();

    // Replay each side's update from the recorded samples, with the peer scrambled.
    let mut scrambled_a = a0.clone();
    perturb(&mut scrambled_a);
    let mut scrambled_b = b0.clone();
    perturb(&mut scrambled_b);

    let fwd = received(&tap, Direction::AToB, Leg::Forward, epoch);
    let echo = received(&tap, Direction::BToA, Leg::Echo, epoch);
    assert_eq!(fwd.len(), 16);
    assert_eq!(echo.len(), 16);

    let mut b_replay = b0.clone();
    let schedule = b_replay.schedule(epoch).permutation;
    b_replay.receiver_update(&fwd, &schedule).unwrap();
    assert_eq!(node_bits(&b_replay), node_bits(&b1));

    let mut a_replay = a0.clone();
    let stored = a_replay.transmit(&schedule).unwrap();
    a_replay.transmitter_update(&schedule, &stored, &echo).unwrap();
    assert_eq!(node_bits(&a_replay), node_bits(&a1));

    // neither replay touched the scrambled peers, and the scrambled peers are in fact different
    assert_ne!(node_bits(&scrambled_a), node_bits(&a0));
    assert_ne!(node_bits(&scrambled_b), node_bits(&b0));
}

#[test]
fn transcript_carries_only_sample_blocks() {
    let cfg = small_cfg(4);
    let mut tap = Transcript::new();
    let mut session = LinkSession::new(&cfg).unwrap();
    session.train(2, None, Some(&mut tap), &mut MetricsLog::new()).unwrap();
    let s = cfg.arch.samples_per_class;
    assert_eq!(tap.len(), 2 * 2 * 2 * cfg.arch.num_classes);
    assert!(tap.messages.iter().all(|m| m.payload.len() == s));

    let mut buf = Vec::new();
    tap.write_jsonl(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["direction", "epoch", "index", "leg", "samples"]);
        assert_eq!(v["samples"].as_array().unwrap().len(), s);
    }
    assert_eq!(Transcript::read_jsonl(&text).unwrap(), tap);
}

#[test]
fn default_epoch_sends_2048_samples_per_direction() {
    let cfg = TrainingConfig {
        max_epochs: 1,
        ..TrainingConfig::default()
    };
    let mut tap = Transcript::new();
    let mut session = LinkSession::new(&cfg).unwrap();
    let out = session.run_epoch(Some(&mut tap)).unwrap();
    assert_eq!(out.a_to_b.forward_samples, 2048);
    assert_eq!(out.b_to_a.forward_samples, 2048);
    for d in [Direction::AToB, Direction::BToA] {
        let fwd: usize = tap.filter(d, Leg::Forward, 0).iter().map(|m| m.payload.len()).sum();
        assert_eq!(fwd, 2048);
    }
    assert_eq!(bits_per_sample(256, 8), 1.0);
}

#[test]
fn each_pass_updates_only_the_expected_networks() {
    let mut session = LinkSession::new(&small_cfg(5)).unwrap();
    let before_a = session.node_a.clone();
    let before_b = session.node_b.clone();
    let (mut ch_ab, mut ch_ba) = (session.channel_ab.clone(), session.channel_ba.clone());
    run_direction_pass(
        &mut session.node_a,
        &mut session.node_b,
        &mut ch_ab,
        &mut ch_ba,
        0,
        None,
    )
    .unwrap();
    let (a, b) = (&session.node_a, &session.node_b);
    assert_ne!(a.encoder, before_a.encoder);
    assert_ne!(a.critic, before_a.critic);
    assert_eq!(a.decoder, before_a.decoder);
    assert_ne!(b.decoder, before_b.decoder);
    assert_eq!(b.encoder, before_b.encoder);
    assert_eq!(b.critic, before_b.critic);
    assert_eq!(a.encoder_opt.step_count, 1);
    assert_eq!(a.critic_opt.step_count, 1);
    assert_eq!(b.decoder_opt.step_count, 1);
}

#[test]
fn training_is_bitwise_reproducible() {
    let cfg = TrainingConfig {
        channel_fwd: ChannelConfig::fir(10.0, default_plc_taps()),
        channel_rev: ChannelConfig::fir(10.0, default_plc_taps()),
        ..small_cfg(6)
    };
    let csv = |log: &MetricsLog| {
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        buf
    };
    let first = train_link(&cfg, None).unwrap();
    let second = train_link(&cfg, None).unwrap();
    assert_eq!(csv(&first.log), csv(&second.log));
    assert_eq!(node_bits(&first.session.node_a), node_bits(&second.session.node_a));
    let other = train_link(&small_cfg(7), None).unwrap();
    assert_ne!(csv(&first.log), csv(&other.log));
}

#[test]
fn resumed_session_matches_uninterrupted_run() {
    let cfg = small_cfg(8);
    let full = train_link(&cfg, None).unwrap();

    let mut first = LinkSession::new(&cfg).unwrap();
    let mut log = MetricsLog::new();
    first.train(3, None, None, &mut log).unwrap();
    let ck_a = NodeCheckpoint::new(first.node_a.clone(), first.next_epoch).to_text();
    let ck_b = NodeCheckpoint::new(first.node_b.clone(), first.next_epoch).to_text();

    let a = NodeCheckpoint::from_text(&ck_a).unwrap();
    let b = NodeCheckpoint::from_text(&ck_b).unwrap();
    let mut resumed = LinkSession::from_nodes(a.node, b.node, &cfg, a.next_epoch).unwrap();
    resumed.train(cfg.max_epochs - 3, None, None, &mut log).unwrap();

    assert_eq!(log, full.log);
    assert_eq!(node_bits(&resumed.node_b), node_bits(&full.session.node_b));
}

#[test]
fn untrained_link_performs_at_chance() {
    let cfg = TrainingConfig {
        max_epochs: 1,
        ..TrainingConfig::default()
    };
    let session = LinkSession::new(&cfg).unwrap();
    let cer = evaluate_cer(
        &session.node_a,
        &session.node_b,
        &cfg.channel_fwd,
        &cfg.channel_rev,
        20.0,
        2048,
        1,
    )
    .unwrap()
    .pooled();
    assert!(cer.cer > 0.9, "{cer:?}");

    let out = train_link(&cfg, None).unwrap();
    assert!(out.log.rows().iter().all(|r| r.class_success < 0.05));
}

#[test]
fn short_training_beats_chance_on_small_link() {
    let cfg = TrainingConfig {
        max_epochs: 150,
        ..small_cfg(9)
    };
    let out = train_link(&cfg, None).unwrap();
    let last = out.log.success_trace(None).last().unwrap().1;
    assert!(last > 0.5, "final success {last}");
    assert!(convergence_epoch(&out.log, 0.5).unwrap().is_some());
}

#[test]
fn zero_epochs_gives_an_empty_log() {
    let cfg = TrainingConfig {
        max_epochs: 0,
        ..small_cfg(10)
    };
    let out = train_link(&cfg, None).unwrap();
    assert!(out.log.is_empty());
    assert!(!out.stopped_early);
    assert!(convergence_epoch(&out.log, 0.9).is_err());
}

#[test]
fn ideal_channel_delivers_samples_unchanged() {
    let cfg = TrainingConfig {
        channel_fwd: ChannelConfig::ideal(),
        channel_rev: ChannelConfig::ideal(),
        ..small_cfg(11)
    };
    let mut tap = Transcript::new();
    let mut session = LinkSession::new(&cfg).unwrap();
    let a_before = session.node_a.clone();
    session.run_epoch(Some(&mut tap)).unwrap();
    let sent = a_before.transmit(&a_before.schedule(0).permutation).unwrap();
    assert_eq!(received(&tap, Direction::AToB, Leg::Forward, 0), sent);
    assert!(Channel::new(cfg.channel_fwd).is_ok());
}

#[test]
fn mismatched_schedules_are_a_protocol_error() {
    let arch = small_arch();
    let mut a = Node::new(NodeId::A, arch, Default::default(), 1, 1).unwrap();
    let mut b = Node::new(NodeId::B, arch, Default::default(), 2, 2).unwrap();
    let mut ch1 = Channel::new(ChannelConfig::awgn(10.0)).unwrap();
    let mut ch2 = Channel::new(ChannelConfig::awgn(10.0)).unwrap();
    let err = run_direction_pass(&mut a, &mut b, &mut ch1, &mut ch2, 0, None).unwrap_err();
    assert!(err.to_string().contains("schedule"), "{err}");
}
