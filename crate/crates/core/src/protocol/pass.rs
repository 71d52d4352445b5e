use super::link::{Direction, Leg, LinkMessage, Transcript};
use super::node::Node;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::graphs::{concat_samples, split_samples, ClassMessage, Waveform};

/// Outcome of one echo round for a single scheduled class.
#[derive(Clone, Debug, PartialEq)]
pub struct EchoRecord {
    pub original_class: ClassMessage,
    pub stored_tx_waveform: Waveform,
    pub echo_decoded_class: ClassMessage,
    pub success: bool,
}

/// Everything one transmitter-to-receiver pass produced.
#[derive(Clone, Debug)]
pub struct PassOutcome {
    pub direction: Direction,
    pub epoch: usize,
    pub echo_records: Vec<EchoRecord>,
    /// Receiver hard decisions on the forward transmissions (before its update).
    pub rx_decisions: Vec<ClassMessage>,
    /// Fraction of forward transmissions the receiver decoded correctly.
    pub class_success: f64,
    pub loss_rx: f64,
    pub loss_tx: f64,
    pub loss_crit: f64,
    pub critic_accuracy: f64,
    pub measured_snr_db: f64,
    /// Complex samples sent on the forward leg.
    pub forward_samples: usize,
}

fn send(
    channel: &mut Channel,
    waves: &[Waveform],
    samples: usize,
    direction: Direction,
    leg: Leg,
    epoch: usize,
    tap: &mut Option<&mut Transcript>,
) -> Result<(Vec<Waveform>, f64)> {
    let block = concat_samples(waves);
    if block.iter().any(|c| !c.is_finite()) {
        return Err(Error::Divergence {
            epoch,
            detail: format!("{direction} {leg:?} transmission contains non-finite samples"),
        });
    }
    let out = channel.apply(&block)?;
    let received = split_samples(&out.samples, samples);
    if let Some(t) = tap.as_deref_mut() {
        for (index, w) in received.iter().enumerate() {
            t.record(LinkMessage {
                direction,
                leg,
                epoch,
                index,
                payload: w.clone(),
            });
        }
    }
    Ok((received, out.measured_snr_db))
}

/// One training round with `tx` as source and `rx` as sink.
///
/// The receiver trains its decoder on the known sequence and echoes its decisions; the
/// transmitter labels its stored waveforms by echo agreement, trains its critic, then its encoder.
/// Only sample values cross `fwd` and `rev`.
pub fn run_direction_pass(
    tx: &mut Node,
    rx: &mut Node,
    fwd: &mut Channel,
    rev: &mut Channel,
    epoch: usize,
    mut tap: Option<&mut Transcript>,
) -> Result<PassOutcome> {
    let tx_schedule = tx.schedule(epoch);
    let rx_schedule = rx.schedule(epoch);
    if tx_schedule != rx_schedule {
        return Err(Error::Protocol(format!(
            "nodes {:?} and {:?} derived different schedules for epoch {epoch}",
            tx.id, rx.id
        )));
    }
    let direction = Direction::from_to(tx.id);
    let s = tx.arch().samples_per_class;
    let classes = &tx_schedule.permutation;

    let stored = tx.transmit(classes)?;
    let (received, measured_snr_db) =
        send(fwd, &stored, s, direction, Leg::Forward, epoch, &mut tap)?;

    let rx_update = rx.receiver_update(&received, &rx_schedule.permutation)?;
    let echo = rx.transmit(&rx_update.decisions)?;
    let (echo_received, _) = send(rev, &echo, s, direction.reverse(), Leg::Echo, epoch, &mut tap)?;

    let tx_update = tx.transmitter_update(classes, &stored, &echo_received)?;

    let correct = rx_update
        .decisions
        .iter()
        .zip(&rx_schedule.permutation)
        .filter(|(a, b)| a == b)
        .count();
    let echo_records = classes
        .iter()
        .zip(stored)
        .zip(&tx_update.echo_decisions)
        .zip(&tx_update.success)
        .map(|(((&c, w), &e), &ok)| EchoRecord {
            original_class: c,
            stored_tx_waveform: w,
            echo_decoded_class: e,
            success: ok,
        })
        .collect();

    Ok(PassOutcome {
        direction,
        epoch,
        echo_records,
        rx_decisions: rx_update.decisions,
        class_success: correct as f64 / classes.len() as f64,
        loss_rx: rx_update.loss,
        loss_tx: tx_update.loss_tx,
        loss_crit: tx_update.loss_crit,
        critic_accuracy: tx_update.critic_accuracy,
        measured_snr_db,
        forward_samples: received.len() * s,
    })
}
