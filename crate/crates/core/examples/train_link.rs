//! Trains one link over flat AWGN and prints direction-averaged class success.
//!
//! cargo run --release -p deepmod-core --example train_link -- [seed] [epochs] [selective]

use std::time::Instant;

use deepmod_core::channel::{default_plc_taps, ChannelConfig};
use deepmod_core::metrics::convergence_epoch;
use deepmod_core::protocol::{train_link, TrainingConfig};

fn main() -> deepmod_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let selective = args.next().is_some();

    let channel = if selective {
        ChannelConfig::fir(10.0, default_plc_taps())
    } else {
        ChannelConfig::awgn(10.0)
    };
    let cfg = TrainingConfig {
        seed,
        max_epochs: epochs,
        channel_fwd: channel.clone(),
        channel_rev: channel,
        early_stop_threshold: None,
        ..TrainingConfig::default()
    };
    let start = Instant::now();
    let out = train_link(&cfg, None)?;
    for (epoch, s) in out.log.success_trace(None).iter().step_by(10) {
        println!("epoch {epoch:4}  success {s:.3}");
    }
    println!(
        "converged(0.9) at {:?} in {:.1?}",
        convergence_epoch(&out.log, 0.9)?,
        start.elapsed()
    );
    Ok(())
}
