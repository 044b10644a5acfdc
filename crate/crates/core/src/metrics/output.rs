use std::io::Write;

use crate::error::Result;

use super::{LoadLedger, MetricsRecord, SeriesPoint};

pub const MESSAGE_COLUMNS: [&str; 22] = [
    "msg_id",
    "created_at",
    "expires_at",
    "eligible",
    "delivered_on_time",
    "late_entrants",
    "late_delivered",
    "copies_pushed",
    "panic_pushes",
    "max_out_degree",
    "infra_down_content",
    "infra_down_cancelled",
    "infra_up_enter",
    "infra_up_leave",
    "infra_up_ack",
    "infra_up_pos",
    "infra_up_neighbors",
    "adhoc_content",
    "adhoc_cancelled",
    "infra_total",
    "adhoc_total",
    "delivery_ratio",
];

pub const SERIES_COLUMNS: [&str; 5] = ["run", "msg", "t", "real_ratio", "ctrl_ratio"];

/// One row per message: delivery scalars followed by the message's ledger.
pub fn write_messages_csv<W: Write>(records: &[MetricsRecord], ledgers: &[LoadLedger], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MESSAGE_COLUMNS)?;
    for (r, l) in records.iter().zip(ledgers) {
        let ratio = if r.eligible == 0 {
            1.0
        } else {
            r.delivered_on_time as f64 / r.eligible as f64
        };
        w.write_record([
            r.msg_id.to_string(),
            r.created_at.to_string(),
            r.expires_at.to_string(),
            r.eligible.to_string(),
            r.delivered_on_time.to_string(),
            r.late_entrants.to_string(),
            r.late_delivered.to_string(),
            r.copies_pushed.to_string(),
            r.panic_pushes.to_string(),
            r.max_out_degree.map(|k| k.to_string()).unwrap_or_default(),
            l.infra_down_content.to_string(),
            l.infra_down_cancelled.to_string(),
            l.infra_up.enter.to_string(),
            l.infra_up.leave.to_string(),
            l.infra_up.ack.to_string(),
            l.infra_up.pos.to_string(),
            l.infra_up.neighbors.to_string(),
            l.adhoc_content.to_string(),
            l.adhoc_cancelled.to_string(),
            l.infra_total().to_string(),
            l.adhoc_total().to_string(),
            ratio.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Long-format infection series.
pub fn write_series_csv<W: Write>(run: usize, series: &[SeriesPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_COLUMNS)?;
    for p in series {
        w.write_record([
            run.to_string(),
            p.msg.to_string(),
            p.t.to_string(),
            p.real_ratio.to_string(),
            p.ctrl_ratio.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
