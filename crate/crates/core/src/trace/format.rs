//! Whitespace-delimited text format.
//!
//! ```text
//! #meta bounds=1000x1000 duration=3600
//! 0.0 ENTER 1 10 10
//! 1.0 POS 1 12.5 10
//! 5.0 LEAVE 1
//! ```
//!
//! Contact traces use `<t> UP <a> <b>` / `<t> DOWN <a> <b>` and ENTER lines
//! without coordinates. Other lines starting with `#` and blank lines are
//! ignored.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::{Point, Rect};

use super::{EventKind, NodeId, Trace, TraceEvent, TraceKind};

pub fn load_trace(path: impl AsRef<Path>, kind: TraceKind) -> Result<Trace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, kind)
}

/// Guesses the trace kind from its keywords: any UP/DOWN line makes it a
/// contact trace.
pub fn detect_format(text: &str) -> TraceKind {
    let contact = text.lines().any(|l| {
        let mut f = l.split_whitespace();
        f.next();
        matches!(f.next(), Some("UP" | "DOWN"))
    });
    if contact {
        TraceKind::Contact
    } else {
        TraceKind::Position
    }
}

pub fn parse_trace(text: &str, kind: TraceKind) -> Result<Trace> {
    let mut bounds = None;
    let mut duration = None;
    let mut events = Vec::new();
    let mut lines = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if let Some(rest) = raw.strip_prefix("#meta") {
            parse_meta(rest, line, &mut bounds, &mut duration)?;
            continue;
        }
        if raw.starts_with('#') {
            continue;
        }
        events.push(parse_event(raw, line, kind)?);
        lines.push(line);
    }

    Trace::with_lines(kind, events, &lines, bounds, duration)
}

fn parse_meta(
    rest: &str,
    line: usize,
    bounds: &mut Option<Rect>,
    duration: &mut Option<f64>,
) -> Result<()> {
    for field in rest.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("malformed meta field `{field}`"),
        })?;
        match key {
            "bounds" => {
                let (w, h) = value.split_once('x').ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("bounds must be <w>x<h>, got `{value}`"),
                })?;
                *bounds = Some(Rect::sized(num(w, line)?, num(h, line)?));
            }
            "duration" => *duration = Some(num(value, line)?),
            _ => {}
        }
    }
    Ok(())
}

fn num(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("invalid number `{s}`"),
        })
}

fn node(s: Option<&str>, line: usize) -> Result<NodeId> {
    let s = s.ok_or_else(|| Error::Parse {
        line,
        msg: "missing node id".into(),
    })?;
    s.parse::<u32>().map(NodeId).map_err(|_| Error::Parse {
        line,
        msg: format!("invalid node id `{s}`"),
    })
}

fn parse_event(raw: &str, line: usize, kind: TraceKind) -> Result<TraceEvent> {
    let fields: Vec<&str> = raw.split_whitespace().collect();
    let err = |msg: String| Error::Parse { line, msg };
    if fields.len() < 3 {
        return Err(err(format!("expected `<time> <KIND> <node> ...`, got `{raw}`")));
    }
    let time = num(fields[0], line)?;
    let arity = |n: usize| -> Result<()> {
        if fields.len() == n {
            Ok(())
        } else {
            Err(err(format!(
                "{} expects {} fields, got {}",
                fields[1],
                n,
                fields.len()
            )))
        }
    };
    let coords = || -> Result<Point> { Ok(Point::new(num(fields[3], line)?, num(fields[4], line)?)) };

    let ev = match (fields[1], kind) {
        ("ENTER", TraceKind::Position) => {
            arity(5)?;
            EventKind::Enter {
                node: node(Some(fields[2]), line)?,
                pos: Some(coords()?),
            }
        }
        ("ENTER", TraceKind::Contact) => {
            arity(3)?;
            EventKind::Enter {
                node: node(Some(fields[2]), line)?,
                pos: None,
            }
        }
        ("LEAVE", _) => {
            arity(3)?;
            EventKind::Leave {
                node: node(Some(fields[2]), line)?,
            }
        }
        ("POS", TraceKind::Position) => {
            arity(5)?;
            EventKind::Position {
                node: node(Some(fields[2]), line)?,
                pos: coords()?,
            }
        }
        (k @ ("UP" | "DOWN"), TraceKind::Contact) => {
            arity(4)?;
            let a = node(Some(fields[2]), line)?;
            let b = node(Some(fields[3]), line)?;
            if k == "UP" {
                EventKind::contact_up(a, b)
            } else {
                EventKind::contact_down(a, b)
            }
        }
        (k @ ("POS" | "UP" | "DOWN"), kind) => {
            return Err(err(format!("{k} line not allowed in a {kind} trace")))
        }
        (k, _) => return Err(err(format!("unknown event kind `{k}`"))),
    };
    Ok(TraceEvent::new(time, ev))
}

/// Writes `trace` in the text format. Floats use Rust's shortest round-trip
/// representation, so `parse_trace(write_trace(t)) == t`.
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    let m = trace.meta();
    writeln!(
        out,
        "#meta bounds={}x{} duration={}",
        m.bounds.width(),
        m.bounds.height(),
        m.duration
    )?;
    for ev in trace.events() {
        match ev.kind {
            EventKind::Enter { node, pos: Some(p) } => {
                writeln!(out, "{} ENTER {} {} {}", ev.time, node, p.x, p.y)?
            }
            EventKind::Enter { node, pos: None } => writeln!(out, "{} ENTER {}", ev.time, node)?,
            EventKind::Leave { node } => writeln!(out, "{} LEAVE {}", ev.time, node)?,
            EventKind::Position { node, pos } => {
                writeln!(out, "{} POS {} {} {}", ev.time, node, pos.x, pos.y)?
            }
            EventKind::ContactUp { a, b } => writeln!(out, "{} UP {} {}", ev.time, a, b)?,
            EventKind::ContactDown { a, b } => writeln!(out, "{} DOWN {} {}", ev.time, a, b)?,
        }
    }
    Ok(())
}
