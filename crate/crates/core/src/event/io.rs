//! `ebvs-events v1` text format.
//!
//! ```text
//! # ebvs-events v1 width=240 height=180
//! 1532,118,90,1
//! 1533,119,90,0
//! ```
//!
//! One event per line as `t_us,u,v,pol` with `pol` 1 for positive and 0 for
//! negative. Timestamps must be non-decreasing.

use std::io::{BufRead, Write};

use super::{Event, Polarity, StreamClock};
use crate::error::{Error, Result};

pub const HEADER_TAG: &str = "# ebvs-events v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventFile {
    pub width: u32,
    pub height: u32,
    pub events: Vec<Event>,
}

pub fn write_header<W: Write>(mut w: W, width: u32, height: u32) -> Result<()> {
    writeln!(w, "{HEADER_TAG} width={width} height={height}")?;
    Ok(())
}

pub fn write_event<W: Write>(mut w: W, e: &Event) -> Result<()> {
    let pol = match e.polarity {
        Polarity::Positive => 1,
        Polarity::Negative => 0,
    };
    writeln!(w, "{},{},{},{}", e.t, e.u, e.v, pol)?;
    Ok(())
}

pub fn write_events<W: Write>(mut w: W, width: u32, height: u32, events: &[Event]) -> Result<()> {
    write_header(&mut w, width, height)?;
    for e in events {
        write_event(&mut w, e)?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<(u32, u32)> {
    let rest = line.strip_prefix(HEADER_TAG).ok_or_else(|| Error::Parse {
        line: 1,
        msg: format!("expected header starting with '{HEADER_TAG}'"),
    })?;
    let mut width = None;
    let mut height = None;
    for field in rest.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("malformed header field '{field}'"),
        })?;
        let parsed: u32 = value.parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("bad value for '{key}'"),
        })?;
        match key {
            "width" => width = Some(parsed),
            "height" => height = Some(parsed),
            _ => {}
        }
    }
    match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 && w <= u16::MAX as u32 && h <= u16::MAX as u32 => {
            Ok((w, h))
        }
        _ => Err(Error::Parse {
            line: 1,
            msg: "header needs positive width and height".into(),
        }),
    }
}

fn parse_line(line: &str, lineno: usize, width: u32, height: u32) -> Result<Event> {
    let bad = |msg: &str| Error::Parse {
        line: lineno,
        msg: msg.to_string(),
    };
    let mut it = line.split(',').map(str::trim);
    let mut field = |name: &str| it.next().ok_or_else(|| bad(&format!("missing field {name}")));
    let t: u64 = field("t_us")?.parse().map_err(|_| bad("bad t_us"))?;
    let u: u32 = field("u")?.parse().map_err(|_| bad("bad u"))?;
    let v: u32 = field("v")?.parse().map_err(|_| bad("bad v"))?;
    let polarity = match field("pol")? {
        "1" => Polarity::Positive,
        "0" => Polarity::Negative,
        _ => return Err(bad("pol must be 0 or 1")),
    };
    if it.next().is_some() {
        return Err(bad("too many fields"));
    }
    if u >= width || v >= height {
        return Err(Error::OutOfBounds {
            u: u as i64,
            v: v as i64,
            width,
            height,
        });
    }
    Ok(Event::new(u as u16, v as u16, t, polarity))
}

/// Reads a whole event file, validating the header, bounds and ordering.
pub fn read_events<R: BufRead>(r: R) -> Result<EventFile> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })??;
    let (width, height) = parse_header(header.trim_end())?;
    let mut clock = StreamClock::new();
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let e = parse_line(line, i + 2, width, height)?;
        clock.advance(e.t)?;
        events.push(e);
    }
    Ok(EventFile {
        width,
        height,
        events,
    })
}
