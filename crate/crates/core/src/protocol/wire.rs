//! Wire format.
//!
//! A report is a tag byte followed by little-endian integers whose width is
//! the smallest of 1..=4 bytes able to hold `size - 1` for the declared
//! domain of that field:
//!
//! | tag | report        | payload                              |
//! |-----|---------------|--------------------------------------|
//! | 0   | `FullDomain`  | id, `width(d)`                       |
//! | 1   | `HotSet`      | id, `width(d)`                       |
//! | 2   | `Bot`         | none                                 |
//! | 3   | `OlhPair`     | seed, 4 bytes; bucket, `width(g)`    |
//! | 4   | `HrIndex`     | column, `width(K)`                   |
//!
//! A bulletin is a flags byte (bit 0 = weakest-low, other bits zero), the
//! sequence number as 4 bytes, the id count as 2 bytes, then each id at
//! `width(d)`.

use crate::domain::Item;
use crate::error::{invalid, Error, Result};
use crate::schemes::{Bulletin, PerturbedReport};

pub const TAG_FULL_DOMAIN: u8 = 0;
pub const TAG_HOT_SET: u8 = 1;
pub const TAG_BOT: u8 = 2;
pub const TAG_OLH_PAIR: u8 = 3;
pub const TAG_HR_INDEX: u8 = 4;

const FLAG_WEAKEST_LOW: u8 = 1;
const BULLETIN_HEADER: usize = 1 + 4 + 2;

/// Declared field domains both ends agree on. Zero marks an unused field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireDomains {
    pub items: u32,
    pub olh_g: u32,
    pub hr_order: u32,
}

impl WireDomains {
    pub fn items(d: u32) -> Self {
        Self {
            items: d,
            olh_g: 0,
            hr_order: 0,
        }
    }
}

/// Bytes needed for values in `0..size`.
pub fn width(size: u64) -> usize {
    match size.saturating_sub(1) {
        0..=0xFF => 1,
        0x100..=0xFFFF => 2,
        0x1_0000..=0xFF_FFFF => 3,
        _ => 4,
    }
}

fn put(buf: &mut Vec<u8>, value: u32, width: usize) {
    buf.extend_from_slice(&value.to_le_bytes()[..width]);
}

fn take(bytes: &[u8], width: usize) -> u32 {
    let mut le = [0u8; 4];
    le[..width].copy_from_slice(&bytes[..width]);
    u32::from_le_bytes(le)
}

fn check_field(value: u32, size: u32, what: &str) -> Result<()> {
    if value >= size {
        return Err(invalid(format!("{what} {value} outside declared domain {size}")));
    }
    Ok(())
}

pub fn encode_report(report: &PerturbedReport, domains: &WireDomains) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(8);
    encode_report_into(report, domains, &mut buf)?;
    Ok(buf)
}

pub fn encode_report_into(
    report: &PerturbedReport,
    domains: &WireDomains,
    buf: &mut Vec<u8>,
) -> Result<()> {
    let wd = width(domains.items as u64);
    match *report {
        PerturbedReport::FullDomain(v) => {
            check_field(v, domains.items, "id")?;
            buf.push(TAG_FULL_DOMAIN);
            put(buf, v, wd);
        }
        PerturbedReport::HotSet(v) => {
            check_field(v, domains.items, "id")?;
            buf.push(TAG_HOT_SET);
            put(buf, v, wd);
        }
        PerturbedReport::Bot => buf.push(TAG_BOT),
        PerturbedReport::OlhPair { seed, y } => {
            check_field(y, domains.olh_g, "OLH bucket")?;
            buf.push(TAG_OLH_PAIR);
            put(buf, seed, 4);
            put(buf, y, width(domains.olh_g as u64));
        }
        PerturbedReport::HrIndex(col) => {
            check_field(col, domains.hr_order, "HR column")?;
            buf.push(TAG_HR_INDEX);
            put(buf, col, width(domains.hr_order as u64));
        }
    }
    Ok(())
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn field(payload: &[u8], width: usize, size: u32, what: &str) -> Result<u32> {
    if payload.len() != width {
        return Err(malformed(format!(
            "{what}: expected {width} payload bytes, got {}",
            payload.len()
        )));
    }
    let v = take(payload, width);
    if v >= size {
        return Err(malformed(format!("{what} {v} outside declared domain {size}")));
    }
    Ok(v)
}

pub fn decode_report(bytes: &[u8], domains: &WireDomains) -> Result<PerturbedReport> {
    let (&tag, payload) = bytes.split_first().ok_or_else(|| malformed("empty frame"))?;
    let wd = width(domains.items as u64);
    match tag {
        TAG_FULL_DOMAIN => Ok(PerturbedReport::FullDomain(field(
            payload,
            wd,
            domains.items,
            "id",
        )?)),
        TAG_HOT_SET => Ok(PerturbedReport::HotSet(field(payload, wd, domains.items, "id")?)),
        TAG_BOT if payload.is_empty() => Ok(PerturbedReport::Bot),
        TAG_BOT => Err(malformed("BOT frame carries a payload")),
        TAG_OLH_PAIR => {
            if payload.len() < 4 {
                return Err(malformed("truncated OLH seed"));
            }
            let seed = take(payload, 4);
            let y = field(
                &payload[4..],
                width(domains.olh_g as u64),
                domains.olh_g,
                "OLH bucket",
            )?;
            Ok(PerturbedReport::OlhPair { seed, y })
        }
        TAG_HR_INDEX => Ok(PerturbedReport::HrIndex(field(
            payload,
            width(domains.hr_order as u64),
            domains.hr_order,
            "HR column",
        )?)),
        other => Err(malformed(format!("unknown tag {other}"))),
    }
}

pub fn encode_bulletin(bulletin: &Bulletin, items: u32) -> Result<Vec<u8>> {
    let count = u16::try_from(bulletin.hot_ids.len())
        .map_err(|_| invalid("bulletin holds more than 65535 ids"))?;
    let wd = width(items as u64);
    let mut buf = Vec::with_capacity(BULLETIN_HEADER + wd * count as usize);
    buf.push(if bulletin.weakest_low { FLAG_WEAKEST_LOW } else { 0 });
    buf.extend_from_slice(&bulletin.seq.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    for &id in &bulletin.hot_ids {
        check_field(id, items, "id")?;
        put(&mut buf, id, wd);
    }
    Ok(buf)
}

pub fn decode_bulletin(bytes: &[u8], items: u32) -> Result<Bulletin> {
    if bytes.len() < BULLETIN_HEADER {
        return Err(malformed("truncated bulletin header"));
    }
    let flags = bytes[0];
    if flags & !FLAG_WEAKEST_LOW != 0 {
        return Err(malformed(format!("unknown bulletin flags {flags:#04x}")));
    }
    let seq = take(&bytes[1..5], 4);
    let count = u16::from_le_bytes([bytes[5], bytes[6]]) as usize;
    let wd = width(items as u64);
    let body = &bytes[BULLETIN_HEADER..];
    if body.len() != count * wd {
        return Err(malformed(format!(
            "bulletin declares {count} ids but carries {} bytes",
            body.len()
        )));
    }
    let mut ids: Vec<Item> = Vec::with_capacity(count);
    for chunk in body.chunks_exact(wd) {
        let id = field(chunk, wd, items, "id")?;
        if ids.contains(&id) {
            return Err(malformed(format!("duplicate bulletin id {id}")));
        }
        ids.push(id);
    }
    Ok(Bulletin::new(seq, ids, flags & FLAG_WEAKEST_LOW != 0))
}
