//! Wind records in CSV form: `timestamp,u_mps,v_mps`.
//!
//! Timestamps are either fractional day numbers or ISO-8601 date-times (all rows
//! of one kind). Date-times are converted to days since `start`, or since
//! midnight of the earliest record when no start is given.

use std::io::Read;
use std::path::Path;

use bloom_core::wind::WindSeries;
use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::error::{Error, Result};

pub const HEADER: [&str; 3] = ["timestamp", "u_mps", "v_mps"];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stamp {
    Days(f64),
    Date(NaiveDateTime),
}

const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

/// Parses an ISO-8601 date or date-time. Offsets are converted to UTC.
pub fn parse_datetime(s: &str) -> Option<NaiveDateTime> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
}

fn parse_stamp(s: &str) -> Option<Stamp> {
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then_some(Stamp::Days(x));
    }
    parse_datetime(s).map(Stamp::Date)
}

fn days_between(t: NaiveDateTime, origin: NaiveDateTime) -> f64 {
    (t - origin).num_milliseconds() as f64 / 86_400_000.0
}

/// 1-based line of the first non-blank byte at or after `pos`. The reader's own
/// line counter does not see skipped blank lines.
fn line_of(text: &[u8], pos: usize) -> usize {
    let start = pos + text[pos..].iter().take_while(|c| matches!(c, b'\n' | b'\r')).count();
    1 + text[..start].iter().filter(|&&c| c == b'\n').count()
}

/// Reads wind records, sorts them by time and rejects duplicate timestamps.
/// `source` names the input in error messages.
pub fn parse_wind_records<R: Read>(mut input: R, source: &str, start: Option<&str>) -> Result<WindSeries> {
    let mut text = Vec::new();
    input.read_to_end(&mut text).map_err(|e| Error::io(source, e))?;
    let origin = match start {
        Some(s) => Some(parse_datetime(s).ok_or_else(|| Error::Config(format!("wind start `{s}` is not an ISO-8601 date-time")))?),
        None => None,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_slice());
    let mut rows: Vec<(usize, Stamp, f64, f64)> = Vec::new();
    let mut header_seen = false;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| line_of(&text, p.byte() as usize));
        if record.iter().all(str::is_empty) {
            continue;
        }
        if !header_seen {
            let names: Vec<String> = record.iter().map(str::to_ascii_lowercase).collect();
            if names != HEADER {
                return Err(Error::parse(source, line, format!("expected header `{}`, found `{}`", HEADER.join(","), record.iter().collect::<Vec<_>>().join(","))));
            }
            header_seen = true;
            continue;
        }
        if record.len() != 3 {
            return Err(Error::parse(source, line, format!("expected 3 fields, found {}", record.len())));
        }
        let stamp = parse_stamp(&record[0]).ok_or_else(|| Error::parse(source, line, format!("bad timestamp `{}`", &record[0])))?;
        let mut comp = [0.0; 2];
        for (c, field) in comp.iter_mut().zip([&record[1], &record[2]]) {
            *c = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(source, line, format!("bad wind component `{field}`")))?;
        }
        if let Some(&(_, first, _, _)) = rows.first() {
            if matches!(first, Stamp::Days(_)) != matches!(stamp, Stamp::Days(_)) {
                return Err(Error::parse(source, line, "day numbers and date-times are mixed"));
            }
        }
        rows.push((line, stamp, comp[0], comp[1]));
    }
    if !header_seen {
        return Err(Error::parse(source, 1, "missing header row"));
    }
    if rows.len() < 2 {
        return Err(Error::parse(source, 0, format!("need at least 2 records, found {}", rows.len())));
    }
    let origin = origin.or_else(|| {
        rows.iter()
            .filter_map(|r| match r.1 {
                Stamp::Date(d) => Some(d),
                Stamp::Days(_) => None,
            })
            .min()
            .map(|d| d.date().and_hms_opt(0, 0, 0).unwrap())
    });
    let mut timed: Vec<(f64, usize, f64, f64)> = rows
        .into_iter()
        .map(|(line, stamp, u, v)| {
            let t = match stamp {
                Stamp::Days(x) => x,
                Stamp::Date(d) => days_between(d, origin.unwrap()),
            };
            (t, line, u, v)
        })
        .collect();
    timed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if let Some(w) = timed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::parse(source, w[1].1, format!("duplicate timestamp (also on line {})", w[0].1)));
    }
    let times = timed.iter().map(|r| r.0).collect();
    let u = timed.iter().map(|r| r.2).collect();
    let v = timed.iter().map(|r| r.3).collect();
    Ok(WindSeries::new(times, u, v)?)
}

pub fn read_wind_file(path: &Path, start: Option<&str>) -> Result<WindSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_wind_records(std::io::BufReader::new(file), &path.display().to_string(), start)
}
