use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{read_to_string, split_header, write_bytes};
use crate::error::{Error, Result};
use crate::otdr::{Channel, CountHistogram};

pub const TRACE_SCHEMA: &str = "rdts-trace/1";

const KEYS: [&str; 7] = [
    "schema",
    "channel",
    "bin_width_s",
    "integration_s",
    "seed",
    "repetition_rate_hz",
    "group_index",
];

/// Serialises a histogram: `# key=value` header lines, a `count` column
/// title, then one count per line.
pub fn write_trace(h: &CountHistogram) -> String {
    let mut s = String::with_capacity(h.len() * 6 + 256);
    let _ = writeln!(s, "# schema={TRACE_SCHEMA}");
    let _ = writeln!(s, "# channel={}", h.channel.tag());
    let _ = writeln!(s, "# bin_width_s={:e}", h.bin_width);
    let _ = writeln!(s, "# integration_s={}", h.integration_time);
    let _ = writeln!(s, "# seed={}", h.seed);
    let _ = writeln!(s, "# repetition_rate_hz={}", h.repetition_rate);
    let _ = writeln!(s, "# group_index={}", h.group_index);
    s.push_str("count\n");
    for c in &h.counts {
        let _ = writeln!(s, "{c}");
    }
    s
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse(format!("header {key}: `{v}` is not a finite number")))
}

/// Parses a trace written by [`write_trace`]. Every header key is required
/// and unknown keys are rejected.
pub fn read_trace(text: &str) -> Result<CountHistogram> {
    let (header, body) = split_header(text);
    let mut map = BTreeMap::new();
    for (k, v, line) in header {
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Parse(format!("line {line}: unknown header key `{k}`")));
        }
        if map.insert(k.clone(), v).is_some() {
            return Err(Error::Parse(format!("line {line}: duplicate header key `{k}`")));
        }
    }
    if let Some(missing) = KEYS.iter().find(|k| !map.contains_key(**k)) {
        return Err(Error::Parse(format!("trace header lacks `{missing}`")));
    }
    if map["schema"] != TRACE_SCHEMA {
        return Err(Error::Parse(format!(
            "unsupported trace schema `{}`, expected `{TRACE_SCHEMA}`",
            map["schema"]
        )));
    }
    let mut rows = body.into_iter();
    match rows.next() {
        Some((_, "count")) => {}
        Some((line, other)) => {
            return Err(Error::Parse(format!(
                "line {line}: expected column title `count`, got `{other}`"
            )))
        }
        None => return Err(Error::Parse("trace has no column title".into())),
    }
    let counts = rows
        .map(|(line, v)| {
            v.parse::<u64>()
                .map_err(|_| Error::Parse(format!("line {line}: `{v}` is not a non-negative integer count")))
        })
        .collect::<Result<Vec<u64>>>()?;
    let h = CountHistogram {
        bin_width: parse_f64("bin_width_s", &map["bin_width_s"])?,
        counts,
        channel: Channel::parse(&map["channel"])?,
        integration_time: parse_f64("integration_s", &map["integration_s"])?,
        seed: map["seed"]
            .parse()
            .map_err(|_| Error::Parse(format!("header seed: `{}` is not an unsigned integer", map["seed"])))?,
        repetition_rate: parse_f64("repetition_rate_hz", &map["repetition_rate_hz"])?,
        group_index: parse_f64("group_index", &map["group_index"])?,
    };
    if !(h.bin_width > 0.0 && h.repetition_rate > 0.0 && h.group_index > 0.0 && h.integration_time >= 0.0) {
        return Err(Error::Parse("trace header values out of range".into()));
    }
    Ok(h)
}

pub fn read_trace_file(path: &Path) -> Result<CountHistogram> {
    read_trace(&read_to_string(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_trace_file(path: &Path, h: &CountHistogram) -> Result<()> {
    write_bytes(path, write_trace(h).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CountHistogram {
        CountHistogram {
            bin_width: 100e-12,
            counts: vec![0, 7, 10_004, 3],
            channel: Channel::Stokes,
            integration_time: 300.0,
            seed: 42,
            repetition_rate: 2.5e6,
            group_index: 1.468,
        }
    }

    #[test]
    fn round_trip() {
        let h = sample();
        let text = write_trace(&h);
        assert!(text.starts_with("# schema=rdts-trace/1\n# channel=S\n"));
        assert_eq!(read_trace(&text).unwrap(), h);
    }

    #[test]
    fn rejects_bad_input() {
        let text = write_trace(&sample());
        assert!(read_trace("").is_err());
        assert!(read_trace(&text.replace("10004", "-3")).is_err());
        assert!(read_trace(&text.replace("# seed=42\n", "")).is_err());
        assert!(read_trace(&text.replace("rdts-trace/1", "rdts-trace/9")).is_err());
        assert!(read_trace(&format!("# colour=red\n{text}")).is_err());
    }

    #[test]
    fn empty_histogram_round_trips() {
        let mut h = sample();
        h.counts.clear();
        assert_eq!(read_trace(&write_trace(&h)).unwrap(), h);
    }
}
