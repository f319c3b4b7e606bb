//! Line-oriented schedule text format.
//!
//! ```text
//! # header comment lines
//! system id=a
//! laser
//! mw freq=2626.4MHz rabi=0.28MHz phase=0deg flip=90deg
//! rf freq=2.8161MHz rabi=5.84kHz phase=0deg dur=67.15us target=-1,0:-1,-1
//! delay dur=10us
//! vz channel=mw angle=180deg
//! measure label=p0
//! ```
//!
//! One event per line, keyword first, then `key=value` pairs. `#` starts a
//! comment running to the end of the line; comment lines before the first
//! statement form the schedule header. Values carry a unit suffix from
//! {GHz, MHz, kHz, Hz, s, ms, us, ns, deg}. Pulse keys are `freq`, `rabi`,
//! `phase`, `dur` or `flip` (exactly one), `target=ms,mi:ms,mi` and
//! `mode=ideal|finite`. Without `target`, MW pulses drive |0,0⟩↔|−1,0⟩ and
//! RF pulses drive the ν1 line of the declared system.
//!
//! [`render`] writes every quantity in its base unit with the shortest
//! round-tripping decimal, so render∘parse∘render is a fixpoint.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::{Event, PulseEvent, PulseLength, Schedule, VirtualZ};
use crate::hamiltonian::{Channel, NuclearLine, System, Transition};
use crate::operators::LevelIndex;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown keyword '{0}'")]
    UnknownKeyword(String),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("duplicate key '{0}'")]
    DuplicateKey(String),
    #[error("missing key '{0}'")]
    MissingKey(&'static str),
    #[error("bad unit in '{value}': expected {expected}")]
    Unit { value: String, expected: &'static str },
    #[error("both 'dur' and 'flip' given")]
    DurationAndFlip,
    #[error("negative duration")]
    NegativeDuration,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy)]
enum Quantity {
    Frequency,
    Time,
    Angle,
}

impl Quantity {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Quantity::Frequency => &[("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)],
            Quantity::Time => &[("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9), ("s", 1.0)],
            Quantity::Angle => &[("deg", 1.0)],
        }
    }

    fn expected(self) -> &'static str {
        match self {
            Quantity::Frequency => "a frequency (GHz, MHz, kHz, Hz)",
            Quantity::Time => "a time (s, ms, us, ns)",
            Quantity::Angle => "an angle (deg)",
        }
    }
}

fn parse_quantity(raw: &str, q: Quantity) -> Result<f64, ParseErrorKind> {
    let value = raw.replace('\u{2212}', "-");
    let unit_err = || ParseErrorKind::Unit { value: raw.to_string(), expected: q.expected() };
    for (suffix, scale) in q.units() {
        if let Some(number) = value.strip_suffix(suffix) {
            let x: f64 = number.parse().map_err(|_| unit_err())?;
            if !x.is_finite() {
                return Err(unit_err());
            }
            return Ok(x * scale);
        }
    }
    Err(unit_err())
}

fn parse_level(raw: &str) -> Option<LevelIndex> {
    let (ms, mi) = raw.split_once(',')?;
    LevelIndex::new(ms.trim().parse().ok()?, mi.trim().parse().ok()?).ok()
}

fn parse_target(raw: &str) -> Result<Transition, ParseErrorKind> {
    let bad = || ParseErrorKind::Syntax(format!("target must look like 'ms,mi:ms,mi', got '{raw}'"));
    let (a, b) = raw.split_once(':').ok_or_else(bad)?;
    Ok(Transition::new(parse_level(a).ok_or_else(bad)?, parse_level(b).ok_or_else(bad)?))
}

struct Fields<'a> {
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn new(tokens: &[&'a str], allowed: &[&str]) -> Result<Self, ParseErrorKind> {
        let mut map = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| ParseErrorKind::Syntax(format!("expected key=value, got '{tok}'")))?;
            if !allowed.contains(&k) {
                return Err(ParseErrorKind::UnknownKey(k.to_string()));
            }
            if v.is_empty() {
                return Err(ParseErrorKind::Syntax(format!("empty value for '{k}'")));
            }
            if map.insert(k, v).is_some() {
                return Err(ParseErrorKind::DuplicateKey(k.to_string()));
            }
        }
        Ok(Self { map })
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).copied()
    }

    fn require(&self, key: &'static str) -> Result<&'a str, ParseErrorKind> {
        self.get(key).ok_or(ParseErrorKind::MissingKey(key))
    }

    fn quantity(&self, key: &str, q: Quantity) -> Result<Option<f64>, ParseErrorKind> {
        self.get(key).map(|v| parse_quantity(v, q)).transpose()
    }
}

fn parse_channel(raw: &str) -> Result<Channel, ParseErrorKind> {
    match raw {
        "mw" => Ok(Channel::Mw),
        "rf" => Ok(Channel::Rf),
        other => Err(ParseErrorKind::Syntax(format!("unknown channel '{other}'"))),
    }
}

fn parse_pulse(channel: Channel, tokens: &[&str], system: System) -> Result<PulseEvent, ParseErrorKind> {
    let f = Fields::new(tokens, &["freq", "rabi", "phase", "dur", "flip", "target", "mode"])?;
    let freq = parse_quantity(f.require("freq")?, Quantity::Frequency)?;
    let instantaneous = match f.get("mode") {
        None | Some("finite") => false,
        Some("ideal") => true,
        Some(other) => return Err(ParseErrorKind::Syntax(format!("unknown pulse mode '{other}'"))),
    };
    let rabi = match f.quantity("rabi", Quantity::Frequency)? {
        Some(r) => r,
        None if instantaneous => 0.0,
        None => return Err(ParseErrorKind::MissingKey("rabi")),
    };
    let phase = f.quantity("phase", Quantity::Angle)?.unwrap_or(0.0);
    let length = match (f.quantity("dur", Quantity::Time)?, f.quantity("flip", Quantity::Angle)?) {
        (Some(_), Some(_)) => return Err(ParseErrorKind::DurationAndFlip),
        (Some(d), None) if d < 0.0 => return Err(ParseErrorKind::NegativeDuration),
        (Some(d), None) => PulseLength::Duration(d),
        (None, Some(flip)) => PulseLength::Flip(flip),
        (None, None) => return Err(ParseErrorKind::MissingKey("dur")),
    };
    let target = match f.get("target") {
        Some(raw) => parse_target(raw)?,
        None => match channel {
            Channel::Mw => Transition::mw_main(),
            Channel::Rf => NuclearLine::Nu1.transition(system),
        },
    };
    let pulse = PulseEvent { channel, freq, phase, rabi, length, target, instantaneous };
    pulse.validate().map_err(|e| ParseErrorKind::Invalid(e.to_string()))?;
    Ok(pulse)
}

/// Parses the schedule text format.
pub fn parse(text: &str) -> Result<Schedule, ParseError> {
    let mut schedule = Schedule::new(None);
    let mut in_header = true;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |kind| ParseError { line: line_no, kind };
        let (body, comment) = match raw_line.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw_line, None),
        };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            if let (true, Some(c)) = (in_header, comment) {
                schedule.comment.push(c.strip_prefix(' ').unwrap_or(c).to_string());
            }
            continue;
        }
        in_header = false;
        let (keyword, rest) = (tokens[0], &tokens[1..]);
        let event = match keyword {
            "system" => {
                if schedule.system.is_some() || !schedule.is_empty() {
                    return Err(err(ParseErrorKind::Invalid("'system' must appear once, before any event".into())));
                }
                let f = Fields::new(rest, &["id"]).map_err(err)?;
                let id = f.require("id").map_err(err)?;
                let system = id
                    .parse::<System>()
                    .map_err(|_| err(ParseErrorKind::Syntax(format!("unknown system '{id}'"))))?;
                schedule.system = Some(system);
                continue;
            }
            "laser" => {
                Fields::new(rest, &[]).map_err(err)?;
                Event::LaserInit
            }
            "mw" | "rf" => {
                let channel = parse_channel(keyword).map_err(err)?;
                Event::Pulse(parse_pulse(channel, rest, schedule.system_or_default()).map_err(err)?)
            }
            "delay" => {
                let f = Fields::new(rest, &["dur"]).map_err(err)?;
                let d = parse_quantity(f.require("dur").map_err(err)?, Quantity::Time).map_err(err)?;
                if d < 0.0 {
                    return Err(err(ParseErrorKind::NegativeDuration));
                }
                Event::Delay { duration: d }
            }
            "vz" => {
                let f = Fields::new(rest, &["channel", "angle"]).map_err(err)?;
                let channel = parse_channel(f.require("channel").map_err(err)?).map_err(err)?;
                let angle = parse_quantity(f.require("angle").map_err(err)?, Quantity::Angle).map_err(err)?;
                Event::VirtualZ(VirtualZ { channel, angle })
            }
            "measure" => {
                let f = Fields::new(rest, &["label"]).map_err(err)?;
                Event::Measure { label: f.require("label").map_err(err)?.to_string() }
            }
            other => return Err(err(ParseErrorKind::UnknownKeyword(other.to_string()))),
        };
        schedule.push(event).map_err(|e| err(ParseErrorKind::Invalid(e.to_string())))?;
    }
    Ok(schedule)
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // avoid "-0"
        let x = if self.0 == 0.0 { 0.0 } else { self.0 };
        write!(f, "{x}")
    }
}

/// Canonical text of a schedule.
pub fn render(schedule: &Schedule) -> String {
    let mut out = String::new();
    for line in &schedule.comment {
        let _ = writeln!(out, "# {line}");
    }
    if let Some(system) = schedule.system {
        let _ = writeln!(out, "system id={system}");
    }
    for event in schedule.events() {
        let _ = match event {
            Event::LaserInit => writeln!(out, "laser"),
            Event::Delay { duration } => writeln!(out, "delay dur={}s", Num(*duration)),
            Event::VirtualZ(vz) => writeln!(out, "vz channel={} angle={}deg", vz.channel, Num(vz.angle)),
            Event::Measure { label } => writeln!(out, "measure label={label}"),
            Event::Pulse(p) => {
                let length = match p.length {
                    PulseLength::Duration(d) => format!("dur={}s", Num(d)),
                    PulseLength::Flip(f) => format!("flip={}deg", Num(f)),
                };
                let mode = if p.instantaneous { " mode=ideal" } else { "" };
                writeln!(
                    out,
                    "{} freq={}Hz rabi={}Hz phase={}deg {} target={}{}",
                    p.channel,
                    Num(p.freq),
                    Num(p.rabi),
                    Num(p.phase),
                    length,
                    p.target,
                    mode
                )
            }
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_pulse(text: &str) -> PulseEvent {
        match parse(text).unwrap().events() {
            [Event::Pulse(p)] => p.clone(),
            other => panic!("expected one pulse, got {other:?}"),
        }
    }

    #[test]
    fn parses_rf_pulse_with_units() {
        let p = single_pulse("rf freq=2.8161MHz rabi=5.84kHz phase=0deg dur=67.15us");
        assert_eq!(p.channel, Channel::Rf);
        assert!((p.freq - 2.8161e6).abs() < 1e-6);
        assert!((p.duration() - 6.715e-5).abs() < 1e-15);
    }

    #[test]
    fn flip_converts_to_duration() {
        let p = single_pulse("mw freq=2626.4MHz rabi=0.28MHz flip=90deg phase=0deg");
        assert!((p.duration() - 8.9286e-7).abs() < 1e-10);
        assert!((p.duration() - 90.0 / (360.0 * 2.8e5)).abs() < 1e-20);
        assert_eq!(p.target, Transition::mw_main());
    }

    #[test]
    fn error_cases() {
        let kind = |t: &str| parse(t).unwrap_err().kind;
        assert_eq!(kind("rf freq=2MHz rabi=5kHz dur=-1us"), ParseErrorKind::NegativeDuration);
        assert_eq!(kind("rf freq=2MHz rabi=5kHz dur=\u{2212}1us"), ParseErrorKind::NegativeDuration);
        assert_eq!(kind("rf freq=2MHz rabi=5kHz dur=1us flip=90deg"), ParseErrorKind::DurationAndFlip);
        assert!(matches!(kind("rf freq=2MHz rabi=5kHz dur=1MHz"), ParseErrorKind::Unit { .. }));
        assert!(matches!(kind("rf freq=2 rabi=5kHz dur=1us"), ParseErrorKind::Unit { .. }));
        assert!(matches!(kind("pulse freq=2MHz"), ParseErrorKind::UnknownKeyword(_)));
        assert!(matches!(kind("rf freq=2MHz rabi=5kHz dur=1us color=red"), ParseErrorKind::UnknownKey(_)));
        assert!(matches!(kind("rf freq=2MHz freq=3MHz rabi=5kHz dur=1us"), ParseErrorKind::DuplicateKey(_)));
        assert!(matches!(kind("rf freq=2MHz dur=1us"), ParseErrorKind::MissingKey("rabi")));
        assert!(matches!(kind("delay 10us"), ParseErrorKind::Syntax(_)));
        assert!(matches!(kind("delay dur=1us\nlaser"), ParseErrorKind::Invalid(_)));
        assert!(matches!(kind("rf freq=2MHz rabi=5kHz dur=1us target=0,0:-1,0"), ParseErrorKind::Invalid(_)));
    }

    #[test]
    fn error_reports_line_number() {
        let e = parse("# header\nlaser\n\nbogus x=1\n").unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn vz_render_format() {
        let s = Schedule::from_events(None, vec![Event::VirtualZ(VirtualZ { channel: Channel::Mw, angle: 180.0 })])
            .unwrap();
        assert_eq!(render(&s), "vz channel=mw angle=180deg\n");
    }

    #[test]
    fn render_lines_in_order() {
        let text = "laser\nmw freq=2626.4MHz rabi=0.28MHz flip=90deg\nrf freq=4.9761MHz rabi=9.05kHz dur=10us\n";
        let out = render(&parse(text).unwrap());
        let kinds: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(' ').next().unwrap()).collect();
        assert_eq!(kinds, vec!["laser", "mw", "rf"]);
    }

    #[test]
    fn header_comments_survive() {
        let text = "# protected CR\n#\nsystem id=b # trailing\n# dropped\nlaser\n";
        let s = parse(text).unwrap();
        assert_eq!(s.comment, vec!["protected CR".to_string(), String::new()]);
        assert_eq!(s.system, Some(System::B));
        let once = render(&s);
        assert_eq!(render(&parse(&once).unwrap()), once);
    }

    #[test]
    fn rf_default_target_follows_system() {
        let s = parse("system id=b\nrf freq=4.9239MHz rabi=9kHz dur=1us\n").unwrap();
        let p = s.pulses().next().unwrap();
        assert_eq!(p.target, NuclearLine::Nu1.transition(System::B));
    }
}
