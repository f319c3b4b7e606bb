//! Pulse schedules: the instruction stream shared by the compiler and the
//! engine.
//!
//! A schedule is an ordered list of events that run back to back from
//! t = 0. Carriers are phase-coherent and referenced to schedule time 0,
//! so two pulses at the same frequency separated by other events share
//! one rotating frame.

mod text;

pub use text::{parse, render, ParseError, ParseErrorKind};

use crate::hamiltonian::{Channel, System, Transition};
use crate::{Error, Result};

/// How long a pulse lasts: an explicit duration or a flip angle that is
/// converted through `flip = 360·rabi·duration`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseLength {
    /// Seconds.
    Duration(f64),
    /// Degrees.
    Flip(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseEvent {
    pub channel: Channel,
    /// Carrier frequency, Hz.
    pub freq: f64,
    /// Carrier phase offset, degrees.
    pub phase: f64,
    /// Rabi frequency on the target transition, Hz.
    pub rabi: f64,
    pub length: PulseLength,
    pub target: Transition,
    /// Ideal delta pulse: the engine applies the exact rotation in zero time.
    pub instantaneous: bool,
}

impl PulseEvent {
    /// Wall-clock duration; zero for instantaneous pulses.
    pub fn duration(&self) -> f64 {
        if self.instantaneous {
            return 0.0;
        }
        match self.length {
            PulseLength::Duration(d) => d,
            PulseLength::Flip(f) => f / (360.0 * self.rabi),
        }
    }

    /// Rotation angle on the target transition, degrees.
    pub fn flip(&self) -> f64 {
        match self.length {
            PulseLength::Flip(f) => f,
            PulseLength::Duration(d) => 360.0 * self.rabi * d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.freq.is_finite() && self.freq > 0.0) {
            return bad(format!("pulse frequency must be positive, got {}", self.freq));
        }
        if !self.phase.is_finite() {
            return bad("pulse phase must be finite".into());
        }
        if !(self.rabi.is_finite() && self.rabi >= 0.0) || (!self.instantaneous && self.rabi == 0.0) {
            return bad(format!("pulse Rabi frequency must be positive, got {}", self.rabi));
        }
        match self.length {
            PulseLength::Duration(d) if !(d.is_finite() && d >= 0.0) => {
                return bad(format!("pulse duration must be non-negative, got {d}"));
            }
            PulseLength::Duration(_) if self.instantaneous && self.rabi == 0.0 => {
                return bad("instantaneous pulse given by duration needs a Rabi frequency".into());
            }
            PulseLength::Flip(f) if !f.is_finite() => return bad("flip angle must be finite".into()),
            _ => {}
        }
        if self.target.channel() != Some(self.channel) {
            return bad(format!("target {} is not a {} transition", self.target, self.channel));
        }
        Ok(())
    }
}

/// Zero-duration frame rotation of one channel: all later pulses on that
/// channel are phase shifted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualZ {
    pub channel: Channel,
    /// Degrees.
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Pulse(PulseEvent),
    Delay { duration: f64 },
    VirtualZ(VirtualZ),
    LaserInit,
    Measure { label: String },
}

impl Event {
    pub fn duration(&self) -> f64 {
        match self {
            Event::Pulse(p) => p.duration(),
            Event::Delay { duration } => *duration,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Schedule {
    pub system: Option<System>,
    /// Free-form header text, one entry per line.
    pub comment: Vec<String>,
    events: Vec<Event>,
}

impl Schedule {
    pub fn new(system: Option<System>) -> Self {
        Self { system, comment: Vec::new(), events: Vec::new() }
    }

    pub fn from_events(system: Option<System>, events: Vec<Event>) -> Result<Self> {
        let mut s = Self::new(system);
        for e in events {
            s.push(e)?;
        }
        Ok(s)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Appends an event, enforcing the structural invariants.
    pub fn push(&mut self, event: Event) -> Result<()> {
        match &event {
            Event::LaserInit if !self.events.is_empty() => {
                return Err(Error::InvalidParameter("laser initialisation must be the first event".into()));
            }
            Event::Pulse(p) => p.validate()?,
            Event::Delay { duration } if !(duration.is_finite() && *duration >= 0.0) => {
                return Err(Error::InvalidParameter(format!("delay must be non-negative, got {duration}")));
            }
            Event::VirtualZ(vz) if !vz.angle.is_finite() => {
                return Err(Error::InvalidParameter("virtual-z angle must be finite".into()));
            }
            _ => {}
        }
        self.events.push(event);
        Ok(())
    }

    pub fn extend(&mut self, other: Schedule) -> Result<()> {
        for e in other.events {
            self.push(e)?;
        }
        Ok(())
    }

    pub fn system_or_default(&self) -> System {
        self.system.unwrap_or_default()
    }

    /// Start time of every event.
    pub fn start_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.events
            .iter()
            .map(|e| {
                let start = t;
                t += e.duration();
                start
            })
            .collect()
    }

    pub fn total_duration(&self) -> f64 {
        total_duration(self)
    }

    pub fn pulses(&self) -> impl Iterator<Item = &PulseEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Pulse(p) => Some(p),
            _ => None,
        })
    }
}

/// Sum of all timed events; instantaneous pulses and frame changes count zero.
pub fn total_duration(schedule: &Schedule) -> f64 {
    schedule.events.iter().map(Event::duration).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LevelIndex;

    fn rf(dur: f64) -> PulseEvent {
        PulseEvent {
            channel: Channel::Rf,
            freq: 4.9761e6,
            phase: 0.0,
            rabi: 9.05e3,
            length: PulseLength::Duration(dur),
            target: Transition::new(LevelIndex { ms: 0, mi: 0 }, LevelIndex { ms: 0, mi: -1 }),
            instantaneous: false,
        }
    }

    #[test]
    fn durations() {
        assert_eq!(Schedule::default().total_duration(), 0.0);
        let s = Schedule::from_events(None, vec![Event::Delay { duration: 10e-6 }, Event::Delay { duration: 5e-6 }])
            .unwrap();
        assert!((s.total_duration() - 15e-6).abs() < 1e-18);

        let s = Schedule::from_events(Some(System::A), vec![Event::Pulse(rf(2.0 / 9050.0))]).unwrap();
        assert!((s.total_duration() - 220.99e-6).abs() < 0.01e-6);
    }

    #[test]
    fn flip_duration_identity() {
        let mut p = rf(0.0);
        p.rabi = 2.8e5;
        p.length = PulseLength::Flip(90.0);
        assert!((p.duration() - 90.0 / (360.0 * 2.8e5)).abs() < 1e-20);
        assert!((p.flip() - 360.0 * p.rabi * p.duration()).abs() <= 1e-12 * 90.0);
        p.instantaneous = true;
        assert_eq!(p.duration(), 0.0);
    }

    #[test]
    fn laser_must_be_first() {
        let mut s = Schedule::new(None);
        s.push(Event::Delay { duration: 1e-6 }).unwrap();
        assert!(s.push(Event::LaserInit).is_err());
        let mut s = Schedule::new(None);
        s.push(Event::LaserInit).unwrap();
        assert!(s.push(Event::LaserInit).is_err());
    }

    #[test]
    fn rejects_bad_pulses() {
        let mut s = Schedule::new(None);
        assert!(s.push(Event::Pulse(rf(-1e-6))).is_err());
        let mut p = rf(1e-6);
        p.target = Transition::mw_main();
        assert!(s.push(Event::Pulse(p)).is_err());
    }
}
