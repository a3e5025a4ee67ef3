//! The ten effect classes: nine audio manipulations plus clean bypass.
//!
//! Every effect is a pure, length-preserving transform of a 48 kHz stereo
//! clip. Specs carry the effect id plus a parameter map; missing parameters
//! fall back to the fixed defaults declared here, so a bare id is a complete
//! spec.

mod chorus;
mod compressor;
mod delay;
mod distortion;
mod filters;
mod pitch;
mod reverb;

use crate::audio_io::AudioClip;
use crate::SAMPLE_RATE;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EffectId {
    Chs,
    Cln,
    Cmp,
    Dly,
    Dis,
    Hpf,
    Lpf,
    Ps,
    Rvb,
    Trv,
}

impl EffectId {
    /// All classes in report-column order.
    pub const ALL: [EffectId; 10] = [
        EffectId::Chs,
        EffectId::Cln,
        EffectId::Cmp,
        EffectId::Dly,
        EffectId::Dis,
        EffectId::Hpf,
        EffectId::Lpf,
        EffectId::Ps,
        EffectId::Rvb,
        EffectId::Trv,
    ];

    pub fn code(self) -> &'static str {
        match self {
            EffectId::Chs => "CHS",
            EffectId::Cln => "CLN",
            EffectId::Cmp => "CMP",
            EffectId::Dly => "DLY",
            EffectId::Dis => "DIS",
            EffectId::Hpf => "HPF",
            EffectId::Lpf => "LPF",
            EffectId::Ps => "PS",
            EffectId::Rvb => "RVB",
            EffectId::Trv => "TRV",
        }
    }

    pub fn from_code(code: &str) -> Option<EffectId> {
        EffectId::ALL.iter().copied().find(|id| id.code() == code)
    }

    /// Canonical parameter names and their default values. The defaults are
    /// the fixed classification settings: one headline value per effect
    /// (chorus rate 1 Hz, compressor threshold -50 dB at ratio 5, delay
    /// 0.5 s, drive 25 dB, HPF 2 kHz, LPF 70 Hz, +4 semitones, room 0.8)
    /// plus declared values for everything the headline leaves open.
    pub fn canonical_params(self) -> &'static [(&'static str, f64)] {
        match self {
            EffectId::Chs => &[
                ("rate_hz", 1.0),
                ("depth", 0.25),
                ("centre_delay_ms", 7.0),
                ("feedback", 0.0),
                ("mix", 0.5),
            ],
            EffectId::Cmp => &[
                ("threshold_db", -50.0),
                ("ratio", 5.0),
                ("attack_ms", 1.0),
                ("release_ms", 100.0),
            ],
            EffectId::Dly => &[("delay_s", 0.5), ("feedback", 0.0), ("mix", 0.5)],
            EffectId::Dis => &[("drive_db", 25.0)],
            EffectId::Hpf => &[("cutoff_hz", 2000.0)],
            EffectId::Lpf => &[("cutoff_hz", 70.0)],
            EffectId::Ps => &[("semitones", 4.0)],
            EffectId::Rvb => &[
                ("room_size", 0.8),
                ("damping", 0.5),
                ("wet", 0.33),
                ("dry", 0.4),
                ("width", 1.0),
            ],
            EffectId::Cln | EffectId::Trv => &[],
        }
    }
}

impl fmt::Display for EffectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EffectError {
    #[error("{effect} has no parameter {name:?}")]
    UnknownParam { effect: EffectId, name: String },
    #[error("{effect} parameter {name} = {value}: {reason}")]
    OutOfRange {
        effect: EffectId,
        name: String,
        value: f64,
        reason: &'static str,
    },
    #[error("effects require 48 kHz input, got {0} Hz")]
    UnsupportedRate(u32),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    pub id: EffectId,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl EffectSpec {
    /// Bare spec: id with every parameter at its default.
    pub fn new(id: EffectId) -> Self {
        EffectSpec {
            id,
            params: BTreeMap::new(),
        }
    }

    /// Spec with the full canonical parameter map written out.
    pub fn with_defaults(id: EffectId) -> Self {
        EffectSpec {
            id,
            params: id
                .canonical_params()
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect(),
        }
    }

    pub fn set(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Effective value of a canonical parameter (explicit or default).
    pub fn param(&self, name: &str) -> f64 {
        if let Some(&v) = self.params.get(name) {
            return v;
        }
        self.id
            .canonical_params()
            .iter()
            .find(|&&(k, _)| k == name)
            .map(|&(_, v)| v)
            .unwrap_or_else(|| panic!("{} has no parameter {name:?}", self.id))
    }

    pub fn validate(&self) -> Result<(), EffectError> {
        for (name, &value) in &self.params {
            if !self
                .id
                .canonical_params()
                .iter()
                .any(|&(k, _)| k == name.as_str())
            {
                return Err(EffectError::UnknownParam {
                    effect: self.id,
                    name: name.clone(),
                });
            }
            check_range(self.id, name, value)?;
        }
        Ok(())
    }
}

fn check_range(effect: EffectId, name: &str, value: f64) -> Result<(), EffectError> {
    let fail = |reason| {
        Err(EffectError::OutOfRange {
            effect,
            name: name.to_string(),
            value,
            reason,
        })
    };
    if !value.is_finite() {
        return fail("must be finite");
    }
    match name {
        "cutoff_hz" if !(value > 0.0 && value < 24_000.0) => fail("must lie in (0, 24000)"),
        "ratio" if value < 1.0 => fail("must be >= 1"),
        "mix" | "depth" | "room_size" | "damping" | "width" if !(0.0..=1.0).contains(&value) => {
            fail("must lie in [0, 1]")
        }
        "feedback" if !(0.0..1.0).contains(&value) => fail("must lie in [0, 1)"),
        "rate_hz" if value < 0.0 => fail("must be >= 0"),
        "centre_delay_ms" | "attack_ms" | "release_ms" | "delay_s" if value <= 0.0 => {
            fail("must be > 0")
        }
        "semitones" if value.abs() > 24.0 => fail("must lie in [-24, 24]"),
        "wet" | "dry" if value < 0.0 => fail("must be >= 0"),
        _ => Ok(()),
    }
}

/// Apply one effect to a clip; output length always equals input length.
pub fn apply_effect(clip: &AudioClip, spec: &EffectSpec) -> Result<AudioClip, EffectError> {
    spec.validate()?;
    if clip.sample_rate() != SAMPLE_RATE {
        return Err(EffectError::UnsupportedRate(clip.sample_rate()));
    }
    let out = match spec.id {
        EffectId::Cln => clip.clone(),
        EffectId::Trv => {
            let mut left = clip.channel(0).to_vec();
            let mut right = clip.channel(1).to_vec();
            left.reverse();
            right.reverse();
            AudioClip::new(left, right, clip.sample_rate()).expect("reversal preserves validity")
        }
        EffectId::Chs => chorus::apply(
            clip,
            spec.param("rate_hz"),
            spec.param("depth"),
            spec.param("centre_delay_ms"),
            spec.param("feedback"),
            spec.param("mix"),
        ),
        EffectId::Cmp => compressor::apply(
            clip,
            spec.param("threshold_db"),
            spec.param("ratio"),
            spec.param("attack_ms"),
            spec.param("release_ms"),
        ),
        EffectId::Dly => delay::apply(
            clip,
            spec.param("delay_s"),
            spec.param("feedback"),
            spec.param("mix"),
        ),
        EffectId::Dis => distortion::apply(clip, spec.param("drive_db")),
        EffectId::Hpf => filters::apply_highpass(clip, spec.param("cutoff_hz")),
        EffectId::Lpf => filters::apply_lowpass(clip, spec.param("cutoff_hz")),
        EffectId::Ps => pitch::apply(clip, spec.param("semitones")),
        EffectId::Rvb => reverb::apply(
            clip,
            spec.param("room_size"),
            spec.param("damping"),
            spec.param("wet"),
            spec.param("dry"),
            spec.param("width"),
        ),
    };
    debug_assert_eq!(out.len(), clip.len());
    Ok(out)
}

pub(crate) fn clip_from_f64(left: Vec<f64>, right: Vec<f64>, rate: u32) -> AudioClip {
    let to_f32 = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect();
    AudioClip::new(to_f32(left), to_f32(right), rate).expect("effect produced non-finite output")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub id: EffectId,
    pub param: String,
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    pub scale: SweepScale,
}

fn default_steps() -> usize {
    32
}

/// The four standard parameter sweeps: distortion drive and reverb room size
/// linearly, filter cutoffs logarithmically, 32 steps each.
pub fn standard_sweeps() -> Vec<SweepSpec> {
    let sweep = |id, param: &str, min, max, scale| SweepSpec {
        id,
        param: param.to_string(),
        min,
        max,
        steps: 32,
        scale,
    };
    vec![
        sweep(EffectId::Dis, "drive_db", 0.0, 30.0, SweepScale::Linear),
        sweep(EffectId::Rvb, "room_size", 0.01, 0.99, SweepScale::Linear),
        sweep(EffectId::Hpf, "cutoff_hz", 50.0, 10_000.0, SweepScale::Log),
        sweep(EffectId::Lpf, "cutoff_hz", 50.0, 10_000.0, SweepScale::Log),
    ]
}

/// Parameter values along a sweep.
pub fn sweep_values(sweep: &SweepSpec) -> Result<Vec<f64>, EffectError> {
    if sweep.steps < 2 {
        return Err(EffectError::InvalidSweep(format!(
            "steps = {} (need at least 2)",
            sweep.steps
        )));
    }
    if !(sweep.min.is_finite() && sweep.max.is_finite() && sweep.min <= sweep.max) {
        return Err(EffectError::InvalidSweep(format!(
            "bad range [{}, {}]",
            sweep.min, sweep.max
        )));
    }
    if sweep.scale == SweepScale::Log && sweep.min <= 0.0 {
        return Err(EffectError::InvalidSweep(format!(
            "log scale requires min > 0, got {}",
            sweep.min
        )));
    }
    let last = (sweep.steps - 1) as f64;
    Ok((0..sweep.steps)
        .map(|i| match sweep.scale {
            SweepScale::Linear => sweep.min + i as f64 * (sweep.max - sweep.min) / last,
            SweepScale::Log => sweep.min * (sweep.max / sweep.min).powf(i as f64 / last),
        })
        .collect())
}

/// Expand a sweep into full effect specs: swept parameter stepped, all other
/// parameters at their defaults.
pub fn sweep_specs(sweep: &SweepSpec) -> Result<Vec<EffectSpec>, EffectError> {
    if !sweep
        .id
        .canonical_params()
        .iter()
        .any(|&(k, _)| k == sweep.param)
    {
        return Err(EffectError::UnknownParam {
            effect: sweep.id,
            name: sweep.param.clone(),
        });
    }
    let specs = sweep_values(sweep)?
        .into_iter()
        .map(|v| EffectSpec::with_defaults(sweep.id).set(&sweep.param, v))
        .collect::<Vec<_>>();
    for s in &specs {
        s.validate().map_err(|e| {
            EffectError::InvalidSweep(format!("step leaves parameter out of range: {e}"))
        })?;
    }
    Ok(specs)
}
