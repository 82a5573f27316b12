//! EEG/GSR recordings and feature extraction.
//!
//! A [`SignalRecording`] holds one window of multichannel data: eight EEG
//! electrodes plus one skin-conductance channel. [`extract_features`]
//! reduces a recording to the fixed 200-entry feature vector described by
//! [`schema::feature_schema`], and [`synth`] generates labelled recordings
//! with class-conditional structure planted in those features.

mod features;
pub mod schema;
pub mod synth;

pub use features::{
    band_features, band_limit, channel_correlation, extract_features, gsr_decompose,
    mean_frequency, time_domain_features, BandFeatures, Extraction, GsrDecomposition,
    TimeDomainFeatures,
};
pub use synth::{synth_corpus, synth_generate, synth_generate_class, ClassProfile, SynthSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::schema::FEATURE_COUNT;

/// EEG electrode names, montage order.
pub const EEG_CHANNELS: [&str; 8] = ["F3", "F4", "C3", "C4", "Cz", "P3", "P4", "POz"];

/// Skin-conductance channel name.
pub const GSR_CHANNEL: &str = "GSR";

fn is_montage_channel(name: &str) -> bool {
    name == GSR_CHANNEL || EEG_CHANNELS.contains(&name)
}

/// One window of multichannel signal data.
///
/// EEG samples are in microvolts, GSR samples in microsiemens. Channels
/// keep their insertion order; all channels share one sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecording {
    channels: Vec<(String, Vec<f64>)>,
    sampling_rate: f64,
}

impl SignalRecording {
    /// Build a recording, validating channel names, lengths and rate.
    pub fn new(channels: Vec<(String, Vec<f64>)>, sampling_rate: f64) -> Result<Self> {
        if !(sampling_rate > 0.0) || !sampling_rate.is_finite() {
            return Err(Error::InvalidSignal(format!(
                "sampling rate must be positive, got {sampling_rate}"
            )));
        }
        if channels.is_empty() {
            return Err(Error::InvalidSignal("recording has no channels".into()));
        }
        let len = channels[0].1.len();
        if len < 2 {
            return Err(Error::InvalidSignal(format!(
                "channels need at least 2 samples, got {len}"
            )));
        }
        let mut seen = Vec::new();
        for (name, samples) in &channels {
            if !is_montage_channel(name) {
                return Err(Error::InvalidSignal(format!(
                    "unknown channel {name:?}; montage is {EEG_CHANNELS:?} plus {GSR_CHANNEL:?}"
                )));
            }
            if seen.contains(name) {
                return Err(Error::InvalidSignal(format!("duplicate channel {name:?}")));
            }
            seen.push(name.clone());
            if samples.len() != len {
                return Err(Error::InvalidSignal(format!(
                    "channel {name:?} has {} samples, expected {len}",
                    samples.len()
                )));
            }
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSignal(format!(
                    "channel {name:?} contains non-finite samples"
                )));
            }
        }
        Ok(SignalRecording {
            channels,
            sampling_rate,
        })
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].1.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: >= 2 samples
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sampling_rate
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_slice())
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(n, _)| n.as_str())
    }
}

/// A frequency band `[low_hz, high_hz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl FrequencyBand {
    pub fn new(name: impl Into<String>, low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(low_hz >= 0.0 && low_hz < high_hz) {
            return Err(Error::Parameter(format!(
                "band edges must satisfy 0 <= low < high, got [{low_hz}, {high_hz})"
            )));
        }
        Ok(FrequencyBand {
            name: name.into(),
            low_hz,
            high_hz,
        })
    }

    pub fn delta() -> Self {
        FrequencyBand::new("Delta", 0.0, 4.0).unwrap()
    }

    pub fn theta() -> Self {
        FrequencyBand::new("Theta", 4.0, 8.0).unwrap()
    }

    pub fn alpha() -> Self {
        FrequencyBand::new("Alpha", 8.0, 16.0).unwrap()
    }

    /// Note: Beta starts at 12 Hz and overlaps Alpha's upper edge. The
    /// overlap is intentional; band accounting in callers must not assume
    /// a disjoint tiling.
    pub fn beta() -> Self {
        FrequencyBand::new("Beta", 12.0, 30.0).unwrap()
    }

    /// The four canonical bands in Delta/Theta/Alpha/Beta order.
    pub fn canonical() -> [FrequencyBand; 4] {
        [
            FrequencyBand::delta(),
            FrequencyBand::theta(),
            FrequencyBand::alpha(),
            FrequencyBand::beta(),
        ]
    }
}

/// A 200-entry feature vector in [`schema::feature_schema`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// 1 = trust, 0 = distrust; `None` for unlabelled records.
    pub label: Option<u8>,
    pub subject: i64,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, label: Option<u8>, subject: i64) -> Result<Self> {
        if values.len() != FEATURE_COUNT {
            return Err(Error::Schema(format!(
                "feature vector must have {FEATURE_COUNT} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("feature vector contains non-finite values".into()));
        }
        if let Some(l) = label {
            if l > 1 {
                return Err(Error::Label(l.to_string()));
            }
        }
        Ok(FeatureVector {
            values,
            label,
            subject,
        })
    }
}
