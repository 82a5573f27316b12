//! The canonical 200-feature schema.
//!
//! Features are identified by human-readable names ("Mean Frequency - C3",
//! "Correlation - C3_C4", "GSR_MaxPhasic", ...). The shipped name list in
//! `assets/feature_schema.txt` is the source of truth; [`descriptors`]
//! regenerates it programmatically and extraction walks the same
//! descriptor list, so names and values can never drift apart.

use std::collections::HashMap;
use std::sync::LazyLock;

use crate::signal::EEG_CHANNELS;

/// Width of every feature vector produced by extraction.
pub const FEATURE_COUNT: usize = 200;

/// Canonical band names, low-to-high.
pub const BAND_NAMES: [&str; 4] = ["Delta", "Theta", "Alpha", "Beta"];

/// Per-channel time-domain statistics, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeStat {
    Mean,
    Variance,
    PeakToPeak,
    MeanFrequency,
    Rms,
    SignalEnergy,
}

impl TimeStat {
    pub const ALL: [TimeStat; 6] = [
        TimeStat::Mean,
        TimeStat::Variance,
        TimeStat::PeakToPeak,
        TimeStat::MeanFrequency,
        TimeStat::Rms,
        TimeStat::SignalEnergy,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TimeStat::Mean => "Mean",
            TimeStat::Variance => "Variance",
            TimeStat::PeakToPeak => "Peak-to-peak",
            TimeStat::MeanFrequency => "Mean Frequency",
            TimeStat::Rms => "RMS",
            TimeStat::SignalEnergy => "Signal Energy",
        }
    }
}

/// Statistics computed on band-limited EEG, in schema order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandStat {
    SumSquare,
    Variance,
    Rms,
    PeakToPeak,
}

impl BandStat {
    pub fn label(self) -> &'static str {
        match self {
            BandStat::SumSquare => "SumSquare",
            BandStat::Variance => "Variance",
            BandStat::Rms => "RMS",
            BandStat::PeakToPeak => "Peak-to-peak",
        }
    }
}

/// One slot in the feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Descriptor {
    /// Time-domain statistic of one EEG channel.
    TimeStat { channel: &'static str, stat: TimeStat },
    /// Pearson correlation between two EEG channels, names ordered
    /// lexicographically.
    Correlation { a: &'static str, b: &'static str },
    /// Maximum of the phasic skin-conductance component.
    GsrMaxPhasic,
    /// Mean of the tonic skin-conductance component.
    GsrMeanTonic,
    /// Variance of the phasic skin-conductance component.
    GsrPhasicVariance,
    /// Time-domain statistic of the raw skin-conductance channel.
    GsrTimeStat { stat: TimeStat },
    /// Statistic of one EEG channel after band-limiting.
    BandStat {
        channel: &'static str,
        band: usize, // index into BAND_NAMES / FrequencyBand::canonical()
        stat: BandStat,
    },
}

impl Descriptor {
    /// The feature name this descriptor renders to.
    pub fn name(&self) -> String {
        match self {
            Descriptor::TimeStat { channel, stat } => format!("{} - {channel}", stat.label()),
            Descriptor::Correlation { a, b } => format!("Correlation - {a}_{b}"),
            Descriptor::GsrMaxPhasic => "GSR_MaxPhasic".to_string(),
            Descriptor::GsrMeanTonic => "GSR_MeanTonic".to_string(),
            Descriptor::GsrPhasicVariance => "GSR_PhasicVariance".to_string(),
            Descriptor::GsrTimeStat { stat } => format!("{} - GSR", stat.label()),
            Descriptor::BandStat { channel, band, stat } => {
                format!("{} of {} band - {channel}", stat.label(), BAND_NAMES[*band])
            }
        }
    }
}

/// The full descriptor list, truncated to exactly [`FEATURE_COUNT`] slots.
///
/// Layout: 48 per-channel time statistics, 28 channel correlations, 9
/// skin-conductance features, then band statistics (sum-square and
/// variance for every channel/band, RMS for every channel/band, and as
/// many band peak-to-peak entries as fit).
pub fn descriptors() -> Vec<Descriptor> {
    let mut out = Vec::with_capacity(FEATURE_COUNT + 32);

    for channel in EEG_CHANNELS {
        for stat in TimeStat::ALL {
            out.push(Descriptor::TimeStat { channel, stat });
        }
    }

    let mut sorted = EEG_CHANNELS;
    sorted.sort_unstable();
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            out.push(Descriptor::Correlation {
                a: sorted[i],
                b: sorted[j],
            });
        }
    }

    out.push(Descriptor::GsrMaxPhasic);
    out.push(Descriptor::GsrMeanTonic);
    out.push(Descriptor::GsrPhasicVariance);
    for stat in TimeStat::ALL {
        out.push(Descriptor::GsrTimeStat { stat });
    }

    for channel in EEG_CHANNELS {
        for band in 0..BAND_NAMES.len() {
            out.push(Descriptor::BandStat {
                channel,
                band,
                stat: BandStat::SumSquare,
            });
            out.push(Descriptor::BandStat {
                channel,
                band,
                stat: BandStat::Variance,
            });
        }
    }
    for stat in [BandStat::Rms, BandStat::PeakToPeak] {
        for channel in EEG_CHANNELS {
            for band in 0..BAND_NAMES.len() {
                out.push(Descriptor::BandStat { channel, band, stat });
            }
        }
    }

    out.truncate(FEATURE_COUNT);
    out
}

static SCHEMA: LazyLock<Vec<&'static str>> = LazyLock::new(|| {
    include_str!("../../assets/feature_schema.txt")
        .lines()
        .collect()
});

static INDEX: LazyLock<HashMap<&'static str, usize>> = LazyLock::new(|| {
    feature_schema()
        .iter()
        .enumerate()
        .map(|(i, name)| (*name, i))
        .collect()
});

/// The 200 feature names, in vector order.
pub fn feature_schema() -> &'static [&'static str] {
    &SCHEMA
}

/// Position of a feature name in the schema, if present.
pub fn feature_index(name: &str) -> Option<usize> {
    INDEX.get(name).copied()
}
