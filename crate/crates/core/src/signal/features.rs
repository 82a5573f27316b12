//! Feature computations: time-domain statistics, spectral statistics,
//! band-limiting, channel correlation, and skin-conductance decomposition.

use std::cell::RefCell;
use std::collections::HashMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::schema::{self, BandStat, Descriptor, TimeStat, FEATURE_COUNT};
use crate::signal::{FrequencyBand, SignalRecording, EEG_CHANNELS, GSR_CHANNEL};

thread_local! {
    // rustfft caches plans per planner instance; one planner per thread
    // keeps repeated extraction cheap.
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn dft(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(x.len()).process(&mut buf));
    buf
}

fn idft_real(mut buf: Vec<Complex<f64>>) -> Vec<f64> {
    let n = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf.into_iter().map(|c| c.re / n as f64).collect()
}

fn require_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSignal(format!(
            "{what} contains non-finite samples"
        )));
    }
    Ok(())
}

fn require_rate(sampling_rate: f64) -> Result<()> {
    if !(sampling_rate > 0.0) || !sampling_rate.is_finite() {
        return Err(Error::InvalidSignal(format!(
            "sampling rate must be positive, got {sampling_rate}"
        )));
    }
    Ok(())
}

/// Time-domain summary statistics of one signal.
///
/// `variance` is the population variance; `signal_energy` is the sum of
/// squared samples and `rms` its per-sample root mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainFeatures {
    pub mean: f64,
    pub variance: f64,
    pub peak_to_peak: f64,
    pub rms: f64,
    pub signal_energy: f64,
}

/// Compute [`TimeDomainFeatures`] for a non-empty, finite signal.
pub fn time_domain_features(x: &[f64]) -> Result<TimeDomainFeatures> {
    if x.is_empty() {
        return Err(Error::InvalidSignal("signal is empty".into()));
    }
    require_finite(x, "signal")?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let variance = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in x {
        min = min.min(v);
        max = max.max(v);
    }
    let signal_energy = x.iter().map(|v| v * v).sum::<f64>();
    Ok(TimeDomainFeatures {
        mean,
        variance,
        peak_to_peak: max - min,
        rms: (signal_energy / n).sqrt(),
        signal_energy,
    })
}

fn centroid_from_spectrum(spectrum: &[Complex<f64>], sampling_rate: f64) -> Result<f64> {
    let n = spectrum.len();
    let mut num = 0.0;
    let mut den = 0.0;
    // One-sided support: bins 0 through n/2 (the Nyquist bin when n is
    // even). Mirrored bins carry the same power and would not move the
    // centroid, so they are simply skipped.
    for (k, c) in spectrum.iter().enumerate().take(n / 2 + 1) {
        let power = c.norm_sqr();
        num += k as f64 * sampling_rate / n as f64 * power;
        den += power;
    }
    if den == 0.0 {
        return Err(Error::UndefinedSpectrum);
    }
    Ok(num / den)
}

/// Power-weighted mean frequency (spectral centroid) in Hz.
///
/// Errors with [`Error::UndefinedSpectrum`] when the signal carries no
/// power at all (every sample zero).
pub fn mean_frequency(x: &[f64], sampling_rate: f64) -> Result<f64> {
    require_rate(sampling_rate)?;
    if x.len() < 4 {
        return Err(Error::InvalidSignal(format!(
            "need at least 4 samples for a usable spectrum, got {}",
            x.len()
        )));
    }
    require_finite(x, "signal")?;
    centroid_from_spectrum(&dft(x), sampling_rate)
}

fn band_limit_spectrum(
    spectrum: &[Complex<f64>],
    sampling_rate: f64,
    band: &FrequencyBand,
) -> Result<Vec<f64>> {
    let n = spectrum.len();
    let mut masked = vec![Complex::new(0.0, 0.0); n];
    let mut kept = 0usize;
    for (k, c) in spectrum.iter().enumerate() {
        // Fold to the physical frequency so each negative-frequency bin
        // follows its positive twin and the output stays real.
        let folded = k.min(n - k);
        let f = folded as f64 * sampling_rate / n as f64;
        if f >= band.low_hz && f < band.high_hz {
            masked[k] = *c;
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::EmptyBand {
            band: band.name.clone(),
            nyquist: sampling_rate / 2.0,
        });
    }
    Ok(idft_real(masked))
}

/// Reconstruct the signal from only the DFT bins inside `band`.
///
/// The mask is half-open (`low_hz <= f < high_hz`) and applied
/// symmetrically to positive and negative frequencies, so the result is
/// real and band-limiting is linear: summing the outputs for two bands
/// equals band-limiting with the union when the bands are disjoint.
pub fn band_limit(x: &[f64], sampling_rate: f64, band: &FrequencyBand) -> Result<Vec<f64>> {
    require_rate(sampling_rate)?;
    if x.len() < 2 {
        return Err(Error::InvalidSignal(format!(
            "need at least 2 samples for a spectrum, got {}",
            x.len()
        )));
    }
    require_finite(x, "signal")?;
    band_limit_spectrum(&dft(x), sampling_rate, band)
}

/// Statistics of one band-limited signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandFeatures {
    pub sum_square: f64,
    pub variance: f64,
    pub rms: f64,
    pub peak_to_peak: f64,
}

/// Band-limit `x` and summarise the result.
pub fn band_features(x: &[f64], sampling_rate: f64, band: &FrequencyBand) -> Result<BandFeatures> {
    if x.len() < 4 {
        return Err(Error::InvalidSignal(format!(
            "need at least 4 samples for a usable spectrum, got {}",
            x.len()
        )));
    }
    let limited = band_limit(x, sampling_rate, band)?;
    let t = time_domain_features(&limited)?;
    Ok(BandFeatures {
        sum_square: t.signal_energy,
        variance: t.variance,
        rms: t.rms,
        peak_to_peak: t.peak_to_peak,
    })
}

/// Pearson correlation between two equally long signals.
///
/// Errors with [`Error::UndefinedCorrelation`] when either signal has
/// zero variance.
pub fn channel_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidSignal(format!(
            "correlation needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidSignal("signal is empty".into()));
    }
    require_finite(a, "first signal")?;
    require_finite(b, "second signal")?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&va, &vb) in a.iter().zip(b) {
        let da = va - ma;
        let db = vb - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "at least one signal has zero variance".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Tonic/phasic split of a skin-conductance signal.
#[derive(Debug, Clone, PartialEq)]
pub struct GsrDecomposition {
    pub tonic: Vec<f64>,
    pub phasic: Vec<f64>,
    /// Largest phasic excursion; the event-reactivity feature.
    pub max_phasic: f64,
}

fn moving_median(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let half = window / 2;
    let mut out = Vec::with_capacity(n);
    let mut buf: Vec<f64> = Vec::with_capacity(window);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + (window - half)).min(n);
        buf.clear();
        buf.extend_from_slice(&x[lo..hi]);
        let m = buf.len();
        let mid = m / 2;
        let (left, pivot, _) = buf.select_nth_unstable_by(mid, |p, q| p.total_cmp(q));
        let median = if m % 2 == 1 {
            *pivot
        } else {
            let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (*pivot + lower) / 2.0
        };
        out.push(median);
    }
    out
}

/// Split skin conductance into a slow tonic level and a fast phasic
/// residual.
///
/// The tonic component is a centred moving median over `window_s`
/// seconds (windows shrink at the edges); the phasic component is the
/// remainder, so `tonic[i] + phasic[i]` reconstructs the input. Samples
/// are conductances and must be non-negative. Errors when the window is
/// non-positive or longer than the signal.
pub fn gsr_decompose(x: &[f64], sampling_rate: f64, window_s: f64) -> Result<GsrDecomposition> {
    require_rate(sampling_rate)?;
    if x.is_empty() {
        return Err(Error::InvalidSignal("signal is empty".into()));
    }
    require_finite(x, "signal")?;
    if x.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidSignal(
            "conductance samples must be non-negative".into(),
        ));
    }
    if !(window_s > 0.0) || !window_s.is_finite() {
        return Err(Error::InvalidWindow(format!(
            "window must be positive, got {window_s} s"
        )));
    }
    let window = ((window_s * sampling_rate).round() as usize).max(1);
    if window > x.len() {
        return Err(Error::InvalidWindow(format!(
            "window of {window} samples exceeds signal length {}",
            x.len()
        )));
    }
    let tonic = moving_median(x, window);
    let phasic: Vec<f64> = x.iter().zip(&tonic).map(|(v, t)| v - t).collect();
    let max_phasic = phasic.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GsrDecomposition {
        tonic,
        phasic,
        max_phasic,
    })
}

/// Default tonic window in seconds; clipped to the recording length
/// during extraction so short windows still decompose.
pub const GSR_TONIC_WINDOW_S: f64 = 4.0;

/// A feature vector plus the names of features that fell back to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Exactly [`FEATURE_COUNT`] finite values in schema order.
    pub values: Vec<f64>,
    /// Names whose statistic was undefined on this recording (flat
    /// channels, empty bands) and were recorded as 0.0.
    pub degenerate_features: Vec<String>,
}

struct ChannelSummary {
    time: TimeDomainFeatures,
    mean_freq: Option<f64>,
    bands: [Option<BandFeatures>; 4],
}

fn summarise_channel(x: &[f64], sampling_rate: f64) -> Result<ChannelSummary> {
    let time = time_domain_features(x)?;
    let spectrum = dft(x);
    let mean_freq = match centroid_from_spectrum(&spectrum, sampling_rate) {
        Ok(f) => Some(f),
        Err(Error::UndefinedSpectrum) => None,
        Err(e) => return Err(e),
    };
    let mut bands: [Option<BandFeatures>; 4] = [None, None, None, None];
    for (slot, band) in bands.iter_mut().zip(FrequencyBand::canonical()) {
        *slot = match band_limit_spectrum(&spectrum, sampling_rate, &band) {
            Ok(limited) => {
                let t = time_domain_features(&limited)?;
                Some(BandFeatures {
                    sum_square: t.signal_energy,
                    variance: t.variance,
                    rms: t.rms,
                    peak_to_peak: t.peak_to_peak,
                })
            }
            Err(Error::EmptyBand { .. }) => None,
            Err(e) => return Err(e),
        };
    }
    Ok(ChannelSummary {
        time,
        mean_freq,
        bands,
    })
}

fn time_stat_value(t: &TimeDomainFeatures, stat: TimeStat) -> Option<f64> {
    match stat {
        TimeStat::Mean => Some(t.mean),
        TimeStat::Variance => Some(t.variance),
        TimeStat::PeakToPeak => Some(t.peak_to_peak),
        TimeStat::Rms => Some(t.rms),
        TimeStat::SignalEnergy => Some(t.signal_energy),
        TimeStat::MeanFrequency => None, // spectral, handled by the caller
    }
}

fn band_stat_value(b: &BandFeatures, stat: BandStat) -> f64 {
    match stat {
        BandStat::SumSquare => b.sum_square,
        BandStat::Variance => b.variance,
        BandStat::Rms => b.rms,
        BandStat::PeakToPeak => b.peak_to_peak,
    }
}

/// Reduce a full-montage recording to the 200-entry feature vector.
///
/// Every channel in [`EEG_CHANNELS`] plus [`GSR_CHANNEL`] must be
/// present. Undefined statistics (zero-variance correlations, powerless
/// spectra, bands with no DFT bins) do not abort extraction: the entry
/// becomes 0.0 and its name is reported in
/// [`Extraction::degenerate_features`].
pub fn extract_features(recording: &SignalRecording) -> Result<Extraction> {
    for ch in EEG_CHANNELS {
        if recording.channel(ch).is_none() {
            return Err(Error::Schema(format!("missing channel {ch:?}")));
        }
    }
    let gsr = recording
        .channel(GSR_CHANNEL)
        .ok_or_else(|| Error::Schema(format!("missing channel {GSR_CHANNEL:?}")))?;
    let fs = recording.sampling_rate();

    let mut channels: HashMap<&str, ChannelSummary> = HashMap::new();
    for ch in EEG_CHANNELS {
        channels.insert(ch, summarise_channel(recording.channel(ch).unwrap(), fs)?);
    }

    let gsr_time = time_domain_features(gsr)?;
    let gsr_mean_freq = match mean_frequency(gsr, fs) {
        Ok(f) => Some(f),
        Err(Error::UndefinedSpectrum) => None,
        Err(e) => return Err(e),
    };
    let window_s = GSR_TONIC_WINDOW_S.min(recording.duration_s());
    let decomposition = gsr_decompose(gsr, fs, window_s)?;
    let max_phasic = decomposition.max_phasic;
    let mean_tonic = decomposition.tonic.iter().sum::<f64>() / decomposition.tonic.len() as f64;
    let phasic_variance = time_domain_features(&decomposition.phasic)?.variance;

    let mut values = Vec::with_capacity(FEATURE_COUNT);
    let mut degenerate = Vec::new();
    for descriptor in schema::descriptors() {
        let value = match &descriptor {
            Descriptor::TimeStat { channel, stat } => {
                let summary = &channels[channel];
                match time_stat_value(&summary.time, *stat) {
                    Some(v) => v,
                    None => summary.mean_freq.unwrap_or_else(|| {
                        degenerate.push(descriptor.name());
                        0.0
                    }),
                }
            }
            Descriptor::Correlation { a, b } => {
                let (xa, xb) = (
                    recording.channel(a).unwrap(),
                    recording.channel(b).unwrap(),
                );
                match channel_correlation(xa, xb) {
                    Ok(r) => r,
                    Err(Error::UndefinedCorrelation(_)) => {
                        degenerate.push(descriptor.name());
                        0.0
                    }
                    Err(e) => return Err(e),
                }
            }
            Descriptor::GsrMaxPhasic => max_phasic,
            Descriptor::GsrMeanTonic => mean_tonic,
            Descriptor::GsrPhasicVariance => phasic_variance,
            Descriptor::GsrTimeStat { stat } => match time_stat_value(&gsr_time, *stat) {
                Some(v) => v,
                None => gsr_mean_freq.unwrap_or_else(|| {
                    degenerate.push(descriptor.name());
                    0.0
                }),
            },
            Descriptor::BandStat {
                channel,
                band,
                stat,
            } => match &channels[channel].bands[*band] {
                Some(b) => band_stat_value(b, *stat),
                None => {
                    degenerate.push(descriptor.name());
                    0.0
                }
            },
        };
        values.push(value);
    }
    debug_assert_eq!(values.len(), FEATURE_COUNT);
    Ok(Extraction {
        values,
        degenerate_features: degenerate,
    })
}
