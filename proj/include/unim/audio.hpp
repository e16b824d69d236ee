#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace unim::audio {

struct Waveform {
    std::vector<double> samples;  // mono, in [-1, 1] nominal full scale
    double sample_rate = 48000.0;

    double duration() const {
        return sample_rate > 0 ? samples.size() / sample_rate : 0.0;
    }
};

// RIFF/WAVE reader for PCM 8/16/24-bit and 32-bit float. Multichannel input
// is averaged down to mono. Throws unim::IngestError on malformed files or
// unsupported encodings.
Waveform read_wav(const std::string& path);

// 16-bit PCM writer, used by tests and fixture generation.
void write_wav(const std::string& path, const Waveform& wave);

Waveform resample_linear(const Waveform& wave, double target_rate);

// Magnitude spectrogram, frame-major: mag[t * bins + f].
struct Spectrogram {
    size_t bins = 0;
    size_t frames = 0;
    std::vector<double> mag;

    double at(size_t f, size_t t) const { return mag[t * bins + f]; }
    double& at(size_t f, size_t t) { return mag[t * bins + f]; }
};

// Hann-windowed STFT magnitude. bins = win / 2 + 1.
Spectrogram stft_magnitude(const std::vector<double>& samples, size_t win = 2048,
                           size_t hop = 512);

// Moving average over frequency, applied frame by frame. Width counts bins on
// both sides combined (width 16 averages each bin with its 16-bin window).
Spectrogram smooth_frequency(const Spectrogram& spec, size_t width);

// Crest factor in dB: 20*log10(peak / rms). Throws std::invalid_argument on
// empty input; a silent waveform (rms = 0) returns the defined value 0.0.
double crest_factor_db(const std::vector<double>& samples);

// Per-frame geometric-to-arithmetic mean ratio of the magnitude spectrogram
// (with epsilon stabilizer), median over frames. 1.0 for a constant spectrum,
// near 0 for a single-bin tone.
double spectral_flatness(const Spectrogram& spec, double epsilon = 1e-10);

double logistic(double x, double k, double x0);

// Trapezoidal preference band: 0 outside [lo0, hi0], 1 inside [lo1, hi1],
// linear on the ramps.
double band_score(double x, double lo0, double lo1, double hi1, double hi0);

// Integrated loudness (LUFS) with K-weighting, 400 ms blocks, absolute
// -70 LUFS and relative -10 LU gating. Input must be 48 kHz mono.
double integrated_lufs(const std::vector<double>& samples, double sample_rate);

struct SnrBreakdown {
    double orig = 0.0;   // trimmed-signal power vs lowest-decile frame floor
    double sf = 0.0;     // subband spectral-stability estimate
    double hpss = 0.0;   // harmonic-to-residual after median-filter separation
    double eff = 0.0;    // max of the three
};

struct AudioQualityConfig {
    double target_rate = 48000.0;
    size_t stft_win = 2048;
    size_t stft_hop = 512;
    double min_duration = 0.25;  // seconds, after trimming

    // q_snr logistic
    double snr_k = 0.25;
    double snr_x0 = 18.0;

    // Frequency smoothing applied to the magnitude spectrogram before the
    // flatness cue, so broadband noise reads flat instead of Rayleigh-rough.
    size_t flatness_smooth_bins = 16;

    // Preference bands (lo0, lo1, hi1, hi0). Bandwidth is judged by f95, the
    // frequency below which 95% of the energy sits; values pinned near
    // Nyquist are the signature of broadband noise, values under a few
    // hundred hertz mean there is effectively no content.
    double crest_band[4] = {0.0, 6.0, 14.0, 22.0};
    double lufs_band[4] = {-45.0, -23.0, -14.0, -3.0};
    double dr_band[4] = {0.0, 6.0, 20.0, 45.0};
    double bw_band[4] = {100.0, 300.0, 16000.0, 23500.0};

    // Core terms are clamped to [term_floor, 1] before the geometric mean.
    double term_floor = 0.05;

    // Penalties
    double clip_run_min = 4;          // consecutive near-peak samples
    double clip_level = 0.985;        // fraction of peak counted as clipped
    double gap_floor_db = 40.0;       // interior dropout threshold below p95
    double noise_snr_floor_db = 10.0; // p_noise ramps below this
    double hiss_slope_limit = 1.0;    // positive 4-12 kHz log-power slope per kHz
    double hf_ratio_limit = 0.35;     // >16 kHz power fraction considered hissy
    double low_contrast_floor = 0.25;

    // Bonuses, each capped
    double bonus_cap = 1.15;
};

struct AudioQualityBreakdown {
    // Raw statistics
    SnrBreakdown snr;
    double sf_g = 0.0;
    double crest_db = 0.0;
    double lufs = 0.0;
    double dynamic_range_db = 0.0;
    double f95_hz = 0.0;

    // Core terms, pre-clamp
    double q_snr = 0.0;
    double q_struct = 0.0;
    double q_dr = 0.0;
    double q_lufs = 0.0;
    double q_crest = 0.0;
    double q_bw = 0.0;
    double q_chroma = 0.0;
    double q_contrast = 0.0;
    double q_periodic = 0.0;
    double q_base = 0.0;  // geometric mean of the clamped terms

    // Multiplicative adjustments
    double p_clip = 1.0;
    double p_gap = 1.0;
    double p_noise = 1.0;
    double p_hiss = 1.0;
    double p_hf = 1.0;
    double p_low_contrast = 1.0;
    double b_structure = 1.0;
    double b_periodic = 1.0;

    double score = 0.0;  // final, clamped to [0, 1]
};

// Signal statistics score for an audio asset. The waveform is resampled to
// 48 kHz, mean-removed, and energy-trimmed before analysis. Throws
// unim::IngestError for clips shorter than the configured minimum.
AudioQualityBreakdown audio_quality(const Waveform& wave,
                                    const AudioQualityConfig& config = {});

AudioQualityBreakdown audio_quality_file(const std::string& path,
                                         const AudioQualityConfig& config = {});

// Exposed for tests: the three SNR estimators on a prepared (resampled,
// trimmed) waveform and its spectrogram.
SnrBreakdown effective_snr(const std::vector<double>& samples, double sample_rate,
                           const Spectrogram& spec);

}  // namespace unim::audio
