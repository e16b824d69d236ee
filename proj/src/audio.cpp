#include "unim/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>

#include "unim/common.hpp"

namespace unim::audio {

namespace {

constexpr double kEps = 1e-12;

// FFTW plan creation is not thread-safe; execution of distinct plans is.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(size_t n) : n_(n) {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    size_t size() const { return n_; }
    size_t bins() const { return n_ / 2 + 1; }

    // src must hold n samples; dst gets n/2+1 complex bins.
    void execute(const double* src, std::complex<double>* dst) {
        std::memcpy(in_, src, n_ * sizeof(double));
        fftw_execute(plan_);
        for (size_t i = 0; i < bins(); ++i)
            dst[i] = {out_[i][0], out_[i][1]};
    }

private:
    size_t n_;
    double* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

uint32_t read_u32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (uint32_t(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) { return p[0] | (p[1] << 8); }

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double pos = p * (v.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - lo;
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

double median(std::vector<double> v) { return percentile(std::move(v), 0.5); }

std::vector<double> frame_rms(const std::vector<double>& x, size_t win, size_t hop) {
    std::vector<double> out;
    if (x.size() < win) {
        double ms = 0.0;
        for (double s : x) ms += s * s;
        out.push_back(std::sqrt(ms / std::max<size_t>(1, x.size())));
        return out;
    }
    for (size_t start = 0; start + win <= x.size(); start += hop) {
        double ms = 0.0;
        for (size_t i = 0; i < win; ++i) ms += x[start + i] * x[start + i];
        out.push_back(std::sqrt(ms / win));
    }
    return out;
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot open audio file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw IngestError("not a RIFF/WAVE file: " + path);

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    size_t data_off = 0, data_len = 0;
    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        uint32_t chunk_len = read_u32(hdr + 4);
        size_t body = pos + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0 && body + 16 <= bytes.size()) {
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            // WAVE_FORMAT_EXTENSIBLE: actual format is in the GUID prefix.
            if (format == 0xFFFE && chunk_len >= 40 && body + 26 <= bytes.size())
                format = read_u16(bytes.data() + body + 24);
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data_off = body;
            data_len = std::min<size_t>(chunk_len, bytes.size() - body);
        }
        pos = body + chunk_len + (chunk_len & 1);
    }
    if (rate == 0 || channels == 0 || data_off == 0)
        throw IngestError("missing fmt/data chunk: " + path);
    bool pcm = format == 1;
    bool flt = format == 3;
    if (!pcm && !flt)
        throw IngestError("unsupported WAV encoding (want PCM or float): " + path);
    if (pcm && bits != 8 && bits != 16 && bits != 24)
        throw IngestError("unsupported PCM depth " + std::to_string(bits) +
                          " (want 8/16/24): " + path);
    if (flt && bits != 32)
        throw IngestError("unsupported float depth: " + path);

    size_t bytes_per = bits / 8;
    size_t stride = bytes_per * channels;
    size_t n_frames = stride ? data_len / stride : 0;
    Waveform wave;
    wave.sample_rate = rate;
    wave.samples.resize(n_frames);
    const unsigned char* d = bytes.data() + data_off;
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (size_t c = 0; c < channels; ++c) {
            const unsigned char* s = d + i * stride + c * bytes_per;
            double v = 0.0;
            if (flt) {
                float fv;
                std::memcpy(&fv, s, 4);
                v = fv;
            } else if (bits == 8) {
                v = (static_cast<int>(s[0]) - 128) / 128.0;
            } else if (bits == 16) {
                int16_t iv = static_cast<int16_t>(s[0] | (s[1] << 8));
                v = iv / 32768.0;
            } else {  // 24
                int32_t iv = s[0] | (s[1] << 8) | (s[2] << 16);
                if (iv & 0x800000) iv |= ~0xFFFFFF;
                v = iv / 8388608.0;
            }
            acc += v;
        }
        wave.samples[i] = acc / channels;
    }
    return wave;
}

void write_wav(const std::string& path, const Waveform& wave) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot write audio file: " + path);
    auto put_u32 = [&](uint32_t v) {
        char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
        f.write(b, 4);
    };
    auto put_u16 = [&](uint16_t v) {
        char b[2] = {char(v), char(v >> 8)};
        f.write(b, 2);
    };
    uint32_t n = static_cast<uint32_t>(wave.samples.size());
    f.write("RIFF", 4);
    put_u32(36 + n * 2);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<uint32_t>(wave.sample_rate));
    put_u32(static_cast<uint32_t>(wave.sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    f.write("data", 4);
    put_u32(n * 2);
    for (double s : wave.samples) {
        double c = std::clamp(s, -1.0, 1.0);
        int16_t iv = static_cast<int16_t>(std::lround(c * 32767.0));
        char b[2] = {char(iv & 0xFF), char((iv >> 8) & 0xFF)};
        f.write(b, 2);
    }
}

Waveform resample_linear(const Waveform& wave, double target_rate) {
    if (wave.sample_rate == target_rate || wave.samples.empty()) {
        Waveform out = wave;
        out.sample_rate = target_rate;
        return out;
    }
    double ratio = wave.sample_rate / target_rate;
    size_t out_n = static_cast<size_t>(
        std::max(1.0, std::floor(wave.samples.size() / ratio)));
    Waveform out;
    out.sample_rate = target_rate;
    out.samples.resize(out_n);
    for (size_t i = 0; i < out_n; ++i) {
        double pos = i * ratio;
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, wave.samples.size() - 1);
        double frac = pos - lo;
        out.samples[i] = wave.samples[lo] * (1.0 - frac) + wave.samples[hi] * frac;
    }
    return out;
}

Spectrogram stft_magnitude(const std::vector<double>& samples, size_t win,
                           size_t hop) {
    Spectrogram spec;
    spec.bins = win / 2 + 1;
    if (samples.size() < win || hop == 0) {
        // Zero-pad a short signal into a single frame.
        std::vector<double> padded(win, 0.0);
        std::copy(samples.begin(), samples.end(), padded.begin());
        return stft_magnitude(padded, win, hop ? hop : win);
    }
    std::vector<double> window(win);
    for (size_t i = 0; i < win; ++i)
        window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / win));
    spec.frames = 1 + (samples.size() - win) / hop;
    spec.mag.resize(spec.frames * spec.bins);
    RealFft fft(win);
    std::vector<double> frame(win);
    std::vector<std::complex<double>> out(spec.bins);
    for (size_t t = 0; t < spec.frames; ++t) {
        size_t start = t * hop;
        for (size_t i = 0; i < win; ++i) frame[i] = samples[start + i] * window[i];
        fft.execute(frame.data(), out.data());
        for (size_t f = 0; f < spec.bins; ++f) spec.at(f, t) = std::abs(out[f]);
    }
    return spec;
}

Spectrogram smooth_frequency(const Spectrogram& spec, size_t width) {
    if (width < 2) return spec;
    Spectrogram out = spec;
    size_t half = width / 2;
    for (size_t t = 0; t < spec.frames; ++t) {
        for (size_t f = 0; f < spec.bins; ++f) {
            size_t lo = f > half ? f - half : 0;
            size_t hi = std::min(spec.bins - 1, f + half);
            double acc = 0.0;
            for (size_t g = lo; g <= hi; ++g) acc += spec.at(g, t);
            out.at(f, t) = acc / (hi - lo + 1);
        }
    }
    return out;
}

double crest_factor_db(const std::vector<double>& samples) {
    if (samples.empty())
        throw std::invalid_argument("crest_factor: empty waveform");
    double peak = 0.0, ms = 0.0;
    for (double s : samples) {
        peak = std::max(peak, std::fabs(s));
        ms += s * s;
    }
    double rms = std::sqrt(ms / samples.size());
    if (rms <= 0.0) return 0.0;
    return 20.0 * std::log10(peak / rms);
}

double spectral_flatness(const Spectrogram& spec, double epsilon) {
    if (spec.frames == 0 || spec.bins == 0)
        throw std::invalid_argument("spectral_flatness: empty spectrogram");
    std::vector<double> ratios(spec.frames);
    for (size_t t = 0; t < spec.frames; ++t) {
        double log_sum = 0.0, lin_sum = 0.0;
        for (size_t f = 0; f < spec.bins; ++f) {
            double v = spec.at(f, t) + epsilon;
            log_sum += std::log(v);
            lin_sum += v;
        }
        double gm = std::exp(log_sum / spec.bins);
        double am = lin_sum / spec.bins;
        ratios[t] = am > 0.0 ? gm / am : 1.0;
    }
    return std::clamp(median(std::move(ratios)), 0.0, 1.0);
}

double logistic(double x, double k, double x0) {
    return 1.0 / (1.0 + std::exp(-k * (x - x0)));
}

double band_score(double x, double lo0, double lo1, double hi1, double hi0) {
    if (x <= lo0 || x >= hi0) return 0.0;
    if (x < lo1) return (x - lo0) / (lo1 - lo0);
    if (x <= hi1) return 1.0;
    return (hi0 - x) / (hi0 - hi1);
}

namespace {

// K-weighting prefilter cascade from the integrated-loudness standard, valid
// at 48 kHz.
struct Biquad {
    double b0, b1, b2, a1, a2;
    double z1 = 0.0, z2 = 0.0;

    double step(double x) {
        double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
};

}  // namespace

double integrated_lufs(const std::vector<double>& samples, double sample_rate) {
    if (samples.empty()) return -70.0;
    Biquad shelf{1.53512485958697, -2.69169618940638, 1.19839281085285,
                 -1.69065929318241, 0.73248077421585};
    Biquad highpass{1.0, -2.0, 1.0, -1.99004745483398, 0.99007225036621};
    std::vector<double> w(samples.size());
    for (size_t i = 0; i < samples.size(); ++i)
        w[i] = highpass.step(shelf.step(samples[i]));

    size_t block = static_cast<size_t>(0.400 * sample_rate);
    size_t hop = static_cast<size_t>(0.100 * sample_rate);
    std::vector<double> block_ms;
    if (w.size() < block) {
        double ms = 0.0;
        for (double v : w) ms += v * v;
        block_ms.push_back(ms / w.size());
    } else {
        for (size_t start = 0; start + block <= w.size(); start += hop) {
            double ms = 0.0;
            for (size_t i = 0; i < block; ++i) ms += w[start + i] * w[start + i];
            block_ms.push_back(ms / block);
        }
    }
    auto loudness = [](double ms) { return -0.691 + 10.0 * std::log10(ms + kEps); };
    // Absolute gate at -70 LUFS.
    std::vector<double> gated;
    for (double ms : block_ms)
        if (loudness(ms) > -70.0) gated.push_back(ms);
    if (gated.empty()) return -70.0;
    double mean_ms = std::accumulate(gated.begin(), gated.end(), 0.0) / gated.size();
    // Relative gate 10 LU below the absolute-gated level.
    double rel_gate = loudness(mean_ms) - 10.0;
    std::vector<double> gated2;
    for (double ms : gated)
        if (loudness(ms) > rel_gate) gated2.push_back(ms);
    if (gated2.empty()) return -70.0;
    double final_ms =
        std::accumulate(gated2.begin(), gated2.end(), 0.0) / gated2.size();
    return loudness(final_ms);
}

namespace {

std::vector<double> median_filter(const std::vector<double>& v, size_t half) {
    std::vector<double> out(v.size());
    std::vector<double> window;
    for (size_t i = 0; i < v.size(); ++i) {
        size_t lo = i > half ? i - half : 0;
        size_t hi = std::min(v.size() - 1, i + half);
        window.assign(v.begin() + lo, v.begin() + hi + 1);
        size_t mid = window.size() / 2;
        std::nth_element(window.begin(), window.begin() + mid, window.end());
        out[i] = window[mid];
    }
    return out;
}

double snr_from_frames(const std::vector<double>& x) {
    std::vector<double> energies;
    for (double r : frame_rms(x, 1024, 512)) energies.push_back(r * r);
    if (energies.empty()) return 0.0;
    std::vector<double> sorted = energies;
    std::sort(sorted.begin(), sorted.end());
    size_t decile = std::max<size_t>(1, sorted.size() / 10);
    double floor_power =
        std::accumulate(sorted.begin(), sorted.begin() + decile, 0.0) / decile;
    double total =
        std::accumulate(energies.begin(), energies.end(), 0.0) / energies.size();
    double signal = std::max(total - floor_power, 0.0);
    double snr = 10.0 * std::log10((signal + kEps) / (floor_power + kEps));
    return std::clamp(snr, 0.0, 120.0);
}

double snr_subband_stability(const Spectrogram& spec, double sample_rate) {
    size_t n_bands = 8;
    double f_lo = 100.0, f_hi = std::min(20000.0, sample_rate / 2.0);
    double nyquist = sample_rate / 2.0;
    std::vector<double> ratios;
    for (size_t b = 0; b < n_bands; ++b) {
        double lo = f_lo * std::pow(f_hi / f_lo, double(b) / n_bands);
        double hi = f_lo * std::pow(f_hi / f_lo, double(b + 1) / n_bands);
        size_t bin_lo = static_cast<size_t>(lo / nyquist * (spec.bins - 1));
        size_t bin_hi = static_cast<size_t>(hi / nyquist * (spec.bins - 1));
        if (bin_hi <= bin_lo) continue;
        std::vector<double> powers(spec.frames, 0.0);
        for (size_t t = 0; t < spec.frames; ++t)
            for (size_t f = bin_lo; f < bin_hi; ++f)
                powers[t] += spec.at(f, t) * spec.at(f, t);
        double p95 = percentile(powers, 0.95);
        double p10 = percentile(powers, 0.10);
        if (p95 <= kEps) continue;
        ratios.push_back(10.0 * std::log10((p95 + kEps) / (p10 + kEps)));
    }
    if (ratios.empty()) return 0.0;
    return std::clamp(median(std::move(ratios)), 0.0, 120.0);
}

double snr_hpss(const Spectrogram& spec) {
    const size_t half = 8;  // 17-point median windows
    size_t F = spec.bins, T = spec.frames;
    std::vector<double> power(F * T);
    for (size_t i = 0; i < F * T; ++i) power[i] = spec.mag[i] * spec.mag[i];
    // Harmonic: median along time, per frequency bin.
    std::vector<double> harm(F * T);
    std::vector<double> series(T);
    for (size_t f = 0; f < F; ++f) {
        for (size_t t = 0; t < T; ++t) series[t] = power[t * F + f];
        auto med = median_filter(series, half);
        for (size_t t = 0; t < T; ++t) harm[t * F + f] = med[t];
    }
    // Percussive: median along frequency, per frame.
    std::vector<double> perc(F * T);
    std::vector<double> column(F);
    for (size_t t = 0; t < T; ++t) {
        for (size_t f = 0; f < F; ++f) column[f] = power[t * F + f];
        auto med = median_filter(column, half);
        for (size_t f = 0; f < F; ++f) perc[t * F + f] = med[f];
    }
    double ph = 0.0, pr = 0.0;
    for (size_t i = 0; i < F * T; ++i) {
        double h2 = harm[i] * harm[i];
        double p2 = perc[i] * perc[i];
        double mask = h2 / (h2 + p2 + kEps);
        ph += mask * power[i];
        pr += (1.0 - mask) * power[i];
    }
    double snr = 10.0 * std::log10((ph + kEps) / (pr + kEps));
    return std::clamp(snr, 0.0, 120.0);
}

}  // namespace

SnrBreakdown effective_snr(const std::vector<double>& samples, double sample_rate,
                           const Spectrogram& spec) {
    SnrBreakdown out;
    out.orig = snr_from_frames(samples);
    out.sf = snr_subband_stability(spec, sample_rate);
    out.hpss = snr_hpss(spec);
    out.eff = std::max({out.orig, out.sf, out.hpss});
    return out;
}

namespace {

std::vector<double> trim_energy(const std::vector<double>& x) {
    const size_t win = 1024, hop = 512;
    auto rms = frame_rms(x, win, hop);
    double p95 = percentile(rms, 0.95);
    double thresh = std::max(1e-7, p95 * std::pow(10.0, -60.0 / 20.0));
    size_t first = rms.size(), last = 0;
    for (size_t i = 0; i < rms.size(); ++i) {
        if (rms[i] >= thresh) {
            if (first == rms.size()) first = i;
            last = i;
        }
    }
    if (first == rms.size()) return {};
    size_t begin = first * hop;
    size_t end = std::min(x.size(), last * hop + win);
    return std::vector<double>(x.begin() + begin, x.begin() + end);
}

double mean_band_power_db(const Spectrogram& spec, double sample_rate,
                          double f_lo, double f_hi, double* slope_db_per_khz) {
    double nyquist = sample_rate / 2.0;
    size_t bin_lo = static_cast<size_t>(f_lo / nyquist * (spec.bins - 1));
    size_t bin_hi = static_cast<size_t>(f_hi / nyquist * (spec.bins - 1));
    bin_hi = std::min(bin_hi, spec.bins - 1);
    std::vector<double> xs, ys;
    double total_db = 0.0;
    for (size_t f = bin_lo; f <= bin_hi; ++f) {
        double p = 0.0;
        for (size_t t = 0; t < spec.frames; ++t) p += spec.at(f, t) * spec.at(f, t);
        p /= std::max<size_t>(1, spec.frames);
        double freq_khz = f * nyquist / (spec.bins - 1) / 1000.0;
        double db = 10.0 * std::log10(p + kEps);
        xs.push_back(freq_khz);
        ys.push_back(db);
        total_db += db;
    }
    if (slope_db_per_khz) {
        *slope_db_per_khz = 0.0;
        if (xs.size() >= 2) {
            double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
            double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
            double sxx = 0.0, sxy = 0.0;
            for (size_t i = 0; i < xs.size(); ++i) {
                sxx += (xs[i] - mx) * (xs[i] - mx);
                sxy += (xs[i] - mx) * (ys[i] - my);
            }
            if (sxx > 0.0) *slope_db_per_khz = sxy / sxx;
        }
    }
    return xs.empty() ? -120.0 : total_db / xs.size();
}

double f95_hz(const Spectrogram& spec, double sample_rate) {
    std::vector<double> power(spec.bins, 0.0);
    for (size_t t = 0; t < spec.frames; ++t)
        for (size_t f = 0; f < spec.bins; ++f)
            power[f] += spec.at(f, t) * spec.at(f, t);
    double total = std::accumulate(power.begin(), power.end(), 0.0);
    if (total <= 0.0) return 0.0;
    double cum = 0.0;
    for (size_t f = 0; f < spec.bins; ++f) {
        cum += power[f];
        if (cum >= 0.95 * total)
            return f * (sample_rate / 2.0) / (spec.bins - 1);
    }
    return sample_rate / 2.0;
}

double chroma_stability(const Spectrogram& spec, double sample_rate) {
    if (spec.frames < 2) return 0.5;
    double nyquist = sample_rate / 2.0;
    std::vector<std::array<double, 12>> chroma(spec.frames);
    for (size_t t = 0; t < spec.frames; ++t) {
        chroma[t].fill(0.0);
        for (size_t f = 1; f < spec.bins; ++f) {
            double freq = f * nyquist / (spec.bins - 1);
            if (freq < 55.0 || freq > 8000.0) continue;
            int pc = static_cast<int>(std::lround(12.0 * std::log2(freq / 440.0)));
            pc = ((pc % 12) + 12) % 12;
            chroma[t][pc] += spec.at(f, t) * spec.at(f, t);
        }
        double sum = std::accumulate(chroma[t].begin(), chroma[t].end(), 0.0) + kEps;
        for (double& c : chroma[t]) c /= sum;
    }
    double acc = 0.0;
    for (size_t t = 1; t < spec.frames; ++t) {
        double l1 = 0.0;
        for (int pc = 0; pc < 12; ++pc)
            l1 += std::fabs(chroma[t][pc] - chroma[t - 1][pc]);
        acc += 1.0 - 0.5 * l1;
    }
    return std::clamp(acc / (spec.frames - 1), 0.0, 1.0);
}

double spectral_contrast(const Spectrogram& spec, double sample_rate) {
    double nyquist = sample_rate / 2.0;
    double acc = 0.0;
    size_t count = 0;
    for (int b = 0; b < 6; ++b) {
        double lo = 200.0 * std::pow(2.0, b);
        double hi = std::min(lo * 2.0, nyquist);
        size_t bin_lo = static_cast<size_t>(lo / nyquist * (spec.bins - 1));
        size_t bin_hi = static_cast<size_t>(hi / nyquist * (spec.bins - 1));
        if (bin_hi <= bin_lo + 8) continue;
        for (size_t t = 0; t < spec.frames; ++t) {
            std::vector<double> mags;
            mags.reserve(bin_hi - bin_lo);
            for (size_t f = bin_lo; f < bin_hi; ++f) mags.push_back(spec.at(f, t));
            std::sort(mags.begin(), mags.end());
            size_t q = std::max<size_t>(1, mags.size() / 5);
            double bottom = std::accumulate(mags.begin(), mags.begin() + q, 0.0) / q;
            double top = std::accumulate(mags.end() - q, mags.end(), 0.0) / q;
            acc += 20.0 * std::log10((top + kEps) / (bottom + kEps));
            ++count;
        }
    }
    if (count == 0) return 0.0;
    return std::clamp(acc / count / 40.0, 0.0, 1.0);
}

double periodicity(const std::vector<double>& x, double sample_rate) {
    size_t m = std::min<size_t>(x.size(), 1 << 17);
    if (m < 256) return 0.0;
    size_t n = 1;
    while (n < 2 * m) n <<= 1;
    std::vector<double> padded(n, 0.0);
    std::copy(x.begin(), x.begin() + m, padded.begin());
    RealFft fft(n);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    fft.execute(padded.data(), spec.data());
    // Autocorrelation via the inverse transform of the power spectrum.
    std::vector<double> ps(n, 0.0);
    std::vector<double> acf(n / 2 + 1);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        double* in = fftw_alloc_real(n);
        fftw_complex* freq = fftw_alloc_complex(n / 2 + 1);
        fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq, in,
                                              FFTW_ESTIMATE);
        for (size_t i = 0; i < n / 2 + 1; ++i) {
            freq[i][0] = std::norm(spec[i]);
            freq[i][1] = 0.0;
        }
        fftw_execute(plan);
        for (size_t i = 0; i < n / 2 + 1; ++i) acf[i] = in[i];
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(freq);
    }
    if (acf[0] <= 0.0) return 0.0;
    size_t lag_lo = static_cast<size_t>(sample_rate / 1000.0);  // 1 kHz
    size_t lag_hi = std::min<size_t>(acf.size() - 1,
                                     static_cast<size_t>(sample_rate / 50.0));
    double best = 0.0;
    for (size_t lag = lag_lo; lag <= lag_hi; ++lag)
        best = std::max(best, acf[lag] / acf[0]);
    return std::clamp(best, 0.0, 1.0);
}

double clipped_fraction(const std::vector<double>& x, double level,
                        size_t min_run) {
    double peak = 0.0;
    for (double s : x) peak = std::max(peak, std::fabs(s));
    if (peak <= 0.0) return 0.0;
    double amp_thresh = level * peak;
    double flat_thresh = 1e-4 * peak;
    size_t clipped = 0;
    size_t i = 0;
    while (i < x.size()) {
        if (std::fabs(x[i]) < amp_thresh) {
            ++i;
            continue;
        }
        size_t j = i + 1;
        bool flat = true;
        while (j < x.size() && std::fabs(x[j]) >= amp_thresh) {
            if (std::fabs(x[j] - x[j - 1]) > flat_thresh) flat = false;
            ++j;
        }
        if (flat && j - i >= min_run) clipped += j - i;
        i = j;
    }
    return static_cast<double>(clipped) / x.size();
}

double gap_fraction(const std::vector<double>& x, double floor_db) {
    auto rms = frame_rms(x, 1024, 512);
    if (rms.size() < 6) return 0.0;
    double p95 = percentile(rms, 0.95);
    double thresh = p95 * std::pow(10.0, -floor_db / 20.0);
    size_t gaps = 0;
    size_t interior = rms.size() - 4;
    for (size_t i = 2; i + 2 < rms.size(); ++i)
        if (rms[i] < thresh) ++gaps;
    return interior > 0 ? static_cast<double>(gaps) / interior : 0.0;
}

}  // namespace

AudioQualityBreakdown audio_quality(const Waveform& wave,
                                    const AudioQualityConfig& config) {
    Waveform resampled = resample_linear(wave, config.target_rate);
    double mean = resampled.samples.empty()
                      ? 0.0
                      : std::accumulate(resampled.samples.begin(),
                                        resampled.samples.end(), 0.0) /
                            resampled.samples.size();
    for (double& s : resampled.samples) s -= mean;
    std::vector<double> x = trim_energy(resampled.samples);
    if (x.size() < config.min_duration * config.target_rate)
        throw IngestError("audio too short after trimming (< " +
                          std::to_string(config.min_duration) + " s)");

    AudioQualityBreakdown out;
    Spectrogram spec = stft_magnitude(x, config.stft_win, config.stft_hop);
    Spectrogram smooth = smooth_frequency(spec, config.flatness_smooth_bins);

    out.snr = effective_snr(x, config.target_rate, spec);
    out.q_snr = logistic(out.snr.eff, config.snr_k, config.snr_x0);

    out.sf_g = spectral_flatness(smooth);
    out.q_struct = 1.0 - out.sf_g;

    auto rms = frame_rms(x, 1024, 512);
    double p95 = percentile(rms, 0.95), p10 = percentile(rms, 0.10);
    out.dynamic_range_db = 20.0 * std::log10((p95 + kEps) / (p10 + kEps));
    out.q_dr = band_score(out.dynamic_range_db, config.dr_band[0],
                          config.dr_band[1], config.dr_band[2], config.dr_band[3]);

    out.lufs = integrated_lufs(x, config.target_rate);
    out.q_lufs = band_score(out.lufs, config.lufs_band[0], config.lufs_band[1],
                            config.lufs_band[2], config.lufs_band[3]);

    out.crest_db = crest_factor_db(x);
    out.q_crest = band_score(out.crest_db, config.crest_band[0],
                             config.crest_band[1], config.crest_band[2],
                             config.crest_band[3]);

    out.f95_hz = f95_hz(spec, config.target_rate);
    out.q_bw = band_score(out.f95_hz, config.bw_band[0], config.bw_band[1],
                          config.bw_band[2], config.bw_band[3]);

    out.q_chroma = chroma_stability(spec, config.target_rate);
    out.q_contrast = spectral_contrast(spec, config.target_rate);
    out.q_periodic = periodicity(x, config.target_rate);

    const double core[] = {out.q_snr,   out.q_struct,   out.q_dr,
                           out.q_lufs,  out.q_crest,    out.q_bw,
                           out.q_chroma, out.q_contrast, out.q_periodic};
    double ln_sum = 0.0;
    for (double q : core)
        ln_sum += std::log(std::clamp(q, config.term_floor, 1.0));
    out.q_base = std::exp(ln_sum / std::size(core));

    double cf = clipped_fraction(x, config.clip_level,
                                 static_cast<size_t>(config.clip_run_min));
    out.p_clip = 1.0 - std::min(0.7, 10.0 * cf);

    double gf = gap_fraction(x, config.gap_floor_db);
    out.p_gap = std::clamp(1.0 - 0.8 * gf, 0.4, 1.0);

    out.p_noise = out.snr.eff >= config.noise_snr_floor_db
                      ? 1.0
                      : 0.6 + 0.4 * std::max(0.0, out.snr.eff) /
                                  config.noise_snr_floor_db;

    double hiss_slope = 0.0;
    mean_band_power_db(spec, config.target_rate, 4000.0, 12000.0, &hiss_slope);
    out.p_hiss = hiss_slope <= 0.0
                     ? 1.0
                     : 1.0 - 0.3 * std::clamp(hiss_slope / config.hiss_slope_limit,
                                              0.0, 1.0);

    double total_power = 0.0, hf_power = 0.0;
    {
        double nyquist = config.target_rate / 2.0;
        for (size_t f = 0; f < spec.bins; ++f) {
            double freq = f * nyquist / (spec.bins - 1);
            double p = 0.0;
            for (size_t t = 0; t < spec.frames; ++t)
                p += spec.at(f, t) * spec.at(f, t);
            total_power += p;
            if (freq > 16000.0) hf_power += p;
        }
    }
    double hf_ratio = total_power > 0.0 ? hf_power / total_power : 0.0;
    out.p_hf = hf_ratio <= config.hf_ratio_limit
                   ? 1.0
                   : 1.0 - 0.3 * std::clamp((hf_ratio - config.hf_ratio_limit) /
                                                (1.0 - config.hf_ratio_limit),
                                            0.0, 1.0);

    out.p_low_contrast =
        out.q_contrast >= config.low_contrast_floor
            ? 1.0
            : 1.0 - 0.15 * (config.low_contrast_floor - out.q_contrast) /
                        config.low_contrast_floor;

    out.b_structure = std::min(config.bonus_cap,
                               1.0 + 0.1 * std::max(0.0, out.q_contrast - 0.5) +
                                   0.1 * std::max(0.0, out.q_chroma - 0.5));
    out.b_periodic = std::min(config.bonus_cap,
                              1.0 + 0.3 * std::max(0.0, out.q_periodic - 0.5));

    out.score = std::clamp(out.q_base * out.p_clip * out.p_gap * out.p_noise *
                               out.p_hiss * out.p_hf * out.p_low_contrast *
                               out.b_structure * out.b_periodic,
                           0.0, 1.0);
    return out;
}

AudioQualityBreakdown audio_quality_file(const std::string& path,
                                         const AudioQualityConfig& config) {
    return audio_quality(read_wav(path), config);
}

}  // namespace unim::audio
