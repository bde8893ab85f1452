// SPDX-License-Identifier: Apache-2.0
//
// seizewatch: WiFi CSI nocturnal seizure detection
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Labelled multi-antenna CSI traces for simulated nights.
//
// Every (antenna, subcarrier) channel gets its own direct and reflected path. All
// channels share one displacement track per person: continuous breathing plus the
// scenario's events, whose speeds add to the breathing speed. Each extra person
// contributes one more reflected path per channel.

#pragma once

#include "spectral_oracle.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace seizewatch
{

enum class EventKind : std::uint8_t
{
    Seizure,
    PostureShift,
    LimbJerk,
    Scratch,
    Cough,
};

enum class LabelClass : std::uint8_t
{
    Breathing = 0,
    Normal = 1,
    Seizure = 2,
};

inline const char *to_string(EventKind kind)
{
    switch (kind)
    {
    case EventKind::Seizure:
        return "seizure";
    case EventKind::PostureShift:
        return "posture_shift";
    case EventKind::LimbJerk:
        return "limb_jerk";
    case EventKind::Scratch:
        return "scratch";
    case EventKind::Cough:
        return "cough";
    }
    return "unknown";
}

inline EventKind event_kind_from_string(std::string_view s)
{
    for (auto k : {EventKind::Seizure, EventKind::PostureShift, EventKind::LimbJerk, EventKind::Scratch, EventKind::Cough})
        if (s == to_string(k))
            return k;
    throw InputError("unknown event kind '" + std::string(s) + "'");
}

inline const char *to_string(LabelClass c)
{
    switch (c)
    {
    case LabelClass::Breathing:
        return "breathing";
    case LabelClass::Normal:
        return "normal";
    case LabelClass::Seizure:
        return "seizure";
    }
    return "unknown";
}

inline LabelClass label_class_from_string(std::string_view s)
{
    for (auto c : {LabelClass::Breathing, LabelClass::Normal, LabelClass::Seizure})
        if (s == to_string(c))
            return c;
    throw InputError("unknown label class '" + std::string(s) + "'");
}

inline LabelClass label_for(EventKind kind)
{
    return kind == EventKind::Seizure ? LabelClass::Seizure : LabelClass::Normal;
}

struct ScenarioEvent
{
    EventKind kind = EventKind::PostureShift;
    double start_s = 0.0;
    double duration_s = 0.0;
    MotionProfile motion; // time measured from start_s

    double end_s() const { return start_s + duration_s; }
};

/// One person's night: breathing for the whole duration plus discrete events.
struct Scenario
{
    double duration_s = 60.0;
    MotionProfile breathing = MotionProfile::sinusoid(kTwoPi * 0.25 * 0.005, 0.25, 60.0);
    std::vector<ScenarioEvent> events;
    int person_id = 1;

    // Validation limits.
    double min_seizure_s = 20.0;
    double max_limb_jerk_s = 0.4;

    void validate() const
    {
        require(std::isfinite(duration_s) && duration_s > 0.0, "Scenario: duration must be positive");
        breathing.validate();
        std::vector<const ScenarioEvent *> sorted;
        for (const auto &e : events)
        {
            require(e.start_s >= 0.0 && e.duration_s > 0.0 && e.end_s() <= duration_s + 1e-9,
                    "Scenario: event outside the scenario window");
            e.motion.validate();
            if (e.kind == EventKind::Seizure)
                require(e.duration_s >= min_seizure_s, "Scenario: seizure shorter than the minimum duration");
            if (e.kind == EventKind::LimbJerk)
                require(e.duration_s <= max_limb_jerk_s, "Scenario: limb jerk longer than the maximum duration");
            sorted.push_back(&e);
        }
        std::sort(sorted.begin(), sorted.end(), [](auto *a, auto *b) { return a->start_s < b->start_s; });
        for (std::size_t i = 1; i < sorted.size(); ++i)
            require(sorted[i]->start_s >= sorted[i - 1]->end_s(), "Scenario: overlapping events for the same person");
    }
};

struct NoiseSpec
{
    double awgn_sigma = 0.0;        // complex noise std, channel-gain units
    double outlier_rate = 0.0;      // spikes per second per channel
    double outlier_magnitude = 8.0; // spike size in units of the channel's motion amplitude 2 a_d a_r
    double jitter_std_s = 0.0;      // packet arrival jitter
    std::vector<double> channel_noise_scale; // optional per-channel multiplier on awgn_sigma

    void validate(std::size_t n_channels) const
    {
        require(awgn_sigma >= 0.0 && outlier_rate >= 0.0 && outlier_magnitude >= 0.0 && jitter_std_s >= 0.0,
                "NoiseSpec: all parameters must be non-negative");
        require(channel_noise_scale.empty() || channel_noise_scale.size() == n_channels,
                "NoiseSpec: channel_noise_scale must have one entry per channel");
        for (double s : channel_noise_scale)
            require(s >= 0.0, "NoiseSpec: channel noise scale must be non-negative");
    }

    static NoiseSpec none() { return {}; }
    static NoiseSpec moderate() { return {0.01, 0.05, 8.0, 0.5e-3, {}}; }
};

/// Receiver layout and path-drawing ranges.
struct SimOptions
{
    double sample_rate_hz = 200.0;
    int n_rx = 3;
    int n_sc = 30;
    double alpha_d_min = 0.8;
    double alpha_d_max = 1.2;
    double ratio_min = 0.05; // alpha_r / alpha_d
    double ratio_max = 0.15;
    double max_ratio = 0.2;
};

struct LabelInterval
{
    double start_s = 0.0;
    double end_s = 0.0;
    LabelClass label = LabelClass::Normal;
    int person_id = 1;
    EventKind kind = EventKind::PostureShift;

    bool operator==(const LabelInterval &) const = default;
};

struct InjectedOutlier
{
    std::uint32_t channel = 0;
    std::uint32_t sample = 0;

    bool operator==(const InjectedOutlier &) const = default;
};

/// Multi-stream CSI record. Channel values are stored channel-major:
/// channels[a * n_sc + s][k] is antenna a, subcarrier s at timestamps_s[k].
template <typename Scalar>
struct BasicCsiTrace
{
    using value_type = std::complex<Scalar>;

    double sample_rate_hz = 200.0;
    int n_rx = 3;
    int n_sc = 30;
    std::vector<double> timestamps_s;
    std::vector<std::vector<value_type>> channels;
    std::vector<LabelInterval> labels;
    std::vector<LabelClass> label_track; // one per sample, seizure > normal > breathing
    SceneGeometry geometry;
    std::vector<std::vector<PathParams>> paths; // [person][channel]
    std::vector<InjectedOutlier> outliers;

    std::size_t n_samples() const { return timestamps_s.size(); }
    std::size_t n_channels() const { return static_cast<std::size_t>(n_rx) * static_cast<std::size_t>(n_sc); }
    std::size_t n_derived_streams() const { return static_cast<std::size_t>(2 * n_rx - 1) * static_cast<std::size_t>(n_sc); }
    std::size_t channel_index(int antenna, int subcarrier) const
    {
        return static_cast<std::size_t>(antenna) * static_cast<std::size_t>(n_sc) + static_cast<std::size_t>(subcarrier);
    }
    double duration_s() const { return static_cast<double>(n_samples()) / sample_rate_hz; }

    void rebuild_label_track()
    {
        label_track.assign(n_samples(), LabelClass::Breathing);
        for (const auto &l : labels)
        {
            const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(l.start_s * sample_rate_hz - 1e-9)));
            for (std::size_t k = first; k < label_track.size(); ++k)
            {
                if (static_cast<double>(k) / sample_rate_hz >= l.end_s)
                    break;
                if (static_cast<int>(l.label) > static_cast<int>(label_track[k]))
                    label_track[k] = l.label;
            }
        }
    }

    bool operator==(const BasicCsiTrace &) const = default;
};

using CsiTrace = BasicCsiTrace<double>;
using CompactCsiTrace = BasicCsiTrace<float>;

namespace detail
{

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
}

inline constexpr std::uint64_t kSaltPaths = 0x9a7e5;
inline constexpr std::uint64_t kSaltNoise = 0x401be;
inline constexpr std::uint64_t kSaltJitter = 0x117e2;
inline constexpr std::uint64_t kSaltPerson = 0x2e250;

/// Sum of the breathing track and all event tracks of one person.
class PersonMotion
{
public:
    explicit PersonMotion(const Scenario &scenario) : breathing_(scenario.breathing)
    {
        for (const auto &e : scenario.events)
            events_.push_back({e.start_s, DisplacementTrack(e.motion)});
    }

    double operator()(double t) const
    {
        double d = breathing_(t);
        for (const auto &[start, track] : events_)
            if (t > start)
                d += track(t - start);
        return d;
    }

    std::vector<double> sample(std::span<const double> times) const
    {
        std::vector<double> d(times.size());
        for (std::size_t k = 0; k < times.size(); ++k)
            d[k] = (*this)(times[k]);
        return d;
    }

private:
    DisplacementTrack breathing_;
    std::vector<std::pair<double, DisplacementTrack>> events_;
};

inline std::vector<PathParams> draw_paths(std::size_t n_channels, const SimOptions &opt, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> alpha(opt.alpha_d_min, opt.alpha_d_max);
    std::uniform_real_distribution<double> ratio(opt.ratio_min, opt.ratio_max);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::vector<PathParams> paths(n_channels);
    for (auto &p : paths)
    {
        p.alpha_d = alpha(rng);
        p.mu_d = phase(rng);
        p.alpha_r = p.alpha_d * ratio(rng);
        p.mu_r = p.mu_d + phase(rng); // dmu_m uniform on [0, 2 pi)
        p.validate(opt.max_ratio);
    }
    return paths;
}

inline void append_labels(std::vector<LabelInterval> &labels, const Scenario &scenario)
{
    for (const auto &e : scenario.events)
        labels.push_back({e.start_s, e.end_s(), label_for(e.kind), scenario.person_id, e.kind});
    std::sort(labels.begin(), labels.end(), [](const auto &a, const auto &b)
              { return std::tie(a.start_s, a.person_id) < std::tie(b.start_s, b.person_id); });
}

} // namespace detail

/// Simulates one person's scenario on an (n_rx x n_sc) receiver.
///
/// Determinism: every random draw comes from generators seeded by (seed, channel, purpose),
/// so identical inputs give bit-identical traces.
template <typename Scalar = double>
BasicCsiTrace<Scalar> generate_trace(const Scenario &scenario, const SceneGeometry &geometry, const NoiseSpec &noise,
                                     std::uint64_t seed, const SimOptions &opt = {})
{
    scenario.validate();
    require(opt.sample_rate_hz > 0.0 && opt.n_rx >= 2 && opt.n_sc >= 1, "generate_trace: invalid receiver layout");
    BasicCsiTrace<Scalar> trace;
    trace.sample_rate_hz = opt.sample_rate_hz;
    trace.n_rx = opt.n_rx;
    trace.n_sc = opt.n_sc;
    trace.geometry = geometry;
    const std::size_t n = grid_length(scenario.duration_s, opt.sample_rate_hz);
    const std::size_t n_ch = trace.n_channels();
    noise.validate(n_ch);
    require(n >= 2, "generate_trace: scenario shorter than two samples");

    // Packet timestamps; jitter is clipped so arrival order is preserved.
    trace.timestamps_s.resize(n);
    {
        auto rng = detail::make_rng(seed, 0, detail::kSaltJitter);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double dt = 1.0 / opt.sample_rate_hz;
        for (std::size_t k = 0; k < n; ++k)
        {
            double j = noise.jitter_std_s > 0.0 ? noise.jitter_std_s * gauss(rng) : 0.0;
            j = std::clamp(j, -0.45 * dt, 0.45 * dt);
            trace.timestamps_s[k] = static_cast<double>(k) * dt + j;
        }
    }

    auto path_rng = detail::make_rng(seed, 0, detail::kSaltPaths);
    trace.paths.push_back(detail::draw_paths(n_ch, opt, path_rng));

    const auto displacement = detail::PersonMotion(scenario).sample(trace.timestamps_s);
    const double beta = geometry.beta_rad_per_m();

    trace.channels.resize(n_ch);
    for (std::size_t c = 0; c < n_ch; ++c)
    {
        const auto &p = trace.paths[0][c];
        auto &out = trace.channels[c];
        out.resize(n);
        const std::complex<double> direct = std::polar(p.alpha_d, p.mu_d);
        auto rng = detail::make_rng(seed, c + 1, detail::kSaltNoise);
        const double sigma =
            noise.awgn_sigma * (noise.channel_noise_scale.empty() ? 1.0 : noise.channel_noise_scale[c]) / std::sqrt(2.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t k = 0; k < n; ++k)
        {
            std::complex<double> v = direct + std::polar(p.alpha_r, p.mu_r + beta * displacement[k]);
            if (sigma > 0.0)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                v += std::complex<double>(sigma * re, sigma * im);
            }
            out[k] = std::complex<Scalar>(static_cast<Scalar>(v.real()), static_cast<Scalar>(v.imag()));
        }

        // Impulsive magnitude spikes at Poisson arrival times.
        if (noise.outlier_rate > 0.0 && noise.outlier_magnitude > 0.0)
        {
            std::exponential_distribution<double> gap(noise.outlier_rate);
            std::bernoulli_distribution sign;
            const double step = 2.0 * p.alpha_d * p.alpha_r * noise.outlier_magnitude;
            double t = gap(rng);
            while (true)
            {
                const auto k = static_cast<std::size_t>(std::llround(t * opt.sample_rate_hz));
                if (k >= n)
                    break;
                const std::complex<double> v(out[k].real(), out[k].imag());
                const double power = std::norm(v);
                const double spiked = std::max(power + (sign(rng) ? step : -step), 0.05 * power);
                const auto scaled = v * std::sqrt(spiked / power);
                out[k] = std::complex<Scalar>(static_cast<Scalar>(scaled.real()), static_cast<Scalar>(scaled.imag()));
                trace.outliers.push_back({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(k)});
                t += gap(rng);
            }
        }
    }

    detail::append_labels(trace.labels, scenario);
    trace.rebuild_label_track();
    return trace;
}

/// Adds another person's reflected path to every channel of an existing trace.
template <typename Scalar>
BasicCsiTrace<Scalar> superpose_person(const BasicCsiTrace<Scalar> &trace, Scenario scenario,
                                       const SceneGeometry &geometry, std::uint64_t seed, const SimOptions &opt = {})
{
    scenario.validate();
    require(std::abs(grid_length(scenario.duration_s, trace.sample_rate_hz) - static_cast<double>(trace.n_samples())) < 0.5,
            "superpose_person: scenario does not cover the trace's time grid");
    require(!trace.paths.empty(), "superpose_person: trace carries no path metadata");
    if (scenario.person_id <= static_cast<int>(trace.paths.size()))
        scenario.person_id = static_cast<int>(trace.paths.size()) + 1;

    BasicCsiTrace<Scalar> out = trace;
    auto rng = detail::make_rng(seed, static_cast<std::uint64_t>(scenario.person_id), detail::kSaltPerson);
    std::uniform_real_distribution<double> ratio(opt.ratio_min, opt.ratio_max);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::vector<PathParams> extra(trace.n_channels());
    for (std::size_t c = 0; c < extra.size(); ++c)
    {
        extra[c] = trace.paths[0][c];
        extra[c].alpha_r = extra[c].alpha_d * ratio(rng);
        extra[c].mu_r = extra[c].mu_d + phase(rng);
    }

    const auto displacement = detail::PersonMotion(scenario).sample(trace.timestamps_s);
    const double beta = geometry.beta_rad_per_m();
    for (std::size_t c = 0; c < extra.size(); ++c)
    {
        auto &ch = out.channels[c];
        for (std::size_t k = 0; k < ch.size(); ++k)
        {
            const auto add = std::polar(extra[c].alpha_r, extra[c].mu_r + beta * displacement[k]);
            ch[k] += std::complex<Scalar>(static_cast<Scalar>(add.real()), static_cast<Scalar>(add.imag()));
        }
    }
    out.paths.push_back(std::move(extra));
    detail::append_labels(out.labels, scenario);
    out.rebuild_label_track();
    return out;
}

// ---------------------------------------------------------------------------
// Motion library

struct SeizureOptions
{
    double f_min_hz = kSeizureRateMinHz;
    double f_max_hz = kSeizureRateMaxHz;
    double v_min_mps = 0.7;
    double v_max_mps = 0.8;
    double min_duration_s = 20.0;
    double max_duration_s = 60.0;
    bool tonic_preamble = false; // 5 s of low stiff motion before the clonic sinusoid
};

struct NormalEventOptions
{
    double v_cap_mps = 0.33;
    double posture_min_s = 2.0;
    double posture_max_s = 15.0;
};

inline MotionProfile breathing_profile(double rate_hz, double duration_s, double displacement_m = kBreathingDisplacementM,
                                       double phase_rad = 0.0)
{
    return MotionProfile::sinusoid(kTwoPi * rate_hz * displacement_m, rate_hz, duration_s, phase_rad);
}

namespace detail
{

/// Raised-cosine lobe of the given length and signed peak, written into v starting at first.
inline void add_lobe(std::vector<double> &v, std::size_t first, std::size_t length, double peak)
{
    for (std::size_t i = 0; i < length && first + i < v.size(); ++i)
        v[first + i] += peak * 0.5 * (1.0 - std::cos(kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(length)));
}

inline constexpr double kProfileRateHz = 200.0;

} // namespace detail

inline ScenarioEvent make_seizure(double start_s, double duration_s, std::mt19937_64 &rng, const SeizureOptions &opt = {})
{
    std::uniform_real_distribution<double> f(opt.f_min_hz, opt.f_max_hz);
    std::uniform_real_distribution<double> v(opt.v_min_mps, opt.v_max_mps);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    const double f_o = f(rng);
    const double v_max = v(rng);
    const double ph = phase(rng);
    if (!opt.tonic_preamble)
        return {EventKind::Seizure, start_s, duration_s, MotionProfile::sinusoid(v_max, f_o, duration_s, ph)};

    const double rate = detail::kProfileRateHz;
    std::vector<double> speed(grid_length(duration_s, rate), 0.0);
    const std::size_t tonic = std::min(speed.size(), grid_length(5.0, rate));
    // Tonic stiffening: a slow, low-speed lobe.
    detail::add_lobe(speed, 0, tonic, 0.05);
    for (std::size_t k = tonic; k < speed.size(); ++k)
        speed[k] = v_max * std::cos(kTwoPi * f_o * static_cast<double>(k - tonic) / rate + ph);
    return {EventKind::Seizure, start_s, duration_s, MotionProfile::sampled(std::move(speed), rate)};
}

/// Normal sleep movement of the given kind. Peak speeds stay at or below opt.v_cap_mps.
inline ScenarioEvent make_normal_event(EventKind kind, double start_s, double duration_s, std::mt19937_64 &rng,
                                       const NormalEventOptions &opt = {})
{
    require(kind != EventKind::Seizure, "make_normal_event: seizure is not a normal event");
    const double rate = detail::kProfileRateHz;
    std::vector<double> speed(std::max<std::size_t>(grid_length(duration_s, rate), 2), 0.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto signed_peak = [&](double lo, double hi)
    {
        const double p = lo + (hi - lo) * unit(rng);
        return unit(rng) < 0.5 ? -p : p;
    };

    switch (kind)
    {
    case EventKind::PostureShift:
    {
        // Back-to-back smooth lobes of 1-2 s.
        const std::size_t n_lobes = std::max<std::size_t>(1, static_cast<std::size_t>(duration_s / 1.5));
        const std::size_t len = speed.size() / n_lobes;
        for (std::size_t i = 0; i < n_lobes; ++i)
            detail::add_lobe(speed, i * len, len, signed_peak(0.12, opt.v_cap_mps));
        break;
    }
    case EventKind::LimbJerk:
        detail::add_lobe(speed, 0, speed.size(), signed_peak(0.1, opt.v_cap_mps));
        break;
    case EventKind::Scratch:
    {
        const double f = 3.0 + 5.0 * unit(rng);
        const double v0 = 0.02 + 0.03 * unit(rng);
        for (std::size_t k = 0; k < speed.size(); ++k)
        {
            const double env = 0.5 * (1.0 - std::cos(kTwoPi * (static_cast<double>(k) + 0.5) / static_cast<double>(speed.size())));
            speed[k] = v0 * env * std::sin(kTwoPi * f * static_cast<double>(k) / rate);
        }
        break;
    }
    case EventKind::Cough:
    {
        // Short bursts separated by pauses.
        std::size_t k = 0;
        while (k < speed.size())
        {
            const auto burst = static_cast<std::size_t>((0.2 + 0.1 * unit(rng)) * rate);
            const auto pause = static_cast<std::size_t>((0.3 + 0.3 * unit(rng)) * rate);
            detail::add_lobe(speed, k, std::min(burst, speed.size() - k), signed_peak(0.1, 0.3));
            k += burst + pause;
        }
        break;
    }
    case EventKind::Seizure:
        break;
    }
    for (auto &s : speed)
        s = std::clamp(s, -opt.v_cap_mps, opt.v_cap_mps);
    auto profile = MotionProfile::sampled(std::move(speed), rate);
    return {kind, start_s, profile.duration_s, std::move(profile)};
}

/// Draws a duration appropriate for a normal event kind.
inline double draw_normal_duration(EventKind kind, std::mt19937_64 &rng, const NormalEventOptions &opt = {})
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    switch (kind)
    {
    case EventKind::PostureShift:
        return opt.posture_min_s + (opt.posture_max_s - opt.posture_min_s) * unit(rng);
    case EventKind::LimbJerk:
        return 0.15 + 0.25 * unit(rng);
    case EventKind::Scratch:
        return 1.0 + 3.0 * unit(rng);
    case EventKind::Cough:
        return 0.5 + 2.0 * unit(rng);
    case EventKind::Seizure:
        break;
    }
    throw InputError("draw_normal_duration: not a normal event kind");
}

/// Night-level layout: a breathing-only calibration lead-in, then randomly placed events.
struct OvernightSpec
{
    double duration_s = 3600.0;
    int n_normal = 6;
    int n_seizure = 2;
    double calibration_s = 15.0; // breathing only at the start
    double min_gap_s = 30.0;     // stillness between consecutive events
    SeizureOptions seizure;
    NormalEventOptions normal;
    std::array<double, 4> normal_mix = {0.4, 0.2, 0.2, 0.2}; // posture, jerk, scratch, cough
    double breathing_rate_min_hz = kBreathingRateMinHz;
    double breathing_rate_max_hz = kBreathingRateMaxHz;
    int person_id = 1;
};

/// Normal-event count for a night at the given hourly rate.
inline int normal_event_count(double hours, double per_hour = 3.0)
{
    return static_cast<int>(std::lround(hours * per_hour));
}

inline Scenario make_overnight_scenario(const OvernightSpec &spec, std::uint64_t seed)
{
    require(spec.n_normal >= 0 && spec.n_seizure >= 0, "make_overnight_scenario: negative event count");
    auto rng = detail::make_rng(seed, static_cast<std::uint64_t>(spec.person_id), 0x5ce7a);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Scenario sc;
    sc.duration_s = spec.duration_s;
    sc.person_id = spec.person_id;
    const double br_rate = spec.breathing_rate_min_hz + (spec.breathing_rate_max_hz - spec.breathing_rate_min_hz) * unit(rng);
    sc.breathing = breathing_profile(br_rate, spec.duration_s, kBreathingDisplacementM * (0.8 + 0.2 * unit(rng)),
                                     kTwoPi * unit(rng));

    struct Pending
    {
        EventKind kind;
        double duration;
    };
    std::vector<Pending> pending;
    std::uniform_real_distribution<double> sz_dur(spec.seizure.min_duration_s, spec.seizure.max_duration_s);
    for (int i = 0; i < spec.n_seizure; ++i)
        pending.push_back({EventKind::Seizure, sz_dur(rng)});
    std::discrete_distribution<int> mix(spec.normal_mix.begin(), spec.normal_mix.end());
    constexpr std::array<EventKind, 4> kinds = {EventKind::PostureShift, EventKind::LimbJerk, EventKind::Scratch,
                                                EventKind::Cough};
    for (int i = 0; i < spec.n_normal; ++i)
    {
        const auto kind = kinds[static_cast<std::size_t>(mix(rng))];
        pending.push_back({kind, draw_normal_duration(kind, rng, spec.normal)});
    }

    // Rejection placement with a stillness gap around every event.
    std::vector<std::pair<double, double>> taken;
    const double lo = spec.calibration_s + spec.min_gap_s;
    for (const auto &p : pending)
    {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt)
        {
            const double hi = spec.duration_s - p.duration - 1.0;
            require(hi > lo, "make_overnight_scenario: scenario too short for its events");
            const double start = lo + (hi - lo) * unit(rng);
            const double end = start + p.duration;
            bool clear = true;
            for (const auto &[s, e] : taken)
                if (start < e + spec.min_gap_s && end + spec.min_gap_s > s)
                    clear = false;
            if (!clear)
                continue;
            taken.emplace_back(start, end);
            if (p.kind == EventKind::Seizure)
                sc.events.push_back(make_seizure(start, p.duration, rng, spec.seizure));
            else
                sc.events.push_back(make_normal_event(p.kind, start, p.duration, rng, spec.normal));
            placed = true;
        }
        require(placed, "make_overnight_scenario: could not place all events; lengthen the night or reduce counts");
    }
    std::sort(sc.events.begin(), sc.events.end(), [](const auto &a, const auto &b) { return a.start_s < b.start_s; });
    sc.min_seizure_s = std::min(sc.min_seizure_s, spec.seizure.min_duration_s);
    return sc;
}

// ---------------------------------------------------------------------------
// Accelerometry import

enum class SpeedColumn
{
    Auto, // "speed" if present, otherwise the norm of the integrated axes
    Speed,
    Ax,
    Ay,
    Az,
    Norm,
};

namespace detail
{

/// RBJ biquad high-pass, run forward then backward for zero phase.
inline void highpass_zero_phase(std::vector<double> &x, double cutoff_hz, double rate_hz)
{
    if (x.size() < 3)
        return;
    const double w0 = kTwoPi * cutoff_hz / rate_hz;
    const double alpha = std::sin(w0) / (2.0 * std::sqrt(0.5));
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    const double b0 = (1.0 + cw) / 2.0 / a0, b1 = -(1.0 + cw) / a0, b2 = b0;
    const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
    auto pass = [&](auto first, auto last)
    {
        double x1 = *first, x2 = *first, y1 = 0.0, y2 = 0.0;
        for (auto it = first; it != last; ++it)
        {
            const double x0 = *it;
            const double y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *it = y0;
        }
    };
    pass(x.begin(), x.end());
    pass(x.rbegin(), x.rend());
}

inline std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
    {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

} // namespace detail

/// Reads "t_s, speed" or "t_s, ax, ay, az" CSV into a sampled speed profile.
///
/// Accelerations are integrated with the trapezoid rule, then high-passed at 0.05 Hz
/// to remove integration drift. Samples are put on a uniform grid at the median rate.
inline MotionProfile import_speed_csv(const std::string &path, SpeedColumn column = SpeedColumn::Auto,
                                      double highpass_hz = 0.05)
{
    std::ifstream in(path);
    require(in.good(), "import_speed_csv: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "import_speed_csv: empty file");
    const auto header = detail::split_csv_line(line);
    auto find = [&](std::string_view name) -> int
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return static_cast<int>(i);
        return -1;
    };
    const int it = find("t_s");
    require(it >= 0, "import_speed_csv: missing t_s column");
    const int is = find("speed");
    const std::array<int, 3> ia = {find("ax"), find("ay"), find("az")};
    if (column == SpeedColumn::Auto)
        column = is >= 0 ? SpeedColumn::Speed : SpeedColumn::Norm;
    if (column == SpeedColumn::Speed)
        require(is >= 0, "import_speed_csv: missing speed column");
    else
        require(ia[0] >= 0 && ia[1] >= 0 && ia[2] >= 0, "import_speed_csv: missing ax/ay/az columns");

    std::vector<double> t;
    std::vector<std::array<double, 3>> vals;
    while (std::getline(in, line))
    {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto cells = detail::split_csv_line(line);
        auto cell = [&](int i)
        {
            require(i < static_cast<int>(cells.size()), "import_speed_csv: short row");
            try
            {
                return std::stod(cells[static_cast<std::size_t>(i)]);
            }
            catch (const std::exception &)
            {
                throw InputError("import_speed_csv: non-numeric cell '" + cells[static_cast<std::size_t>(i)] + "'");
            }
        };
        const double ts = cell(it);
        require(t.empty() || ts > t.back(), "import_speed_csv: timestamps must be strictly increasing");
        t.push_back(ts);
        if (column == SpeedColumn::Speed)
            vals.push_back({cell(is), 0.0, 0.0});
        else
            vals.push_back({cell(ia[0]), cell(ia[1]), cell(ia[2])});
    }
    require(t.size() >= 2, "import_speed_csv: need at least two rows");

    std::vector<double> dts(t.size() - 1);
    for (std::size_t k = 1; k < t.size(); ++k)
        dts[k - 1] = t[k] - t[k - 1];
    std::nth_element(dts.begin(), dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2), dts.end());
    const double rate = 1.0 / dts[dts.size() / 2];
    const std::size_t n = static_cast<std::size_t>(std::floor((t.back() - t.front()) * rate + 1e-9)) + 1;

    auto resample = [&](int axis)
    {
        std::vector<double> u(n);
        std::size_t j = 0;
        for (std::size_t k = 0; k < n; ++k)
        {
            const double tk = t.front() + static_cast<double>(k) / rate;
            while (j + 2 < t.size() && t[j + 1] < tk)
                ++j;
            const double frac = std::clamp((tk - t[j]) / (t[j + 1] - t[j]), 0.0, 1.0);
            u[k] = vals[j][static_cast<std::size_t>(axis)] * (1.0 - frac) + vals[j + 1][static_cast<std::size_t>(axis)] * frac;
        }
        return u;
    };

    std::vector<double> speed;
    if (column == SpeedColumn::Speed)
    {
        speed = resample(0);
    }
    else
    {
        std::array<std::vector<double>, 3> vel;
        for (int a = 0; a < 3; ++a)
        {
            const auto acc = resample(a);
            auto &v = vel[static_cast<std::size_t>(a)];
            v.assign(n, 0.0);
            for (std::size_t k = 1; k < n; ++k)
                v[k] = v[k - 1] + 0.5 * (acc[k - 1] + acc[k]) / rate;
            double mean = 0.0;
            for (double x : v)
                mean += x;
            mean /= static_cast<double>(n);
            for (auto &x : v)
                x -= mean;
            detail::highpass_zero_phase(v, highpass_hz, rate);
        }
        speed.resize(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            switch (column)
            {
            case SpeedColumn::Ax:
                speed[k] = vel[0][k];
                break;
            case SpeedColumn::Ay:
                speed[k] = vel[1][k];
                break;
            case SpeedColumn::Az:
                speed[k] = vel[2][k];
                break;
            default:
                speed[k] = std::sqrt(vel[0][k] * vel[0][k] + vel[1][k] * vel[1][k] + vel[2][k] * vel[2][k]);
            }
        }
    }
    return MotionProfile::sampled(std::move(speed), rate);
}

} // namespace seizewatch
