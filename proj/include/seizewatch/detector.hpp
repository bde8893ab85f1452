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

// Stages 2 and 3: energy-threshold event detection on p(t) and bandwidth
// classification of each event.

#pragma once

#include "preprocess.hpp"
#include "spectral_oracle.hpp"
#include "spectrum.hpp"

#include <limits>
#include <optional>

namespace seizewatch
{

struct DetectorConfig
{
    double t_win_ed_s = 2.0;
    double t_win_ec_s = 4.0;
    double t_min_s = 5.0;
    double q = 2.0;
    std::optional<double> f_th_hz; // derived from the scene geometry when empty
    double f_o_br_hz = 0.3;
    double ed_hop_s = 0.05;
    double ec_overlap = 0.5;
    double hysteresis_s = 1.0;

    double bw_br_hz() const { return 2.0 * f_o_br_hz; }
    double bw_br_adj_hz() const { return bw_br_hz() + 1.0 / t_win_ed_s; }
    double ec_hop_s() const { return t_win_ec_s * (1.0 - ec_overlap); }

    double resolve_f_th(const SceneGeometry &geometry) const { return f_th_hz ? *f_th_hz : derive_f_th(geometry); }

    void validate(double f_th) const
    {
        require(t_win_ed_s > 0.0 && t_win_ec_s > 0.0 && t_min_s > 0.0 && q > 0.0 && f_o_br_hz > 0.0 &&
                    ed_hop_s > 0.0 && hysteresis_s >= 0.0,
                "DetectorConfig: window lengths, T_min, q and hop must be positive");
        require(ec_overlap >= 0.0 && ec_overlap < 1.0, "DetectorConfig: EC overlap must be in [0, 1)");
        require(f_th > bw_br_adj_hz(), "DetectorConfig: f_th must exceed the adjusted breathing bandwidth");
    }
};

enum class EventClass : std::uint8_t
{
    Normal,
    Seizure,
    Ongoing,
};

inline const char *to_string(EventClass c)
{
    switch (c)
    {
    case EventClass::Normal:
        return "normal";
    case EventClass::Seizure:
        return "seizure";
    case EventClass::Ongoing:
        return "ongoing";
    }
    return "unknown";
}

inline EventClass event_class_from_string(std::string_view s)
{
    for (auto c : {EventClass::Normal, EventClass::Seizure, EventClass::Ongoing})
        if (s == to_string(c))
            return c;
    throw InputError("unknown event class '" + std::string(s) + "'");
}

/// Output of event detection, before classification.
struct EventInterval
{
    double start_s = 0.0;  // first window end above threshold
    double end_s = 0.0;    // last window end above threshold, minus the window length
    double close_s = 0.0;  // when the event was closed (hysteresis elapsed or trace end)
    bool open_at_end = false;
};

struct DetectedEvent
{
    double start_s = 0.0;
    double end_s = 0.0;
    EventClass event_class = EventClass::Normal;
    double b_pe_hz = std::numeric_limits<double>::quiet_NaN();
    double decision_time_s = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_windows = 0;
};

// ---------------------------------------------------------------------------
// Detection

/// Energy above `bw_adj_hz` in the rectangular window p[end - len, end).
inline double out_of_band_energy(std::span<const double> p, std::size_t end, std::size_t len, double sample_rate_hz,
                                 double bw_adj_hz, Periodogram &pg)
{
    require(len >= 2 && end >= len && end <= p.size(), "out_of_band_energy: window outside the series");
    const auto &power = pg.power(p.subspan(end - len, len));
    return band_power(power, len, sample_rate_hz, bw_adj_hz, std::numeric_limits<double>::infinity());
}

inline std::size_t samples_for(double seconds, double sample_rate_hz)
{
    return static_cast<std::size_t>(std::llround(seconds * sample_rate_hz));
}

/// Maximum out-of-band energy over ED windows lying inside p[first, last), at the ED hop.
inline double calibration_noise_power(std::span<const double> p, std::size_t first, std::size_t last,
                                      double sample_rate_hz, const DetectorConfig &cfg)
{
    const auto len = samples_for(cfg.t_win_ed_s, sample_rate_hz);
    const auto hop = std::max<std::size_t>(1, samples_for(cfg.ed_hop_s, sample_rate_hz));
    require(last <= p.size() && first + len <= last, "calibration_noise_power: calibration shorter than one ED window");
    Periodogram pg;
    double sigma = 0.0;
    for (std::size_t end = first + len; end <= last; end += hop)
        sigma = std::max(sigma, out_of_band_energy(p, end, len, sample_rate_hz, cfg.bw_br_adj_hz(), pg));
    return sigma;
}

/// Threshold test at every ED hop; consecutive H1 positions form events, closed after
/// `hysteresis_s` of H0. `t0_s` is the time of p[0].
inline std::vector<EventInterval> detect_events(std::span<const double> p, double sample_rate_hz, double t0_s,
                                                const CalibrationState &calibration, const DetectorConfig &cfg)
{
    require(calibration.sigma_c_sq >= 0.0 && !calibration.selected_ids.empty(),
            "detect_events: missing calibration");
    const auto len = samples_for(cfg.t_win_ed_s, sample_rate_hz);
    const auto hop = std::max<std::size_t>(1, samples_for(cfg.ed_hop_s, sample_rate_hz));
    const double gamma = cfg.q * calibration.sigma_c_sq;
    std::vector<EventInterval> events;
    if (p.size() < len)
        return events;

    Periodogram pg;
    bool open = false;
    double first_h1 = 0.0, last_h1 = 0.0;
    auto time_of = [&](std::size_t end) { return t0_s + static_cast<double>(end) / sample_rate_hz; };
    for (std::size_t end = len; end <= p.size(); end += hop)
    {
        const double tau = time_of(end);
        const bool h1 = out_of_band_energy(p, end, len, sample_rate_hz, cfg.bw_br_adj_hz(), pg) > gamma;
        if (h1)
        {
            if (!open)
            {
                open = true;
                first_h1 = tau;
            }
            last_h1 = tau;
        }
        else if (open && tau - last_h1 >= cfg.hysteresis_s - 1e-9)
        {
            events.push_back({first_h1, std::max(first_h1, last_h1 - cfg.t_win_ed_s), tau, false});
            open = false;
        }
    }
    if (open)
        events.push_back({first_h1, std::max(first_h1, last_h1 - cfg.t_win_ed_s), time_of(p.size()), true});
    return events;
}

// ---------------------------------------------------------------------------
// Bandwidth estimation

/// Running median of per-window bandwidths; windows are appended, never recomputed.
class BandwidthTracker
{
public:
    void add(double bandwidth_hz)
    {
        values_.insert(std::upper_bound(values_.begin(), values_.end(), bandwidth_hz), bandwidth_hz);
    }

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double median() const
    {
        require(!values_.empty(), "BandwidthTracker: no windows");
        const std::size_t n = values_.size();
        return n % 2 == 1 ? values_[n / 2] : 0.5 * (values_[n / 2 - 1] + values_[n / 2]);
    }

private:
    std::vector<double> values_;
};

/// 90%-power bandwidth of one window, or empty (with a warning) for a zero-power window.
inline std::optional<double> window_bandwidth(std::span<const double> segment, double sample_rate_hz, Periodogram &pg)
{
    const auto b = percentile_bandwidth(pg.power(segment), segment.size(), sample_rate_hz, 0.1);
    if (!b)
        warn("zero-power classification window skipped");
    return b;
}

/// B_pe over all T_win^EC windows of `p_event` (overlapping per cfg.ec_overlap). An
/// event shorter than one window is measured as a single truncated window.
inline std::optional<double> estimate_event_bandwidth(std::span<const double> p_event, double sample_rate_hz,
                                                      const DetectorConfig &cfg)
{
    const auto len = samples_for(cfg.t_win_ec_s, sample_rate_hz);
    const auto hop = std::max<std::size_t>(1, samples_for(cfg.ec_hop_s(), sample_rate_hz));
    Periodogram pg;
    BandwidthTracker tracker;
    if (p_event.size() < len)
    {
        if (p_event.size() >= 2)
            if (auto b = window_bandwidth(p_event, sample_rate_hz, pg))
                tracker.add(*b);
    }
    else
    {
        for (std::size_t first = 0; first + len <= p_event.size(); first += hop)
            if (auto b = window_bandwidth(p_event.subspan(first, len), sample_rate_hz, pg))
                tracker.add(*b);
    }
    if (tracker.empty())
        return std::nullopt;
    return tracker.median();
}

/// Streaming classification of one detected event.
///
/// EC windows are anchored at the event start; window j covers [start + j h, start + j h + T)
/// and completes at start + j h + T. Only windows completed before the event closed are used.
/// The running median is checked at max(start + T_min, first completion) and at every later
/// completion; Seizure fires at the first check above f_th. An event too short for any full
/// window is measured once over [start, end].
inline DetectedEvent classify_event(const EventInterval &event, std::span<const double> p, double sample_rate_hz,
                                    double t0_s, const DetectorConfig &cfg, double f_th_hz)
{
    DetectedEvent out;
    out.start_s = event.start_s;
    out.end_s = event.end_s;
    out.event_class = EventClass::Normal;
    if (event.end_s - event.start_s < cfg.t_min_s)
    {
        if (event.open_at_end)
            out.event_class = EventClass::Ongoing;
        return out;
    }

    auto index_of = [&](double t)
    {
        const double i = std::round((t - t0_s) * sample_rate_hz);
        return static_cast<std::size_t>(std::clamp(i, 0.0, static_cast<double>(p.size())));
    };
    const auto len = samples_for(cfg.t_win_ec_s, sample_rate_hz);
    const auto hop = std::max<std::size_t>(1, samples_for(cfg.ec_hop_s(), sample_rate_hz));
    const std::size_t first = index_of(event.start_s);
    const std::size_t close = index_of(event.close_s);
    const double first_check = event.start_s + cfg.t_min_s;

    Periodogram pg;
    BandwidthTracker tracker;
    for (std::size_t w0 = first; w0 + len <= close; w0 += hop)
    {
        if (auto b = window_bandwidth(p.subspan(w0, len), sample_rate_hz, pg))
            tracker.add(*b);
        ++out.n_windows;
        const double completed = t0_s + static_cast<double>(w0 + len) / sample_rate_hz;
        const double next_completed = completed + static_cast<double>(hop) / sample_rate_hz;
        const bool next_in_time = w0 + hop + len <= close;
        // Before T_min only the last window completed by then is checked.
        if (tracker.empty() || (next_in_time && next_completed <= first_check + 1e-9))
            continue;
        const double check = std::max(completed, first_check);
        if (check > event.close_s + 1e-9)
            break;
        if (out.event_class != EventClass::Seizure && tracker.median() > f_th_hz)
        {
            out.event_class = EventClass::Seizure;
            out.decision_time_s = check;
        }
    }

    if (out.n_windows == 0)
    {
        const std::size_t last = index_of(event.end_s);
        if (last >= first + 2)
            if (auto b = window_bandwidth(p.subspan(first, last - first), sample_rate_hz, pg))
                tracker.add(*b);
        out.n_windows = 1;
        if (!tracker.empty() && tracker.median() > f_th_hz)
        {
            out.event_class = EventClass::Seizure;
            out.decision_time_s = std::max(event.close_s, first_check);
        }
    }
    if (!tracker.empty())
        out.b_pe_hz = tracker.median();
    if (event.open_at_end && out.event_class != EventClass::Seizure)
        out.event_class = EventClass::Ongoing;
    ensure(out.event_class != EventClass::Seizure || out.decision_time_s >= out.start_s + cfg.t_min_s - 1e-9,
           "classify_event: seizure verdict before T_min");
    return out;
}

inline std::vector<DetectedEvent> classify_events(std::span<const EventInterval> events, std::span<const double> p,
                                                  double sample_rate_hz, double t0_s, const DetectorConfig &cfg,
                                                  double f_th_hz)
{
    cfg.validate(f_th_hz);
    std::vector<DetectedEvent> out;
    out.reserve(events.size());
    for (const auto &e : events)
        out.push_back(classify_event(e, p, sample_rate_hz, t0_s, cfg, f_th_hz));
    return out;
}

/// Detection followed by classification.
inline std::vector<DetectedEvent> run_detector(std::span<const double> p, double sample_rate_hz, double t0_s,
                                               const CalibrationState &calibration, const DetectorConfig &cfg,
                                               double f_th_hz)
{
    cfg.validate(f_th_hz);
    const auto events = detect_events(p, sample_rate_hz, t0_s, calibration, cfg);
    return classify_events(events, p, sample_rate_hz, t0_s, cfg, f_th_hz);
}

} // namespace seizewatch
