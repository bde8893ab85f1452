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

// End-to-end pipeline: calibration, p(t), detection and classification.

#pragma once

#include "detector.hpp"

namespace seizewatch
{

struct PipelineConfig
{
    double t_cal_s = 13.0;
    double cal_start_s = 0.0;
    std::size_t k = 15;
    bool hampel = true;
    std::size_t hampel_window = 101;
    double hampel_sigmas = 3.0;
    PcaOptions pca;
    DetectorConfig detector;
    std::optional<SceneGeometry> geometry; // for the derived f_th; the trace's geometry when empty

    void validate() const
    {
        require(t_cal_s > 0.0 && cal_start_s >= 0.0, "PipelineConfig: invalid calibration window");
        require(k >= 2, "PipelineConfig: k must be at least 2");
        require(hampel_window >= 3 && hampel_window % 2 == 1, "PipelineConfig: Hampel window must be odd and >= 3");
    }
};

/// p(t) plus the calibration it was built with.
struct Preprocessed
{
    std::vector<double> p;
    double sample_rate_hz = 200.0;
    double t0_s = 0.0;
    CalibrationState calibration;
};

namespace detail
{

template <typename Scalar>
std::pair<std::size_t, std::size_t> calibration_range(const BasicCsiTrace<Scalar> &trace, const PipelineConfig &cfg)
{
    const double origin = grid_origin_s(trace);
    const auto first = static_cast<std::size_t>(std::llround(std::max(0.0, cfg.cal_start_s - origin) * trace.sample_rate_hz));
    const auto len = static_cast<std::size_t>(std::llround(cfg.t_cal_s * trace.sample_rate_hz));
    require(first + len <= trace.n_samples(), "calibration: trace shorter than the calibration window");
    return {first, first + len};
}

inline void hampel_all(StreamSet &set, const PipelineConfig &cfg)
{
    if (!cfg.hampel)
        return;
    for (auto &s : set.streams)
        hampel_filter_inplace(s, cfg.hampel_window, cfg.hampel_sigmas);
}

} // namespace detail

/// Stream selection over the calibration window. All derived streams are formed and
/// Hampel-filtered over the window only. sigma_c_sq is left at zero; see preprocess_trace.
template <typename Scalar>
CalibrationState select_calibration_streams(const BasicCsiTrace<Scalar> &trace, const PipelineConfig &cfg)
{
    cfg.validate();
    const auto [first, last] = detail::calibration_range(trace, cfg);
    CalibrationState cal;
    cal.t_cal_s = cfg.t_cal_s;
    cal.cal_start_s = grid_origin_s(trace) + static_cast<double>(first) / trace.sample_rate_hz;
    cal.bw_br_hz = cfg.detector.bw_br_hz();
    cal.reference_power = channel_reference_power(trace, first, last);
    const auto ids = all_stream_ids(trace.n_rx, trace.n_sc);
    auto set = derive_streams(trace, std::span<const StreamId>(ids), first, last, cal.reference_power);
    detail::hampel_all(set, cfg);
    auto sel = select_streams(set, cfg.t_cal_s, cfg.k, cal.bw_br_hz);
    cal.selected_ids = std::move(sel.ids);
    cal.selected_snr = std::move(sel.snr);
    return cal;
}

/// Calibration, then the selected streams over the whole trace, Hampel and block PCA.
/// sigma_c_sq is the largest ED-window energy of p(t) inside the calibration window.
template <typename Scalar>
Preprocessed preprocess_trace(const BasicCsiTrace<Scalar> &trace, const PipelineConfig &cfg)
{
    Preprocessed out;
    out.calibration = select_calibration_streams(trace, cfg);
    out.sample_rate_hz = trace.sample_rate_hz;
    out.t0_s = grid_origin_s(trace);
    auto set = derive_streams(trace, std::span<const StreamId>(out.calibration.selected_ids), 0, trace.n_samples(),
                              out.calibration.reference_power);
    detail::hampel_all(set, cfg);
    out.p = pca_first_component(set, cfg.pca);
    const auto [first, last] = detail::calibration_range(trace, cfg);
    out.calibration.sigma_c_sq = calibration_noise_power(out.p, first, last, out.sample_rate_hz, cfg.detector);
    out.calibration.validate(trace.n_derived_streams());
    return out;
}

struct PipelineResult
{
    Preprocessed pre;
    std::vector<EventInterval> intervals; // independent of f_th and T_min
    std::vector<DetectedEvent> events;
    double f_th_hz = 0.0;
};

template <typename Scalar>
PipelineResult run_pipeline(const BasicCsiTrace<Scalar> &trace, const PipelineConfig &cfg)
{
    PipelineResult r;
    r.f_th_hz = cfg.detector.resolve_f_th(cfg.geometry.value_or(trace.geometry));
    cfg.detector.validate(r.f_th_hz);
    r.pre = preprocess_trace(trace, cfg);
    r.intervals = detect_events(r.pre.p, r.pre.sample_rate_hz, r.pre.t0_s, r.pre.calibration, cfg.detector);
    r.events = classify_events(r.intervals, r.pre.p, r.pre.sample_rate_hz, r.pre.t0_s, cfg.detector, r.f_th_hz);
    return r;
}

/// Re-runs only classification, e.g. for an f_th or T_min sweep over cached p(t).
inline std::vector<DetectedEvent> reclassify(const PipelineResult &r, const DetectorConfig &cfg, double f_th_hz)
{
    return classify_events(r.intervals, r.pre.p, r.pre.sample_rate_hz, r.pre.t0_s, cfg, f_th_hz);
}

} // namespace seizewatch
