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

// JSON scenario and detector configuration. Unknown keys are rejected so typos fail loudly.

#pragma once

#include "pipeline.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>

namespace seizewatch
{

namespace detail
{

inline void check_keys(const nlohmann::json &j, std::initializer_list<const char *> allowed, const std::string &where)
{
    require(j.is_object(), where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto &[key, value] : j.items())
        require(ok.count(key) > 0, where + ": unknown key '" + key + "'");
}

template <typename T>
void read_opt(const nlohmann::json &j, const char *key, T &dst)
{
    if (j.contains(key) && !j.at(key).is_null())
        dst = j.at(key).get<T>();
}

inline nlohmann::json load_json(const std::string &path)
{
    std::ifstream in(path);
    require(in.good(), "cannot open config " + path);
    try
    {
        return nlohmann::json::parse(in, nullptr, true, true);
    }
    catch (const nlohmann::json::exception &e)
    {
        throw InputError("malformed config " + path + ": " + e.what());
    }
}

} // namespace detail

inline SceneGeometry geometry_from_json(const nlohmann::json &j)
{
    detail::check_keys(j, {"wavelength_m", "psi", "phi_rad"}, "geometry");
    double lambda = kChannel48WavelengthM;
    detail::read_opt(j, "wavelength_m", lambda);
    if (j.contains("phi_rad"))
    {
        require(!j.contains("psi"), "geometry: give psi or phi_rad, not both");
        return SceneGeometry::from_angle(lambda, j.at("phi_rad").get<double>());
    }
    double psi = 1.0;
    detail::read_opt(j, "psi", psi);
    return SceneGeometry(lambda, psi);
}

/// A fully specified simulation: scenario(s), receiver, noise and seed.
struct SimulationConfig
{
    Scenario scenario;
    std::optional<Scenario> second_person;
    SceneGeometry geometry{kChannel48WavelengthM, 1.0};
    NoiseSpec noise;
    SimOptions receiver;
    std::uint64_t seed = 1;
    bool compact = true; // float32 samples
};

namespace detail
{

inline MotionProfile motion_from_json(const nlohmann::json &j, double duration_s, EventKind kind, std::mt19937_64 &rng,
                                      double start_s, const std::string &base_dir)
{
    if (j.contains("speed_csv"))
    {
        auto path = j.at("speed_csv").get<std::string>();
        if (!path.empty() && path.front() != '/' && !base_dir.empty())
            path = base_dir + "/" + path;
        std::string col = j.value("column", "auto");
        const std::map<std::string, SpeedColumn> cols = {{"auto", SpeedColumn::Auto}, {"speed", SpeedColumn::Speed},
                                                          {"ax", SpeedColumn::Ax},     {"ay", SpeedColumn::Ay},
                                                          {"az", SpeedColumn::Az},     {"norm", SpeedColumn::Norm}};
        require(cols.count(col) > 0, "event: unknown speed column '" + col + "'");
        return import_speed_csv(path, cols.at(col));
    }
    if (j.contains("v_max_mps") || j.contains("f_o_hz"))
    {
        require(j.contains("v_max_mps") && j.contains("f_o_hz"), "event: sinusoid needs v_max_mps and f_o_hz");
        return MotionProfile::sinusoid(j.at("v_max_mps").get<double>(), j.at("f_o_hz").get<double>(), duration_s,
                                       j.value("phase_rad", 0.0));
    }
    if (kind == EventKind::Seizure)
        return make_seizure(start_s, duration_s, rng).motion;
    return make_normal_event(kind, start_s, duration_s, rng).motion;
}

inline Scenario scenario_from_json(const nlohmann::json &j, double duration_s, std::uint64_t seed, int person_id,
                                   const std::string &base_dir)
{
    check_keys(j, {"breathing", "events", "overnight", "person_id", "min_seizure_s"}, "scenario");
    require(!(j.contains("events") && j.contains("overnight")), "scenario: give events or overnight, not both");
    Scenario sc;
    if (j.contains("overnight"))
    {
        const auto &o = j.at("overnight");
        check_keys(o, {"n_normal", "normal_per_hour", "n_seizure", "calibration_s", "min_gap_s", "seizure"}, "overnight");
        OvernightSpec spec;
        spec.duration_s = duration_s;
        spec.person_id = person_id;
        spec.n_normal = normal_event_count(duration_s / 3600.0, o.value("normal_per_hour", 3.0));
        read_opt(o, "n_normal", spec.n_normal);
        read_opt(o, "n_seizure", spec.n_seizure);
        read_opt(o, "calibration_s", spec.calibration_s);
        read_opt(o, "min_gap_s", spec.min_gap_s);
        if (o.contains("seizure"))
        {
            const auto &s = o.at("seizure");
            check_keys(s, {"f_min_hz", "f_max_hz", "v_min_mps", "v_max_mps", "min_duration_s", "max_duration_s", "tonic_preamble"},
                       "overnight.seizure");
            read_opt(s, "f_min_hz", spec.seizure.f_min_hz);
            read_opt(s, "f_max_hz", spec.seizure.f_max_hz);
            read_opt(s, "v_min_mps", spec.seizure.v_min_mps);
            read_opt(s, "v_max_mps", spec.seizure.v_max_mps);
            read_opt(s, "min_duration_s", spec.seizure.min_duration_s);
            read_opt(s, "max_duration_s", spec.seizure.max_duration_s);
            read_opt(s, "tonic_preamble", spec.seizure.tonic_preamble);
        }
        sc = make_overnight_scenario(spec, seed);
    }
    else
    {
        sc.duration_s = duration_s;
        sc.person_id = person_id;
        sc.breathing = breathing_profile(0.25, duration_s);
        auto rng = make_rng(seed, static_cast<std::uint64_t>(person_id), 0xe7e47);
        if (j.contains("events"))
        {
            for (const auto &e : j.at("events"))
            {
                check_keys(e, {"kind", "start_s", "duration_s", "v_max_mps", "f_o_hz", "phase_rad", "speed_csv", "column"}, "event");
                ScenarioEvent ev;
                ev.kind = event_kind_from_string(e.at("kind").get<std::string>());
                ev.start_s = e.at("start_s").get<double>();
                ev.duration_s = e.value("duration_s", 0.0);
                require(ev.duration_s > 0.0 || e.contains("speed_csv"), "event: duration_s required");
                ev.motion = motion_from_json(e, ev.duration_s, ev.kind, rng, ev.start_s, base_dir);
                ev.duration_s = ev.motion.duration_s;
                sc.events.push_back(std::move(ev));
            }
        }
    }
    if (j.contains("breathing"))
    {
        const auto &b = j.at("breathing");
        check_keys(b, {"rate_hz", "displacement_m", "phase_rad"}, "breathing");
        sc.breathing = breathing_profile(b.value("rate_hz", 0.25), duration_s, b.value("displacement_m", kBreathingDisplacementM),
                                         b.value("phase_rad", 0.0));
    }
    read_opt(j, "person_id", sc.person_id);
    read_opt(j, "min_seizure_s", sc.min_seizure_s);
    sc.validate();
    return sc;
}

} // namespace detail

inline SimulationConfig simulation_from_json(const nlohmann::json &j, const std::string &base_dir = "")
{
    try
    {
        detail::check_keys(j, {"duration_s", "seed", "geometry", "receiver", "noise", "scenario", "second_person", "precision"},
                           "simulation");
        SimulationConfig cfg;
        const double duration = j.value("duration_s", 60.0);
        require(duration > 0.0, "simulation: duration_s must be positive");
        detail::read_opt(j, "seed", cfg.seed);
        if (j.contains("geometry"))
            cfg.geometry = geometry_from_json(j.at("geometry"));
        if (j.contains("receiver"))
        {
            const auto &r = j.at("receiver");
            detail::check_keys(r, {"sample_rate_hz", "n_rx", "n_sc", "alpha_d_min", "alpha_d_max", "ratio_min", "ratio_max"}, "receiver");
            detail::read_opt(r, "sample_rate_hz", cfg.receiver.sample_rate_hz);
            detail::read_opt(r, "n_rx", cfg.receiver.n_rx);
            detail::read_opt(r, "n_sc", cfg.receiver.n_sc);
            detail::read_opt(r, "alpha_d_min", cfg.receiver.alpha_d_min);
            detail::read_opt(r, "alpha_d_max", cfg.receiver.alpha_d_max);
            detail::read_opt(r, "ratio_min", cfg.receiver.ratio_min);
            detail::read_opt(r, "ratio_max", cfg.receiver.ratio_max);
        }
        if (j.contains("noise"))
        {
            const auto &n = j.at("noise");
            if (n.is_string())
            {
                const auto preset = n.get<std::string>();
                require(preset == "none" || preset == "moderate", "noise: preset must be none or moderate");
                cfg.noise = preset == "none" ? NoiseSpec::none() : NoiseSpec::moderate();
            }
            else
            {
                detail::check_keys(n, {"awgn_sigma", "outlier_rate", "outlier_magnitude", "jitter_std_s", "channel_noise_scale"}, "noise");
                detail::read_opt(n, "awgn_sigma", cfg.noise.awgn_sigma);
                detail::read_opt(n, "outlier_rate", cfg.noise.outlier_rate);
                detail::read_opt(n, "outlier_magnitude", cfg.noise.outlier_magnitude);
                detail::read_opt(n, "jitter_std_s", cfg.noise.jitter_std_s);
                detail::read_opt(n, "channel_noise_scale", cfg.noise.channel_noise_scale);
            }
        }
        if (j.contains("precision"))
        {
            const auto p = j.at("precision").get<std::string>();
            require(p == "float32" || p == "float64", "precision must be float32 or float64");
            cfg.compact = p == "float32";
        }
        cfg.scenario = detail::scenario_from_json(j.value("scenario", nlohmann::json::object()), duration, cfg.seed, 1, base_dir);
        if (j.contains("second_person"))
            cfg.second_person = detail::scenario_from_json(j.at("second_person"), duration, cfg.seed, 2, base_dir);
        return cfg;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw InputError(std::string("simulation config: ") + e.what());
    }
}

inline SimulationConfig load_simulation_config(const std::string &path)
{
    const auto slash = path.find_last_of('/');
    return simulation_from_json(detail::load_json(path), slash == std::string::npos ? "" : path.substr(0, slash));
}

inline DetectorConfig detector_from_json(const nlohmann::json &j, DetectorConfig cfg = {})
{
    detail::check_keys(j, {"t_win_ed_s", "t_win_ec_s", "t_min_s", "q", "f_th_hz", "f_o_br_hz", "ed_hop_s", "ec_overlap", "hysteresis_s"},
                       "detector");
    detail::read_opt(j, "t_win_ed_s", cfg.t_win_ed_s);
    detail::read_opt(j, "t_win_ec_s", cfg.t_win_ec_s);
    detail::read_opt(j, "t_min_s", cfg.t_min_s);
    detail::read_opt(j, "q", cfg.q);
    if (j.contains("f_th_hz") && !j.at("f_th_hz").is_null())
        cfg.f_th_hz = j.at("f_th_hz").get<double>();
    detail::read_opt(j, "f_o_br_hz", cfg.f_o_br_hz);
    detail::read_opt(j, "ed_hop_s", cfg.ed_hop_s);
    detail::read_opt(j, "ec_overlap", cfg.ec_overlap);
    detail::read_opt(j, "hysteresis_s", cfg.hysteresis_s);
    return cfg;
}

inline PipelineConfig pipeline_from_json(const nlohmann::json &j, PipelineConfig cfg = {})
{
    try
    {
        detail::check_keys(j, {"t_cal_s", "cal_start_s", "k", "hampel", "hampel_window", "hampel_sigmas", "pca_block_s",
                               "pca_overlap", "detector", "geometry"},
                           "pipeline");
        detail::read_opt(j, "t_cal_s", cfg.t_cal_s);
        detail::read_opt(j, "cal_start_s", cfg.cal_start_s);
        detail::read_opt(j, "k", cfg.k);
        detail::read_opt(j, "hampel", cfg.hampel);
        detail::read_opt(j, "hampel_window", cfg.hampel_window);
        detail::read_opt(j, "hampel_sigmas", cfg.hampel_sigmas);
        detail::read_opt(j, "pca_block_s", cfg.pca.block_s);
        detail::read_opt(j, "pca_overlap", cfg.pca.overlap);
        if (j.contains("detector"))
            cfg.detector = detector_from_json(j.at("detector"), cfg.detector);
        if (j.contains("geometry"))
            cfg.geometry = geometry_from_json(j.at("geometry"));
        cfg.validate();
        return cfg;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw InputError(std::string("pipeline config: ") + e.what());
    }
}

inline PipelineConfig load_pipeline_config(const std::string &path)
{
    return pipeline_from_json(detail::load_json(path));
}

inline nlohmann::json to_json(const PipelineConfig &cfg)
{
    nlohmann::json d = {{"t_win_ed_s", cfg.detector.t_win_ed_s}, {"t_win_ec_s", cfg.detector.t_win_ec_s},
                        {"t_min_s", cfg.detector.t_min_s},       {"q", cfg.detector.q},
                        {"f_o_br_hz", cfg.detector.f_o_br_hz},   {"ed_hop_s", cfg.detector.ed_hop_s},
                        {"ec_overlap", cfg.detector.ec_overlap}, {"hysteresis_s", cfg.detector.hysteresis_s}};
    d["f_th_hz"] = cfg.detector.f_th_hz ? nlohmann::json(*cfg.detector.f_th_hz) : nlohmann::json(nullptr);
    nlohmann::json j = {{"t_cal_s", cfg.t_cal_s},
                        {"cal_start_s", cfg.cal_start_s},
                        {"k", cfg.k},
                        {"hampel", cfg.hampel},
                        {"hampel_window", cfg.hampel_window},
                        {"hampel_sigmas", cfg.hampel_sigmas},
                        {"pca_block_s", cfg.pca.block_s},
                        {"pca_overlap", cfg.pca.overlap},
                        {"detector", d}};
    if (cfg.geometry)
        j["geometry"] = {{"wavelength_m", cfg.geometry->wavelength_m()}, {"psi", cfg.geometry->psi()}};
    return j;
}

} // namespace seizewatch
