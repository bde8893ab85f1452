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

// seizewatch command line: simulate, detect, sweep, oracle.
// Exit codes: 0 success, 2 input error, 3 internal invariant violation.

#include "seizewatch/config.hpp"
#include "seizewatch/metrics.hpp"
#include "seizewatch/pipeline.hpp"
#include "seizewatch/spectral_oracle.hpp"
#include "seizewatch/trace_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace seizewatch;

namespace
{

constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;

struct SimulateArgs
{
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string precision;
};

struct PipelineOverrides
{
    std::string config;
    std::optional<double> cal_start_s;
    std::optional<double> cal_len_s;
    std::optional<double> f_th_hz;
    std::optional<double> t_min_s;
    std::optional<double> psi;
    std::optional<std::size_t> k;

    PipelineConfig resolve(const SceneGeometry &trace_geometry) const
    {
        PipelineConfig cfg = config.empty() ? PipelineConfig{} : load_pipeline_config(config);
        if (cal_start_s)
            cfg.cal_start_s = *cal_start_s;
        if (cal_len_s)
            cfg.t_cal_s = *cal_len_s;
        if (f_th_hz)
            cfg.detector.f_th_hz = *f_th_hz;
        if (t_min_s)
            cfg.detector.t_min_s = *t_min_s;
        if (k)
            cfg.k = *k;
        if (psi)
            cfg.geometry = SceneGeometry(cfg.geometry.value_or(trace_geometry).wavelength_m(), *psi);
        cfg.validate();
        return cfg;
    }

    void add_to(CLI::App *cmd)
    {
        cmd->add_option("--config", config, "pipeline config (JSON)")->check(CLI::ExistingFile);
        cmd->add_option("--cal-start", cal_start_s, "calibration window start, seconds");
        cmd->add_option("--cal-len", cal_len_s, "calibration window length, seconds");
        cmd->add_option("--f-th", f_th_hz, "classification threshold, Hz (derived from geometry by default)");
        cmd->add_option("--t-min", t_min_s, "minimum event duration for bandwidth analysis, seconds");
        cmd->add_option("--psi", psi, "geometry factor used to derive f_th");
        cmd->add_option("--k", k, "number of selected streams");
    }
};

struct DetectArgs
{
    std::string trace;
    std::string events;
    std::string report;
    PipelineOverrides overrides;
};

struct SweepArgs
{
    std::string trace_dir;
    std::string param;
    double from = 0.0;
    double to = 0.0;
    double step = 1.0;
    std::string out;
    PipelineOverrides overrides;
};

struct OracleArgs
{
    double beta_prime = 1.0;
    double f_o_hz = 1.0;
    double delta_mu = 0.0;
    double amplitude = 1.0;
};

std::string fmt(double v, int digits = 4)
{
    if (!std::isfinite(v))
        return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

int cmd_simulate(const SimulateArgs &a)
{
    auto cfg = load_simulation_config(a.scenario);
    if (a.seed)
    {
        // Re-draw the random layout under the new seed.
        auto j = detail::load_json(a.scenario);
        j["seed"] = *a.seed;
        const auto slash = a.scenario.find_last_of('/');
        cfg = simulation_from_json(j, slash == std::string::npos ? "" : a.scenario.substr(0, slash));
    }
    if (!a.precision.empty())
        cfg.compact = a.precision == "float32";

    auto run = [&](auto tag)
    {
        using Scalar = decltype(tag);
        auto trace = generate_trace<Scalar>(cfg.scenario, cfg.geometry, cfg.noise, cfg.seed, cfg.receiver);
        if (cfg.second_person)
            trace = superpose_person(trace, *cfg.second_person, cfg.geometry, cfg.seed, cfg.receiver);
        write_trace(a.out, trace);
        std::size_t n_seizure = 0, n_normal = 0;
        for (const auto &l : trace.labels)
            (l.label == LabelClass::Seizure ? n_seizure : n_normal) += 1;
        std::cout << "trace       " << a.out << "\n"
                  << "labels      " << labels_path_for(a.out) << "\n"
                  << "duration_s  " << fmt(trace.duration_s(), 2) << "\n"
                  << "records     " << trace.n_samples() << " x " << trace.n_channels() << " channels\n"
                  << "events      " << n_seizure << " seizure, " << n_normal << " normal\n"
                  << "psi         " << fmt(cfg.geometry.psi(), 3) << "\n"
                  << "f_th_hz     " << fmt(derive_f_th(cfg.geometry), 3) << "\n"
                  << "checksum    " << trace_checksum(trace) << "\n";
    };
    if (cfg.compact)
        run(float{});
    else
        run(double{});
    return 0;
}

template <typename Scalar>
void check_calibration_window(const BasicCsiTrace<Scalar> &trace, const PipelineConfig &cfg)
{
    const double lo = cfg.cal_start_s;
    const double hi = cfg.cal_start_s + cfg.t_cal_s;
    for (const auto &l : trace.labels)
        require(!(l.start_s < hi && l.end_s > lo),
                "calibration window [" + fmt(lo, 2) + ", " + fmt(hi, 2) + ") s overlaps a labelled " +
                    to_string(l.kind) + " event; calibration must be breathing only");
}

int cmd_detect(const DetectArgs &a)
{
    const auto any = read_any_trace(a.trace);
    return std::visit(
        [&](const auto &trace)
        {
            const auto cfg = a.overrides.resolve(trace.geometry);
            check_calibration_window(trace, cfg);
            const auto result = run_pipeline(trace, cfg);
            auto report = score_events(result.events, trace.labels);
            report.config = to_json(cfg);
            report.config["f_th_hz_resolved"] = result.f_th_hz;
            report.config["sigma_c_sq"] = result.pre.calibration.sigma_c_sq;
            nlohmann::json selected = nlohmann::json::array();
            for (const auto &id : result.pre.calibration.selected_ids)
                selected.push_back(to_string(id));
            report.config["selected_streams"] = selected;
            report.trace_checksum = trace_checksum(trace);

            const auto events_path = a.events.empty() ? a.trace + ".events.csv" : a.events;
            const auto report_path = a.report.empty() ? a.trace + ".report.json" : a.report;
            write_events_csv(events_path, result.events);
            std::ofstream out(report_path);
            require(out.good(), "cannot open " + report_path);
            out << to_json(report).dump(2) << '\n';

            std::cout << "events      " << result.events.size() << " -> " << events_path << "\n"
                      << "report      " << report_path << "\n"
                      << "f_th_hz     " << fmt(result.f_th_hz, 3) << "\n"
                      << "SDR_pct     " << (report.sdr_pct ? fmt(*report.sdr_pct, 1) : "n/a") << "\n"
                      << "P_FA        " << fmt(report.p_fa, 4) << "\n"
                      << "MRT_s       " << (report.mrt_s ? fmt(*report.mrt_s, 2) : "n/a") << "\n";
            return 0;
        },
        any);
}

struct CachedTrace
{
    PipelineResult result;
    std::vector<LabelInterval> labels;
    SceneGeometry geometry;
};

int cmd_sweep(const SweepArgs &a)
{
    require(a.param == "f_th" || a.param == "t_min" || a.param == "psi", "sweep: --param must be f_th, t_min or psi");
    require(a.step > 0.0 && a.to >= a.from, "sweep: need step > 0 and to >= from");
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(a.trace_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".trace")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    require(!files.empty(), "sweep: no *.trace files in " + a.trace_dir);

    std::vector<CachedTrace> cache;
    PipelineConfig base;
    for (const auto &f : files)
    {
        const auto any = read_any_trace(f.string());
        std::visit(
            [&](const auto &trace)
            {
                base = a.overrides.resolve(trace.geometry);
                check_calibration_window(trace, base);
                cache.push_back({run_pipeline(trace, base), trace.labels, trace.geometry});
            },
            any);
        std::cerr << "processed " << f.string() << "\n";
    }

    std::ofstream out(a.out);
    require(out.good(), "cannot open " + a.out);
    out << "param_value,f_th_hz,t_min_s,sdr_pct,p_fa,mrt_s\n";
    const auto n_steps = static_cast<long>(std::floor((a.to - a.from) / a.step + 1e-9));
    for (long i = 0; i <= n_steps; ++i)
    {
        const double v = a.from + static_cast<double>(i) * a.step;
        DetectorConfig det = base.detector;
        std::vector<RunReport> reports;
        double f_th = 0.0;
        for (const auto &c : cache)
        {
            f_th = c.result.f_th_hz;
            if (a.param == "f_th")
                f_th = v;
            else if (a.param == "t_min")
                det.t_min_s = v;
            else
                f_th = derive_f_th(SceneGeometry(base.geometry.value_or(c.geometry).wavelength_m(), v));
            const auto events = reclassify(c.result, det, f_th);
            reports.push_back(score_events(events, c.labels));
        }
        const auto pooled = pool_reports(reports);
        out << fmt(v, 4) << ',' << fmt(f_th, 4) << ',' << fmt(det.t_min_s, 4) << ','
            << (pooled.sdr_pct ? fmt(*pooled.sdr_pct, 2) : "") << ',' << fmt(pooled.p_fa, 6) << ','
            << (pooled.mrt_s ? fmt(*pooled.mrt_s, 4) : "") << '\n';
    }
    std::cout << "sweep       " << a.param << " over " << files.size() << " traces -> " << a.out << "\n";
    return 0;
}

int cmd_oracle(const OracleArgs &a)
{
    const auto spec = bessel_line_spectrum(a.beta_prime, a.f_o_hz, a.delta_mu, a.amplitude);
    std::cout << "beta_prime  " << fmt(a.beta_prime, 4) << "\n"
              << "f_o_hz      " << fmt(a.f_o_hz, 4) << "\n"
              << "delta_mu    " << fmt(a.delta_mu, 4) << "\n"
              << "bandwidth   " << fmt(carson_bandwidth(a.beta_prime, a.f_o_hz), 4) << " Hz\n"
              << "order,frequency_hz,re,im,magnitude\n";
    for (const auto &l : spec.lines)
        std::cout << l.order << ',' << fmt(l.frequency_hz, 4) << ',' << fmt(l.amplitude.real(), 8) << ','
                  << fmt(l.amplitude.imag(), 8) << ',' << fmt(std::abs(l.amplitude), 8) << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"seizewatch: WiFi CSI nocturnal seizure detection"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto *simulate = app.add_subcommand("simulate", "generate a labelled CSI trace from a scenario config");
    simulate->add_option("--scenario", sim.scenario, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out, "output trace path")->required();
    simulate->add_option("--seed", sim.seed, "override the config seed");
    simulate->add_option("--precision", sim.precision, "sample precision")->check(CLI::IsMember({"float32", "float64"}));

    DetectArgs det;
    auto *detect = app.add_subcommand("detect", "run the detection pipeline on a trace and score it");
    detect->add_option("--trace", det.trace, "trace file")->required()->check(CLI::ExistingFile);
    detect->add_option("--events", det.events, "events CSV output (default <trace>.events.csv)");
    detect->add_option("--report", det.report, "report JSON output (default <trace>.report.json)");
    det.overrides.add_to(detect);

    SweepArgs sw;
    auto *sweep = app.add_subcommand("sweep", "metrics versus f_th, t_min or psi over a directory of traces");
    sweep->add_option("--trace-dir", sw.trace_dir, "directory of *.trace files")->required()->check(CLI::ExistingDirectory);
    sweep->add_option("--param", sw.param, "swept parameter")->required()->check(CLI::IsMember({"f_th", "t_min", "psi"}));
    sweep->add_option("--from", sw.from, "first value")->required();
    sweep->add_option("--to", sw.to, "last value")->required();
    sweep->add_option("--step", sw.step, "step")->required();
    sweep->add_option("--out", sw.out, "output CSV")->required();
    sw.overrides.add_to(sweep);

    OracleArgs orc;
    auto *oracle = app.add_subcommand("oracle", "print the analytic line spectrum and bandwidth");
    oracle->add_option("--beta-prime", orc.beta_prime, "modulation index")->required();
    oracle->add_option("--f-o", orc.f_o_hz, "motion frequency, Hz")->required();
    oracle->add_option("--delta-mu", orc.delta_mu, "path phase offset, rad")->required();
    oracle->add_option("--amplitude", orc.amplitude, "line amplitude scale");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try
    {
        if (*simulate)
            return cmd_simulate(sim);
        if (*detect)
            return cmd_detect(det);
        if (*sweep)
            return cmd_sweep(sw);
        if (*oracle)
            return cmd_oracle(orc);
    }
    catch (const InputError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    catch (const InvariantError &e)
    {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInvariant;
    }
    catch (const std::exception &e)
    {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInvariant;
    }
    return 0;
}
