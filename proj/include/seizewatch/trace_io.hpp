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

// Line-delimited text trace files.
//
//   line 1   JSON header: format, version, sample_rate_hz, n_rx, n_sc, n_records,
//            scalar, geometry, paths, outliers
//   line 2.. t_s re(0,0) im(0,0) re(0,1) im(0,1) ... (antenna-major, space separated)
//
// Numbers are written in shortest round-trip form, so write-then-read is bit exact.
// Labels live in a CSV sidecar: start_s,end_s,class,person_id,kind.

#pragma once

#include "csi_sim.hpp"

#include <json.hpp>

#include <charconv>
#include <cstring>
#include <fstream>
#include <variant>

namespace seizewatch
{

inline constexpr const char *kTraceFormat = "seizewatch-csi";
inline constexpr int kTraceVersion = 1;

inline std::string labels_path_for(const std::string &trace_path)
{
    return trace_path + ".labels.csv";
}

namespace detail
{

template <typename T>
void append_number(std::string &out, T value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    ensure(res.ec == std::errc(), "append_number: formatting failed");
    out.append(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view s, std::string_view what)
{
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size(), "malformed number '" + std::string(s) + "' in " + std::string(what));
    return v;
}

template <typename Scalar>
constexpr const char *scalar_name()
{
    return std::is_same_v<Scalar, float> ? "float32" : "float64";
}

} // namespace detail

template <typename Scalar>
nlohmann::json trace_header(const BasicCsiTrace<Scalar> &trace)
{
    nlohmann::json h;
    h["format"] = kTraceFormat;
    h["version"] = kTraceVersion;
    h["sample_rate_hz"] = trace.sample_rate_hz;
    h["n_rx"] = trace.n_rx;
    h["n_sc"] = trace.n_sc;
    h["n_records"] = trace.n_samples();
    h["scalar"] = detail::scalar_name<Scalar>();
    h["geometry"] = {{"wavelength_m", trace.geometry.wavelength_m()}, {"psi", trace.geometry.psi()}};
    if (trace.geometry.phi_rad())
        h["geometry"]["phi_rad"] = *trace.geometry.phi_rad();
    nlohmann::json paths = nlohmann::json::array();
    for (const auto &person : trace.paths)
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &p : person)
            arr.push_back({p.alpha_d, p.mu_d, p.alpha_r, p.mu_r});
        paths.push_back(std::move(arr));
    }
    h["paths"] = std::move(paths);
    nlohmann::json outliers = nlohmann::json::array();
    for (const auto &o : trace.outliers)
        outliers.push_back({o.channel, o.sample});
    h["outliers"] = std::move(outliers);
    return h;
}

inline void write_labels(const std::string &path, const std::vector<LabelInterval> &labels)
{
    std::ofstream out(path);
    require(out.good(), "write_labels: cannot open " + path);
    out << "start_s,end_s,class,person_id,kind\n";
    for (const auto &l : labels)
    {
        std::string line;
        detail::append_number(line, l.start_s);
        line += ',';
        detail::append_number(line, l.end_s);
        line += ',';
        line += to_string(l.label);
        line += ',';
        line += std::to_string(l.person_id);
        line += ',';
        line += to_string(l.kind);
        out << line << '\n';
    }
    require(out.good(), "write_labels: write failed for " + path);
}

inline std::vector<LabelInterval> read_labels(const std::string &path)
{
    std::ifstream in(path);
    require(in.good(), "read_labels: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "read_labels: empty label file");
    std::vector<LabelInterval> labels;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        require(cells.size() >= 4, "read_labels: expected start_s,end_s,class,person_id[,kind]");
        LabelInterval l;
        l.start_s = detail::parse_number<double>(cells[0], "labels");
        l.end_s = detail::parse_number<double>(cells[1], "labels");
        l.label = label_class_from_string(cells[2]);
        l.person_id = detail::parse_number<int>(cells[3], "labels");
        l.kind = cells.size() > 4 ? event_kind_from_string(cells[4])
                                  : (l.label == LabelClass::Seizure ? EventKind::Seizure : EventKind::PostureShift);
        require(l.end_s >= l.start_s, "read_labels: label ends before it starts");
        labels.push_back(l);
    }
    return labels;
}

/// Writes the trace and its label sidecar.
template <typename Scalar>
void write_trace(const std::string &path, const BasicCsiTrace<Scalar> &trace)
{
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_trace: cannot open " + path);
    out << trace_header(trace).dump() << '\n';
    std::string line;
    for (std::size_t k = 0; k < trace.n_samples(); ++k)
    {
        line.clear();
        detail::append_number(line, trace.timestamps_s[k]);
        for (const auto &ch : trace.channels)
        {
            line += ' ';
            detail::append_number(line, ch[k].real());
            line += ' ';
            detail::append_number(line, ch[k].imag());
        }
        line += '\n';
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    require(out.good(), "write_trace: write failed for " + path);
    write_labels(labels_path_for(path), trace.labels);
}

inline nlohmann::json read_trace_header(std::istream &in)
{
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "read_trace: empty file");
    nlohmann::json h;
    try
    {
        h = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::exception &e)
    {
        throw InputError(std::string("read_trace: malformed header: ") + e.what());
    }
    require(h.value("format", "") == kTraceFormat, "read_trace: not a seizewatch trace");
    require(h.value("version", 0) == kTraceVersion, "read_trace: unsupported format version");
    return h;
}

/// Reads a trace and, when present, its label sidecar.
template <typename Scalar>
BasicCsiTrace<Scalar> read_trace(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_trace: cannot open " + path);
    const auto h = read_trace_header(in);
    BasicCsiTrace<Scalar> trace;
    try
    {
        require(h.at("scalar").get<std::string>() == detail::scalar_name<Scalar>(),
                "read_trace: sample precision does not match the requested type");
        trace.sample_rate_hz = h.at("sample_rate_hz").get<double>();
        trace.n_rx = h.at("n_rx").get<int>();
        trace.n_sc = h.at("n_sc").get<int>();
        const auto &g = h.at("geometry");
        trace.geometry = SceneGeometry(g.at("wavelength_m").get<double>(), g.at("psi").get<double>());
        if (g.contains("phi_rad"))
        {
            const auto phi = g.at("phi_rad").get<double>();
            trace.geometry = SceneGeometry::from_angle(trace.geometry.wavelength_m(), phi);
            require(trace.geometry.psi() == g.at("psi").get<double>(), "read_trace: psi inconsistent with phi_rad");
        }
        for (const auto &person : h.at("paths"))
        {
            std::vector<PathParams> ps;
            for (const auto &p : person)
                ps.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()});
            trace.paths.push_back(std::move(ps));
        }
        for (const auto &o : h.at("outliers"))
            trace.outliers.push_back({o.at(0).get<std::uint32_t>(), o.at(1).get<std::uint32_t>()});
    }
    catch (const nlohmann::json::exception &e)
    {
        throw InputError(std::string("read_trace: malformed header: ") + e.what());
    }
    require(trace.sample_rate_hz > 0.0 && trace.n_rx >= 1 && trace.n_sc >= 1, "read_trace: invalid receiver layout");
    const auto n_records = h.at("n_records").get<std::size_t>();
    const std::size_t n_ch = trace.n_channels();
    trace.timestamps_s.reserve(n_records);
    trace.channels.assign(n_ch, {});
    for (auto &ch : trace.channels)
        ch.reserve(n_records);

    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        std::string_view rest(line);
        auto next = [&]() -> std::string_view
        {
            const auto sp = rest.find(' ');
            const auto tok = rest.substr(0, sp);
            rest = sp == std::string_view::npos ? std::string_view() : rest.substr(sp + 1);
            require(!tok.empty(), "read_trace: short record");
            return tok;
        };
        const double t = detail::parse_number<double>(next(), "record timestamp");
        require(trace.timestamps_s.empty() || t > trace.timestamps_s.back(), "read_trace: timestamps must increase");
        trace.timestamps_s.push_back(t);
        for (std::size_t c = 0; c < n_ch; ++c)
        {
            const auto re = detail::parse_number<Scalar>(next(), "record");
            const auto im = detail::parse_number<Scalar>(next(), "record");
            trace.channels[c].emplace_back(re, im);
        }
        require(rest.empty(), "read_trace: record has extra values");
    }
    require(trace.timestamps_s.size() == n_records, "read_trace: header n_records does not match the record count");
    for (const auto &o : trace.outliers)
        require(o.channel < n_ch && o.sample < n_records, "read_trace: outlier log out of range");

    const auto lp = labels_path_for(path);
    if (std::ifstream(lp).good())
        trace.labels = read_labels(lp);
    trace.rebuild_label_track();
    return trace;
}

using AnyCsiTrace = std::variant<CsiTrace, CompactCsiTrace>;

/// Reads a trace at the precision recorded in its header.
inline AnyCsiTrace read_any_trace(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_trace: cannot open " + path);
    const auto h = read_trace_header(in);
    if (h.value("scalar", "") == "float32")
        return read_trace<float>(path);
    return read_trace<double>(path);
}

/// FNV-1a over timestamps and samples; identifies the data a report was computed from.
template <typename Scalar>
std::string trace_checksum(const BasicCsiTrace<Scalar> &trace)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const void *data, std::size_t n)
    {
        const auto *p = static_cast<const unsigned char *>(data);
        for (std::size_t i = 0; i < n; ++i)
        {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix(trace.timestamps_s.data(), trace.timestamps_s.size() * sizeof(double));
    for (const auto &ch : trace.channels)
        mix(ch.data(), ch.size() * sizeof(std::complex<Scalar>));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace seizewatch
