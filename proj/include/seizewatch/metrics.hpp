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

// Scoring detections against ground truth, and the events CSV.
//
// Matching: a detection matches a label when their intervals overlap. A seizure label
// counts as detected if any matching detection is a Seizure; RT is measured from the
// label onset to the earliest such decision. A detection matching any seizure label is
// never a false alarm. The remaining detections that match a normal label are the
// detected normal events; detections matching no label are reported as spurious.

#pragma once

#include "detector.hpp"
#include "trace_io.hpp"

namespace seizewatch
{

struct JoinedEvent
{
    DetectedEvent event;
    std::optional<LabelInterval> truth; // first overlapping label, seizures first
};

struct RunReport
{
    std::optional<double> sdr_pct; // empty without seizure labels
    double p_fa = 0.0;
    std::vector<double> rt_list_s;
    std::optional<double> mrt_s;
    std::size_t n_seizures = 0;
    std::size_t n_seizures_detected = 0;
    std::size_t n_normal_detected = 0;
    std::size_t n_false_alarms = 0;
    std::size_t n_spurious = 0;
    std::size_t n_spurious_seizure = 0;
    std::vector<JoinedEvent> events;
    nlohmann::json config;
    std::string trace_checksum;

    void validate() const
    {
        ensure(!sdr_pct || (*sdr_pct >= 0.0 && *sdr_pct <= 100.0), "RunReport: SDR outside [0, 100]");
        ensure(p_fa >= 0.0 && p_fa <= 1.0, "RunReport: P_FA outside [0, 1]");
        ensure(rt_list_s.empty() == !mrt_s.has_value(), "RunReport: MRT without response times");
    }
};

inline bool overlaps(const DetectedEvent &e, const LabelInterval &l)
{
    return e.start_s <= l.end_s && e.end_s >= l.start_s;
}

inline RunReport score_events(std::span<const DetectedEvent> events, std::span<const LabelInterval> labels)
{
    RunReport r;
    for (const auto &e : events)
    {
        JoinedEvent j{e, std::nullopt};
        for (const auto &l : labels)
            if (l.label == LabelClass::Seizure && overlaps(e, l))
            {
                j.truth = l;
                break;
            }
        if (!j.truth)
            for (const auto &l : labels)
                if (l.label != LabelClass::Seizure && overlaps(e, l))
                {
                    j.truth = l;
                    break;
                }
        r.events.push_back(j);
    }

    for (const auto &l : labels)
    {
        if (l.label != LabelClass::Seizure)
            continue;
        ++r.n_seizures;
        std::optional<double> decision;
        for (const auto &e : events)
            if (e.event_class == EventClass::Seizure && overlaps(e, l))
                decision = decision ? std::min(*decision, e.decision_time_s) : e.decision_time_s;
        if (decision)
        {
            ++r.n_seizures_detected;
            r.rt_list_s.push_back(*decision - l.start_s);
        }
    }
    for (const auto &j : r.events)
    {
        const bool seizure = j.event.event_class == EventClass::Seizure;
        if (!j.truth)
        {
            ++r.n_spurious;
            r.n_spurious_seizure += seizure ? 1 : 0;
        }
        else if (j.truth->label != LabelClass::Seizure)
        {
            ++r.n_normal_detected;
            r.n_false_alarms += seizure ? 1 : 0;
        }
    }
    if (r.n_seizures > 0)
        r.sdr_pct = 100.0 * static_cast<double>(r.n_seizures_detected) / static_cast<double>(r.n_seizures);
    if (r.n_normal_detected > 0)
        r.p_fa = static_cast<double>(r.n_false_alarms) / static_cast<double>(r.n_normal_detected);
    if (!r.rt_list_s.empty())
    {
        double sum = 0.0;
        for (double rt : r.rt_list_s)
            sum += rt;
        r.mrt_s = sum / static_cast<double>(r.rt_list_s.size());
    }
    r.validate();
    return r;
}

/// Pools several nights: SDR and P_FA over all labels and detections together.
inline RunReport pool_reports(std::span<const RunReport> reports)
{
    RunReport r;
    for (const auto &x : reports)
    {
        r.n_seizures += x.n_seizures;
        r.n_seizures_detected += x.n_seizures_detected;
        r.n_normal_detected += x.n_normal_detected;
        r.n_false_alarms += x.n_false_alarms;
        r.n_spurious += x.n_spurious;
        r.n_spurious_seizure += x.n_spurious_seizure;
        r.rt_list_s.insert(r.rt_list_s.end(), x.rt_list_s.begin(), x.rt_list_s.end());
    }
    if (r.n_seizures > 0)
        r.sdr_pct = 100.0 * static_cast<double>(r.n_seizures_detected) / static_cast<double>(r.n_seizures);
    if (r.n_normal_detected > 0)
        r.p_fa = static_cast<double>(r.n_false_alarms) / static_cast<double>(r.n_normal_detected);
    if (!r.rt_list_s.empty())
    {
        double sum = 0.0;
        for (double rt : r.rt_list_s)
            sum += rt;
        r.mrt_s = sum / static_cast<double>(r.rt_list_s.size());
    }
    r.validate();
    return r;
}

namespace detail
{

inline nlohmann::json optional_number(std::optional<double> v)
{
    return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json number_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace detail

inline nlohmann::json to_json(const RunReport &r)
{
    nlohmann::json j;
    j["sdr_pct"] = detail::optional_number(r.sdr_pct);
    j["p_fa"] = r.p_fa;
    j["rt_list_s"] = r.rt_list_s;
    j["mrt_s"] = detail::optional_number(r.mrt_s);
    j["counts"] = {{"seizures", r.n_seizures},
                   {"seizures_detected", r.n_seizures_detected},
                   {"normal_detected", r.n_normal_detected},
                   {"false_alarms", r.n_false_alarms},
                   {"spurious", r.n_spurious},
                   {"spurious_seizure", r.n_spurious_seizure}};
    nlohmann::json events = nlohmann::json::array();
    for (const auto &e : r.events)
    {
        nlohmann::json ej = {{"start_s", e.event.start_s},
                             {"end_s", e.event.end_s},
                             {"class", to_string(e.event.event_class)},
                             {"b_pe_hz", detail::number_or_null(e.event.b_pe_hz)},
                             {"decision_time_s", detail::number_or_null(e.event.decision_time_s)}};
        if (e.truth)
            ej["truth"] = {{"start_s", e.truth->start_s},
                           {"end_s", e.truth->end_s},
                           {"class", to_string(e.truth->label)},
                           {"kind", to_string(e.truth->kind)},
                           {"person_id", e.truth->person_id}};
        else
            ej["truth"] = nullptr;
        events.push_back(std::move(ej));
    }
    j["events"] = std::move(events);
    j["config"] = r.config;
    j["trace_checksum"] = r.trace_checksum;
    return j;
}

/// Events CSV: start_s,end_s,class,b_pe_hz,decision_time_s; missing values are empty.
inline void write_events_csv(const std::string &path, std::span<const DetectedEvent> events)
{
    std::ofstream out(path);
    require(out.good(), "write_events_csv: cannot open " + path);
    out << "start_s,end_s,class,b_pe_hz,decision_time_s\n";
    for (const auto &e : events)
    {
        std::string line;
        detail::append_number(line, e.start_s);
        line += ',';
        detail::append_number(line, e.end_s);
        line += ',';
        line += to_string(e.event_class);
        line += ',';
        if (std::isfinite(e.b_pe_hz))
            detail::append_number(line, e.b_pe_hz);
        line += ',';
        if (std::isfinite(e.decision_time_s))
            detail::append_number(line, e.decision_time_s);
        out << line << '\n';
    }
    require(out.good(), "write_events_csv: write failed for " + path);
}

inline std::vector<DetectedEvent> read_events_csv(const std::string &path)
{
    std::ifstream in(path);
    require(in.good(), "read_events_csv: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "read_events_csv: empty file");
    std::vector<DetectedEvent> events;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        auto cells = detail::split_csv_line(line);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        require(cells.size() == 5, "read_events_csv: expected 5 columns");
        DetectedEvent e;
        e.start_s = detail::parse_number<double>(cells[0], "events");
        e.end_s = detail::parse_number<double>(cells[1], "events");
        e.event_class = event_class_from_string(cells[2]);
        if (!cells[3].empty())
            e.b_pe_hz = detail::parse_number<double>(cells[3], "events");
        if (!cells[4].empty())
            e.decision_time_s = detail::parse_number<double>(cells[4], "events");
        events.push_back(e);
    }
    return events;
}

} // namespace seizewatch
