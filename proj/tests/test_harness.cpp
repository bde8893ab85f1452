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

#include <catch_amalgamated.hpp>

#include <seizewatch/config.hpp>
#include <seizewatch/metrics.hpp>
#include <seizewatch/pipeline.hpp>
#include <seizewatch/trace_io.hpp>

#include "test_support.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace seizewatch;
using Catch::Approx;

namespace
{

const std::string kCli = SEIZEWATCH_CLI_PATH;
const std::string kConfigs = SEIZEWATCH_CONFIG_DIR;

SimOptions small_receiver()
{
    SimOptions o;
    o.n_rx = 2;
    o.n_sc = 4;
    return o;
}

template <typename Scalar>
BasicCsiTrace<Scalar> two_person_trace()
{
    const auto g = SceneGeometry::from_angle(0.0572, 0.9);
    Scenario p1;
    p1.duration_s = 6.0;
    p1.breathing = breathing_profile(0.25, 6.0);
    p1.events.push_back({EventKind::PostureShift, 1.0, 2.0, MotionProfile::sinusoid(0.2, 1.0, 2.0)});
    Scenario p2 = p1;
    p2.events = {{EventKind::Scratch, 3.0, 1.5, MotionProfile::sinusoid(0.03, 5.0, 1.5)}};
    NoiseSpec n = NoiseSpec::moderate();
    n.outlier_rate = 2.0;
    auto tr = generate_trace<Scalar>(p1, g, n, 17, small_receiver());
    return superpose_person(tr, p2, g, 17, small_receiver());
}

std::string slurp(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const std::string &path, const std::string &text)
{
    std::ofstream(path, std::ios::binary) << text;
}

struct CliResult
{
    int code = -1;
    std::string out;
};

CliResult cli(const std::string &args, const testsupport::TempDir &dir)
{
    const auto log = dir.file("cli.log");
    const int status = std::system((kCli + " " + args + " > " + log + " 2>&1").c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::size_t data_rows(const std::string &csv_path)
{
    std::ifstream in(csv_path);
    std::string line;
    std::size_t n = 0;
    std::getline(in, line);
    while (std::getline(in, line))
        n += line.empty() ? 0 : 1;
    return n;
}

DetectedEvent event(double start, double end, EventClass c, double decision = std::numeric_limits<double>::quiet_NaN())
{
    DetectedEvent e;
    e.start_s = start;
    e.end_s = end;
    e.event_class = c;
    e.decision_time_s = decision;
    if (c == EventClass::Seizure)
        e.b_pe_hz = 12.0;
    return e;
}

LabelInterval label(double start, double end, LabelClass c, int person = 1)
{
    return {start, end, c, person, c == LabelClass::Seizure ? EventKind::Seizure : EventKind::PostureShift};
}

} // namespace

TEST_CASE("trace files round-trip bit for bit", "[harness]")
{
    testsupport::TempDir dir("io");
    SECTION("double precision, two persons, angle geometry")
    {
        const auto tr = two_person_trace<double>();
        REQUIRE(tr.paths.size() == 2);
        REQUIRE(tr.labels.size() == 2);
        write_trace(dir.file("a.trace"), tr);
        const auto back = read_trace<double>(dir.file("a.trace"));
        CHECK(back == tr);
        CHECK(back.geometry.phi_rad().has_value());
        CHECK(trace_checksum(back) == trace_checksum(tr));
        CHECK(std::holds_alternative<CsiTrace>(read_any_trace(dir.file("a.trace"))));
        CHECK_THROWS_AS(read_trace<float>(dir.file("a.trace")), InputError);
    }
    SECTION("single precision")
    {
        const auto tr = two_person_trace<float>();
        write_trace(dir.file("b.trace"), tr);
        const auto back = read_trace<float>(dir.file("b.trace"));
        CHECK(back == tr);
        CHECK(std::holds_alternative<CompactCsiTrace>(read_any_trace(dir.file("b.trace"))));
        // Writing what was read reproduces the file.
        write_trace(dir.file("c.trace"), back);
        CHECK(slurp(dir.file("b.trace")) == slurp(dir.file("c.trace")));
    }
}

TEST_CASE("malformed trace files are rejected", "[harness]")
{
    testsupport::TempDir dir("bad");
    const auto tr = two_person_trace<double>();
    write_trace(dir.file("ok.trace"), tr);
    const auto text = slurp(dir.file("ok.trace"));
    const auto header_end = text.find('\n');
    const auto header = nlohmann::json::parse(text.substr(0, header_end));
    const auto body = text.substr(header_end + 1);

    auto expect_rejected = [&](const std::string &content)
    {
        spit(dir.file("x.trace"), content);
        CHECK_THROWS_AS(read_trace<double>(dir.file("x.trace")), InputError);
    };
    auto with_header = [&](const nlohmann::json &h) { return h.dump() + "\n" + body; };

    auto h = header;
    h["version"] = 2;
    expect_rejected(with_header(h));
    h = header;
    h["format"] = "other";
    expect_rejected(with_header(h));
    h = header;
    h["n_records"] = header["n_records"].get<std::size_t>() + 1;
    expect_rejected(with_header(h));
    h = header;
    h.erase("paths");
    expect_rejected(with_header(h));
    h = header;
    h["geometry"]["psi"] = 0.3;
    expect_rejected(with_header(h));
    expect_rejected("not json\n" + body);
    expect_rejected("");
    // Truncated last record.
    expect_rejected(text.substr(0, text.size() - 40));
    // Swapped records break timestamp order.
    const auto first_nl = body.find('\n');
    const auto second_nl = body.find('\n', first_nl + 1);
    expect_rejected(header.dump() + "\n" + body.substr(first_nl + 1, second_nl - first_nl) + body.substr(0, first_nl + 1) +
                    body.substr(second_nl + 1));
    CHECK_THROWS_AS(read_trace<double>(dir.file("missing.trace")), InputError);
}

TEST_CASE("label sidecar", "[harness]")
{
    testsupport::TempDir dir("labels");
    const std::vector<LabelInterval> labels = {label(1.0, 2.5, LabelClass::Normal), label(10.0, 40.0, LabelClass::Seizure, 2)};
    write_labels(dir.file("l.csv"), labels);
    CHECK(read_labels(dir.file("l.csv")) == labels);
    spit(dir.file("old.csv"), "start_s,end_s,class,person_id\n1,2,normal,1\n");
    CHECK(read_labels(dir.file("old.csv")).size() == 1);
    spit(dir.file("rev.csv"), "start_s,end_s,class,person_id\n3,2,normal,1\n");
    CHECK_THROWS_AS(read_labels(dir.file("rev.csv")), InputError);
    spit(dir.file("cls.csv"), "start_s,end_s,class,person_id\n1,2,maybe,1\n");
    CHECK_THROWS_AS(read_labels(dir.file("cls.csv")), InputError);
}

TEST_CASE("scoring rules", "[harness]")
{
    const std::vector<LabelInterval> labels = {label(100.0, 130.0, LabelClass::Seizure), label(200.0, 205.0, LabelClass::Normal),
                                               label(300.0, 310.0, LabelClass::Normal), label(400.0, 440.0, LabelClass::Seizure)};
    const std::vector<DetectedEvent> events = {
        event(100.5, 112.0, EventClass::Seizure, 106.0), // first seizure
        event(113.0, 129.0, EventClass::Seizure, 118.0), // same seizure again, counted once
        event(200.2, 204.0, EventClass::Normal),
        event(300.5, 309.0, EventClass::Seizure, 306.0), // false alarm
        event(500.0, 501.0, EventClass::Seizure, 506.0), // no label at all
    };
    const auto r = score_events(events, labels);
    REQUIRE(r.sdr_pct.has_value());
    CHECK(*r.sdr_pct == Approx(50.0));
    CHECK(r.n_seizures == 2);
    CHECK(r.n_seizures_detected == 1);
    CHECK(r.rt_list_s == std::vector<double>{6.0});
    CHECK(*r.mrt_s == Approx(6.0));
    CHECK(r.n_normal_detected == 2);
    CHECK(r.n_false_alarms == 1);
    CHECK(r.p_fa == Approx(0.5));
    CHECK(r.n_spurious == 1);
    CHECK(r.n_spurious_seizure == 1);
    REQUIRE(r.events.size() == events.size());
    CHECK(r.events[0].truth->label == LabelClass::Seizure);
    CHECK_FALSE(r.events[4].truth.has_value());

    SECTION("empty cases")
    {
        const auto none = score_events({}, {});
        CHECK_FALSE(none.sdr_pct.has_value());
        CHECK(none.p_fa == 0.0);
        CHECK_FALSE(none.mrt_s.has_value());
        const auto j = to_json(none);
        CHECK(j["sdr_pct"].is_null());
        CHECK(j["events"].empty());
    }
    SECTION("pooling nights")
    {
        const std::vector<RunReport> nights = {r, score_events(std::vector<DetectedEvent>{events[0]}, std::vector<LabelInterval>{labels[0]})};
        const auto pooled = pool_reports(nights);
        CHECK(pooled.n_seizures == 3);
        CHECK(*pooled.sdr_pct == Approx(200.0 / 3.0));
        CHECK(*pooled.mrt_s == Approx(6.0));
        CHECK(pooled.p_fa == Approx(0.5));
    }
}

TEST_CASE("report is recomputable from the events file", "[harness]")
{
    testsupport::TempDir dir("events");
    Scenario sc;
    sc.duration_s = 80.0;
    sc.breathing = breathing_profile(0.25, 80.0);
    sc.events.push_back({EventKind::PostureShift, 20.0, 6.0, MotionProfile::sinusoid(0.2, 0.6, 6.0)});
    sc.events.push_back({EventKind::Seizure, 40.0, 25.0, MotionProfile::sinusoid(0.75, 3.0, 25.0, 1.0)});
    const auto tr = generate_trace(sc, SceneGeometry(), NoiseSpec::moderate(), 3);
    const auto r = run_pipeline(tr, {});
    REQUIRE(r.events.size() == 2);
    write_events_csv(dir.file("e.csv"), r.events);
    const auto back = read_events_csv(dir.file("e.csv"));
    REQUIRE(back.size() == r.events.size());
    for (std::size_t i = 0; i < back.size(); ++i)
    {
        CHECK(back[i].start_s == r.events[i].start_s);
        CHECK(back[i].end_s == r.events[i].end_s);
        CHECK(back[i].event_class == r.events[i].event_class);
        CHECK((back[i].b_pe_hz == r.events[i].b_pe_hz || (std::isnan(back[i].b_pe_hz) && std::isnan(r.events[i].b_pe_hz))));
    }
    CHECK(to_json(score_events(back, tr.labels)) == to_json(score_events(r.events, tr.labels)));
    const auto report = score_events(r.events, tr.labels);
    CHECK(*report.sdr_pct == 100.0);
    CHECK(report.p_fa == 0.0);

    spit(dir.file("bad.csv"), "start_s,end_s,class,b_pe_hz,decision_time_s\n1,2,normal\n");
    CHECK_THROWS_AS(read_events_csv(dir.file("bad.csv")), InputError);
}

TEST_CASE("configuration files", "[harness]")
{
    SECTION("shipped scenario configs parse")
    {
        for (const char *name : {"breathing_60s.json", "single_seizure.json", "night_1h.json", "two_person_10min.json", "overnight_8h.json"})
        {
            INFO(name);
            CHECK_NOTHROW(load_simulation_config(kConfigs + "/" + name));
        }
    }
    SECTION("the 8 h default night has 24 normal events and 2 seizures")
    {
        const auto cfg = load_simulation_config(kConfigs + "/overnight_8h.json");
        CHECK(cfg.scenario.duration_s == 28800.0);
        const auto seizures = std::count_if(cfg.scenario.events.begin(), cfg.scenario.events.end(),
                                            [](const auto &e) { return e.kind == EventKind::Seizure; });
        CHECK(seizures == 2);
        CHECK(cfg.scenario.events.size() - static_cast<std::size_t>(seizures) == 24);
    }
    SECTION("default pipeline config matches the built-in defaults")
    {
        const auto cfg = load_pipeline_config(kConfigs + "/detector_default.json");
        CHECK(to_json(cfg) == to_json(PipelineConfig{}));
    }
    SECTION("rejections")
    {
        CHECK_THROWS_AS(simulation_from_json(nlohmann::json{{"durations", 5}}), InputError);
        CHECK_THROWS_AS(simulation_from_json(nlohmann::json{{"noise", "loud"}}), InputError);
        CHECK_THROWS_AS(simulation_from_json(nlohmann::json::parse(R"({"scenario": {"events": [{"kind": "dance", "start_s": 1, "duration_s": 2}]}})")),
                        InputError);
        CHECK_THROWS_AS(simulation_from_json(nlohmann::json::parse(R"({"duration_s": 30, "scenario": {"events": [{"kind": "seizure", "start_s": 1, "duration_s": 10}]}})")),
                        InputError);
        CHECK_THROWS_AS(pipeline_from_json(nlohmann::json{{"detector", {{"tmin", 3}}}}), InputError);
        CHECK_THROWS_AS(pipeline_from_json(nlohmann::json{{"k", "many"}}), InputError);
        CHECK_THROWS_AS(pipeline_from_json(nlohmann::json{{"hampel_window", 100}}), InputError);
    }
    SECTION("geometry by angle and explicit events")
    {
        const auto cfg = simulation_from_json(nlohmann::json::parse(R"({
            "duration_s": 40, "seed": 2, "geometry": {"wavelength_m": 0.0572, "phi_rad": 0.5},
            "noise": {"awgn_sigma": 0.02},
            "scenario": {"events": [{"kind": "seizure", "start_s": 10, "duration_s": 22, "v_max_mps": 0.6, "f_o_hz": 2.5}]},
            "precision": "float64"})"));
        CHECK(cfg.geometry.psi() == Approx(2.0 * std::cos(0.5)));
        CHECK(cfg.noise.awgn_sigma == 0.02);
        CHECK_FALSE(cfg.compact);
        REQUIRE(cfg.scenario.events.size() == 1);
        CHECK(std::get<Sinusoid>(cfg.scenario.events[0].motion.kind).f_o_hz == 2.5);
    }
    SECTION("speed CSV paths resolve against the config directory")
    {
        testsupport::TempDir dir("cfg");
        {
            std::ofstream out(dir.file("motion.csv"));
            out << "t_s,speed\n";
            for (int k = 0; k < 400; ++k)
                out << k / 100.0 << ',' << 0.2 * std::sin(k / 10.0) << '\n';
        }
        spit(dir.file("s.json"), R"({"duration_s": 30, "scenario": {"events": [{"kind": "posture_shift", "start_s": 15, "speed_csv": "motion.csv"}]}})");
        const auto cfg = load_simulation_config(dir.file("s.json"));
        REQUIRE(cfg.scenario.events.size() == 1);
        CHECK(cfg.scenario.events[0].duration_s == Approx(4.0));
    }
}

TEST_CASE("command line interface", "[harness][cli]")
{
    testsupport::TempDir dir("cli");
    const auto breathing = dir.file("breathing.trace");
    const auto seizure = dir.file("seizure.trace");

    SECTION("simulate is deterministic and detect finds nothing in breathing")
    {
        auto r = cli("simulate --scenario " + kConfigs + "/breathing_60s.json --out " + breathing, dir);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("0 seizure, 0 normal") != std::string::npos);
        CHECK(data_rows(labels_path_for(breathing)) == 0);
        const auto first = slurp(breathing);
        REQUIRE(cli("simulate --scenario " + kConfigs + "/breathing_60s.json --out " + breathing, dir).code == 0);
        CHECK(slurp(breathing) == first);
        REQUIRE(cli("simulate --scenario " + kConfigs + "/breathing_60s.json --seed 99 --out " + dir.file("other.trace"), dir).code == 0);
        CHECK(slurp(dir.file("other.trace")) != first);

        r = cli("detect --trace " + breathing + " --events " + dir.file("b.csv") + " --report " + dir.file("b.json"), dir);
        REQUIRE(r.code == 0);
        CHECK(data_rows(dir.file("b.csv")) == 0);
        const auto report = nlohmann::json::parse(slurp(dir.file("b.json")));
        CHECK(report["sdr_pct"].is_null());
        CHECK(report["events"].empty());
        CHECK(report["config"]["selected_streams"].size() == 15);
    }
    SECTION("single seizure end to end, calibration checks and sweep")
    {
        REQUIRE(cli("simulate --scenario " + kConfigs + "/single_seizure.json --out " + seizure, dir).code == 0);
        auto r = cli("detect --trace " + seizure + " --config " + kConfigs + "/detector_default.json", dir);
        REQUIRE(r.code == 0);
        const auto report = nlohmann::json::parse(slurp(seizure + ".report.json"));
        CHECK(report["sdr_pct"].get<double>() == 100.0);
        CHECK(report["p_fa"].get<double>() == 0.0);
        CHECK(report["trace_checksum"].get<std::string>().size() == 16);

        // The scored report is a function of the events file and labels alone.
        const auto events = read_events_csv(seizure + ".events.csv");
        CHECK(to_json(score_events(events, read_labels(labels_path_for(seizure))))["sdr_pct"] == report["sdr_pct"]);

        r = cli("detect --trace " + seizure + " --cal-start 35", dir);
        CHECK(r.code == 2);
        CHECK(r.out.find("calibration") != std::string::npos);
        CHECK(cli("detect --trace " + seizure + " --cal-start 80", dir).code == 2);

        r = cli("sweep --trace-dir " + dir.path().string() + " --param f_th --from 6 --to 12 --step 0.5 --out " + dir.file("sw.csv"), dir);
        REQUIRE(r.code == 0);
        CHECK(data_rows(dir.file("sw.csv")) == 13);
        r = cli("sweep --trace-dir " + dir.path().string() + " --param psi --from 0.7 --to 1.4 --step 0.35 --out " + dir.file("psi.csv"), dir);
        REQUIRE(r.code == 0);
        std::ifstream in(dir.file("psi.csv"));
        std::string line;
        std::getline(in, line);
        std::vector<double> f_th;
        while (std::getline(in, line))
            f_th.push_back(std::stod(line.substr(line.find(',') + 1)));
        REQUIRE(f_th.size() == 3);
        for (std::size_t i = 0; i < f_th.size(); ++i)
            CHECK(f_th[i] == Approx(derive_f_th(SceneGeometry(kChannel48WavelengthM, 0.7 + 0.35 * static_cast<double>(i)))).margin(1e-3));
        CHECK(f_th[0] < f_th[1]);
        CHECK(f_th[1] < f_th[2]);
    }
    SECTION("oracle")
    {
        const auto r = cli("oracle --beta-prime 2 --f-o 1.5 --delta-mu 0.3", dir);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("bandwidth   4.5000 Hz") != std::string::npos);
        CHECK(r.out.find("order,frequency_hz") != std::string::npos);
    }
    SECTION("input errors exit with 2")
    {
        CHECK(cli("", dir).code == 2);
        CHECK(cli("detect", dir).code == 2);
        CHECK(cli("detect --trace " + dir.file("nope.trace"), dir).code == 2);
        CHECK(cli("oracle --beta-prime -1 --f-o 1 --delta-mu 0", dir).code == 2);
        CHECK(cli("sweep --trace-dir " + dir.path().string() + " --param q --from 1 --to 2 --step 1 --out x.csv", dir).code == 2);
        spit(dir.file("bad.json"), R"({"duration_s": 10, "colour": "blue"})");
        const auto r = cli("simulate --scenario " + dir.file("bad.json") + " --out " + dir.file("bad.trace"), dir);
        CHECK(r.code == 2);
        CHECK(r.out.find("colour") != std::string::npos);
        spit(dir.file("empty.trace"), "");
        CHECK(cli("detect --trace " + dir.file("empty.trace"), dir).code == 2);
    }
}
