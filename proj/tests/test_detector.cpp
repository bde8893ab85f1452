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

#include <seizewatch/csi_sim.hpp>
#include <seizewatch/pipeline.hpp>

#include "test_support.hpp"

using namespace seizewatch;
using Catch::Approx;

namespace
{

Scenario breathing_only(double duration_s)
{
    Scenario sc;
    sc.duration_s = duration_s;
    sc.breathing = breathing_profile(0.25, duration_s);
    return sc;
}

// Back-to-back raised-cosine lobes of alternating sign.
MotionProfile lobes(double duration_s, double lobe_s, double peak_mps)
{
    const double rate = 200.0;
    std::vector<double> speed(static_cast<std::size_t>(std::llround(duration_s * rate)), 0.0);
    const auto len = static_cast<std::size_t>(std::llround(lobe_s * rate));
    for (std::size_t i = 0; i * len < speed.size(); ++i)
        detail::add_lobe(speed, i * len, std::min(len, speed.size() - i * len), i % 2 == 0 ? peak_mps : -peak_mps);
    return MotionProfile::sampled(std::move(speed), rate);
}

PipelineResult run(const Scenario &sc, std::uint64_t seed, const PipelineConfig &cfg = {})
{
    return run_pipeline(generate_trace(sc, SceneGeometry(), NoiseSpec::moderate(), seed), cfg);
}

CalibrationState dummy_calibration(double sigma)
{
    CalibrationState cal;
    cal.selected_ids = {{StreamKind::Magnitude, 0, 0}};
    cal.sigma_c_sq = sigma;
    return cal;
}

} // namespace

TEST_CASE("breathing alone produces no events", "[detector]")
{
    for (std::uint64_t seed : {1, 2, 3})
    {
        const auto r = run(breathing_only(120.0), seed);
        CHECK(r.intervals.empty());
        CHECK(r.pre.calibration.sigma_c_sq > 0.0);
        CHECK(r.pre.calibration.selected_ids.size() == 15);
    }
}

TEST_CASE("posture shift boundaries", "[detector]")
{
    auto sc = breathing_only(80.0);
    sc.events.push_back({EventKind::PostureShift, 40.0, 8.0, lobes(8.0, 1.6, 0.25)});
    for (std::uint64_t seed : {4, 5, 6})
    {
        const auto r = run(sc, seed);
        REQUIRE(r.intervals.size() == 1);
        CHECK(r.intervals[0].start_s == Approx(40.0).margin(1.0));
        CHECK(r.intervals[0].end_s == Approx(48.0).margin(1.0));
        REQUIRE(r.events.size() == 1);
        CHECK(r.events[0].event_class == EventClass::Normal);
    }
}

TEST_CASE("movements half a second apart merge into one event", "[detector]")
{
    auto sc = breathing_only(60.0);
    sc.events.push_back({EventKind::PostureShift, 30.0, 3.0, lobes(3.0, 1.5, 0.25)});
    sc.events.push_back({EventKind::PostureShift, 33.5, 3.0, lobes(3.0, 1.5, 0.25)});
    const auto r = run(sc, 7);
    REQUIRE(r.intervals.size() == 1);
    CHECK(r.intervals[0].start_s == Approx(30.0).margin(1.0));
    CHECK(r.intervals[0].end_s == Approx(36.5).margin(1.0));
}

TEST_CASE("window bandwidth of white noise and of a tone", "[detector]")
{
    const DetectorConfig cfg;
    SECTION("white noise sits near 90% of Nyquist")
    {
        double sum = 0.0;
        const int runs = 50;
        Periodogram pg;
        for (int i = 0; i < runs; ++i)
        {
            const auto x = testsupport::white_noise(800, 1.0, 900 + static_cast<std::uint64_t>(i));
            const auto b = window_bandwidth(x, 200.0, pg);
            REQUIRE(b.has_value());
            sum += *b;
        }
        // Single windows scatter by a few Hz; the Monte Carlo mean does not.
        CHECK(sum / runs == Approx(90.0).margin(1.0));
        const auto x = testsupport::white_noise(4000, 1.0, 77);
        CHECK(*estimate_event_bandwidth(x, 200.0, cfg) == Approx(90.0).margin(3.0));
    }
    SECTION("a 5 Hz tone is within one bin")
    {
        const auto x = testsupport::sine(3000, 200.0, 5.0);
        CHECK(*estimate_event_bandwidth(x, 200.0, cfg) == Approx(5.0).margin(0.25));
        // Shorter than one window: a single truncated window.
        const auto y = testsupport::sine(500, 200.0, 5.0);
        CHECK(*estimate_event_bandwidth(y, 200.0, cfg) == Approx(5.0).margin(0.4));
    }
    SECTION("zero-power windows are skipped with a warning")
    {
        testsupport::WarningCapture capture;
        std::vector<double> x(2000, 0.0);
        CHECK_FALSE(estimate_event_bandwidth(x, 200.0, cfg).has_value());
        CHECK_FALSE(capture.messages.empty());
        const auto tone = testsupport::sine(1000, 200.0, 5.0);
        std::copy(tone.begin(), tone.end(), x.begin() + 1000);
        capture.messages.clear();
        CHECK(estimate_event_bandwidth(x, 200.0, cfg).has_value());
        CHECK_FALSE(capture.messages.empty());
    }
}

TEST_CASE("running median of window bandwidths", "[detector]")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    SECTION("matches a sort-based median after every update")
    {
        BandwidthTracker t;
        std::vector<double> all;
        for (int i = 0; i < 200; ++i)
        {
            const double v = std::round(u(rng) * 4.0) / 4.0;
            t.add(v);
            all.push_back(v);
            auto s = all;
            std::sort(s.begin(), s.end());
            const std::size_t n = s.size();
            const double med = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
            REQUIRE(t.median() == med);
        }
        CHECK_THROWS_AS(BandwidthTracker().median(), InputError);
    }
    SECTION("fewer than half corrupted windows keep the median inside the clean span")
    {
        std::uniform_real_distribution<double> wild(-1e6, 1e6);
        for (int trial = 0; trial < 500; ++trial)
        {
            const int n = 3 + trial % 20;
            const int bad = (n - 1) / 2;
            BandwidthTracker t;
            double lo = 1e9, hi = -1e9;
            for (int i = 0; i < n; ++i)
            {
                if (i < bad)
                {
                    t.add(wild(rng));
                    continue;
                }
                const double v = u(rng);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                t.add(v);
            }
            REQUIRE(t.median() >= lo);
            REQUIRE(t.median() <= hi);
        }
    }
}

TEST_CASE("short events are normal without bandwidth analysis", "[detector]")
{
    const DetectorConfig cfg;
    const auto p = testsupport::white_noise(4000, 1.0, 5);
    const EventInterval jerk{10.0, 10.3, 11.3, false};
    const auto e = classify_event(jerk, p, 200.0, 0.0, cfg, 8.8);
    CHECK(e.event_class == EventClass::Normal);
    CHECK(std::isnan(e.b_pe_hz));
    CHECK(e.n_windows == 0);

    const EventInterval open{18.0, 19.5, 20.0, true};
    CHECK(classify_event(open, p, 200.0, 0.0, cfg, 8.8).event_class == EventClass::Ongoing);

    // A simulated 0.3 s limb jerk end to end.
    auto sc = breathing_only(60.0);
    sc.events.push_back({EventKind::LimbJerk, 30.0, 0.3, lobes(0.3, 0.3, 0.3)});
    const auto r = run(sc, 8);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].event_class == EventClass::Normal);
    CHECK(std::isnan(r.events[0].b_pe_hz));
    CHECK(r.events[0].end_s - r.events[0].start_s < 5.0);
}

TEST_CASE("20 s seizure is declared after T_min", "[detector]")
{
    auto sc = breathing_only(80.0);
    sc.events.push_back({EventKind::Seizure, 40.0, 20.0, MotionProfile::sinusoid(0.75, 3.0, 20.0, 0.4)});
    for (std::uint64_t seed : {9, 10, 11})
    {
        const auto r = run(sc, seed);
        REQUIRE(r.events.size() == 1);
        const auto &e = r.events[0];
        CHECK(e.event_class == EventClass::Seizure);
        CHECK(e.b_pe_hz > r.f_th_hz);
        CHECK(e.decision_time_s - e.start_s >= 5.0 - 1e-9);
        CHECK(e.decision_time_s - e.start_s <= 7.0);
        CHECK(e.decision_time_s - 40.0 >= 5.0);
        CHECK(e.decision_time_s - 40.0 <= 8.0);
    }
}

TEST_CASE("10 s posture shift is normal", "[detector]")
{
    auto sc = breathing_only(80.0);
    sc.events.push_back({EventKind::PostureShift, 40.0, 10.0, lobes(10.0, 1.5, 0.3)});
    const auto r = run(sc, 12);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].event_class == EventClass::Normal);
    CHECK(r.events[0].b_pe_hz <= 7.8);
    CHECK(r.events[0].end_s - r.events[0].start_s >= 5.0);
}

namespace
{

// Ten minutes with a mix of normal events and two seizures of differing strength.
PipelineResult mixed_trace(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto sc = breathing_only(600.0);
    sc.events.push_back({EventKind::PostureShift, 30.0, 8.0, lobes(8.0, 1.6, 0.3)});
    sc.events.push_back(make_normal_event(EventKind::Scratch, 70.0, 3.0, rng));
    sc.events.push_back({EventKind::Seizure, 110.0, 30.0, MotionProfile::sinusoid(0.75, 3.0, 30.0)});
    sc.events.push_back(make_normal_event(EventKind::Cough, 180.0, 2.0, rng));
    sc.events.push_back({EventKind::PostureShift, 230.0, 12.0, lobes(12.0, 1.2, 0.33)});
    sc.events.push_back({EventKind::Seizure, 300.0, 25.0, MotionProfile::sinusoid(0.55, 2.0, 25.0)});
    sc.events.push_back({EventKind::PostureShift, 380.0, 6.0, lobes(6.0, 1.0, 0.25)});
    sc.events.push_back({EventKind::LimbJerk, 450.0, 0.35, lobes(0.35, 0.35, 0.3)});
    sc.events.push_back({EventKind::Seizure, 500.0, 40.0, MotionProfile::sinusoid(0.8, 4.5, 40.0)});
    return run(sc, seed);
}

std::vector<bool> seizure_flags(const std::vector<DetectedEvent> &events)
{
    std::vector<bool> f;
    for (const auto &e : events)
        f.push_back(e.event_class == EventClass::Seizure);
    return f;
}

} // namespace

TEST_CASE("verdicts are monotone in f_th and T_min", "[detector]")
{
    const auto r = mixed_trace(21);
    REQUIRE(r.intervals.size() >= 6);

    SECTION("raising f_th never turns a normal verdict into a seizure")
    {
        std::vector<bool> prev;
        for (double f = 4.0; f <= 16.0; f += 0.25)
        {
            const auto flags = seizure_flags(reclassify(r, DetectorConfig{}, f));
            if (!prev.empty())
                for (std::size_t i = 0; i < flags.size(); ++i)
                    CHECK((!flags[i] || prev[i]));
            prev = flags;
        }
    }
    SECTION("raising T_min shrinks the analysed set and delays verdicts")
    {
        std::vector<bool> prev_analysed;
        std::vector<double> prev_rt;
        for (double t = 1.0; t <= 12.0; t += 0.5)
        {
            DetectorConfig cfg;
            cfg.t_min_s = t;
            const auto ev = reclassify(r, cfg, r.f_th_hz);
            std::vector<bool> analysed;
            std::vector<double> rt;
            for (const auto &e : ev)
            {
                analysed.push_back(e.n_windows > 0);
                rt.push_back(e.event_class == EventClass::Seizure ? e.decision_time_s - e.start_s : -1.0);
                if (e.event_class == EventClass::Seizure)
                    CHECK(e.decision_time_s - e.start_s >= t - 1e-9);
            }
            if (!prev_analysed.empty())
                for (std::size_t i = 0; i < ev.size(); ++i)
                {
                    CHECK((!analysed[i] || prev_analysed[i]));
                    if (rt[i] >= 0.0 && prev_rt[i] >= 0.0)
                        CHECK(rt[i] >= prev_rt[i] - 1e-9);
                }
            prev_analysed = analysed;
            prev_rt = rt;
        }
    }
    SECTION("the defaults find all three seizures and no false seizure")
    {
        const double onsets[] = {110.0, 300.0, 500.0};
        int found = 0;
        for (const auto &e : r.events)
        {
            bool on_seizure = false;
            for (double t : onsets)
                on_seizure = on_seizure || (e.start_s < t + 40.0 && e.end_s > t);
            if (e.event_class == EventClass::Seizure)
                CHECK(on_seizure);
            found += on_seizure && e.event_class == EventClass::Seizure ? 1 : 0;
        }
        CHECK(found == 3);
    }
}

TEST_CASE("scaling the CSI amplitudes leaves detections unchanged", "[detector]")
{
    auto sc = breathing_only(90.0);
    sc.events.push_back({EventKind::PostureShift, 30.0, 6.0, lobes(6.0, 1.5, 0.3)});
    sc.events.push_back({EventKind::Seizure, 50.0, 25.0, MotionProfile::sinusoid(0.7, 2.5, 25.0)});
    const auto tr = generate_trace<double>(sc, SceneGeometry(), NoiseSpec::moderate(), 13);
    auto scaled = tr;
    for (auto &ch : scaled.channels)
        for (auto &v : ch)
            v *= 3.7;
    const auto a = run_pipeline(tr, {});
    const auto b = run_pipeline(scaled, {});
    CHECK(a.pre.calibration.selected_ids == b.pre.calibration.selected_ids);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i)
    {
        CHECK(a.events[i].start_s == Approx(b.events[i].start_s).margin(1e-9));
        CHECK(a.events[i].end_s == Approx(b.events[i].end_s).margin(1e-9));
        CHECK(a.events[i].event_class == b.events[i].event_class);
        CHECK(a.events[i].b_pe_hz == Approx(b.events[i].b_pe_hz).margin(1e-9));
    }
}

TEST_CASE("detection is deterministic", "[detector]")
{
    auto sc = breathing_only(60.0);
    sc.events.push_back({EventKind::Seizure, 25.0, 20.0, MotionProfile::sinusoid(0.7, 2.0, 20.0)});
    const auto tr = generate_trace(sc, SceneGeometry(), NoiseSpec::moderate(), 14);
    const auto a = run_pipeline(tr, {});
    const auto b = run_pipeline(tr, {});
    CHECK(a.pre.p == b.pre.p);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i)
    {
        CHECK(a.events[i].start_s == b.events[i].start_s);
        CHECK(a.events[i].decision_time_s == b.events[i].decision_time_s);
    }
}

TEST_CASE("detector input validation", "[detector]")
{
    const auto p = testsupport::white_noise(2000, 1.0, 1);
    const DetectorConfig cfg;
    CalibrationState none;
    CHECK_THROWS_AS(detect_events(p, 200.0, 0.0, none, cfg), InputError);
    CHECK_NOTHROW(detect_events(p, 200.0, 0.0, dummy_calibration(1e9), cfg));
    CHECK(detect_events(p, 200.0, 0.0, dummy_calibration(1e9), cfg).empty());

    // Everything above a zero threshold: one event open at the end.
    const auto all = detect_events(p, 200.0, 0.0, dummy_calibration(0.0), cfg);
    REQUIRE(all.size() == 1);
    CHECK(all[0].open_at_end);
    CHECK(all[0].start_s == Approx(2.0));

    CHECK_THROWS_AS(cfg.validate(1.0), InputError);
    CHECK(cfg.bw_br_adj_hz() == Approx(1.1));
    DetectorConfig bad;
    bad.t_min_s = 0.0;
    CHECK_THROWS_AS(bad.validate(8.8), InputError);
    bad = DetectorConfig{};
    bad.ec_overlap = 1.0;
    CHECK_THROWS_AS(bad.validate(8.8), InputError);
    CHECK(DetectorConfig{}.resolve_f_th(SceneGeometry(0.057225, 1.0)) == Approx(8.83).margin(0.02));

    CHECK_THROWS_AS(calibration_noise_power(p, 0, 100, 200.0, cfg), InputError);
    CHECK(event_class_from_string("seizure") == EventClass::Seizure);
    CHECK_THROWS_AS(event_class_from_string("maybe"), InputError);
}

TEST_CASE("calibration noise power is the largest window energy", "[detector]")
{
    const DetectorConfig cfg;
    auto p = testsupport::white_noise(2600, 0.1, 2);
    const auto burst = testsupport::sine(400, 200.0, 20.0, 1.0);
    for (std::size_t k = 0; k < burst.size(); ++k)
        p[1000 + k] += burst[k];
    const double sigma = calibration_noise_power(p, 0, 2600, 200.0, cfg);
    // Independent check with direct DFT bins at every 10-sample hop.
    double best = 0.0;
    for (std::size_t end = 400; end <= 2600; end += 10)
    {
        const std::span<const double> w(p.data() + end - 400, 400);
        double e = 0.0;
        for (std::size_t k = 1; k <= 200; ++k)
            if (static_cast<double>(k) * 0.5 > 1.1)
                e += std::norm(testsupport::naive_dft_bin(w, k));
        best = std::max(best, e);
    }
    CHECK(sigma == Approx(best).epsilon(1e-9));
}
