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

// Two-path baseband model of a WiFi link next to a moving body.
//
// The receiver sees a static direct path plus one path reflected off the moving
// body part. With displacement d(t) along the normal of the Tx/Rx ellipse,
//
//     c(t) = a_d exp(j mu_d) + a_r exp(j (mu_r + beta d(t))),   beta = 2 pi psi / lambda
//
// so |c|^2 and the inter-antenna phase difference are both of the form
// A cos(beta d(t) + dmu), i.e. an FM signal whose modulating input is the body speed.

#pragma once

#include "common.hpp"

#include <algorithm>
#include <complex>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace seizewatch
{

/// Wavelength quoted for WiFi channel 48 in the original deployment (5.72 cm).
inline constexpr double kChannel48WavelengthM = 0.0572;
inline constexpr double kChannel48CarrierHz = 5.24e9;

/// Tx/Rx/bed placement reduced to the carrier wavelength and the ellipse scale psi = 2 cos(phi).
class SceneGeometry
{
public:
    SceneGeometry() : SceneGeometry(kChannel48WavelengthM, 1.0) {}

    SceneGeometry(double wavelength_m, double psi) : wavelength_m_(wavelength_m), psi_(psi)
    {
        require(std::isfinite(wavelength_m) && wavelength_m > 0.0, "SceneGeometry: wavelength must be positive");
        require(std::isfinite(psi) && psi >= 0.0 && psi <= 2.0, "SceneGeometry: psi must lie in [0, 2]");
    }

    /// Build from the angle phi between the person-Tx line and the ellipse normal.
    static SceneGeometry from_angle(double wavelength_m, double phi_rad)
    {
        SceneGeometry g(wavelength_m, std::clamp(2.0 * std::cos(phi_rad), 0.0, 2.0));
        g.phi_rad_ = phi_rad;
        return g;
    }

    static double wavelength_for_carrier(double carrier_hz) { return kSpeedOfLight / carrier_hz; }

    double wavelength_m() const { return wavelength_m_; }
    double psi() const { return psi_; }
    std::optional<double> phi_rad() const { return phi_rad_; }

    /// Phase advance of the reflected path per metre of displacement.
    double beta_rad_per_m() const { return kTwoPi * psi_ / wavelength_m_; }

    /// Modulation index for a sinusoidal speed v_max cos(2 pi f_o t).
    double modulation_index(double v_max_mps, double f_o_hz) const
    {
        return psi_ * v_max_mps / (wavelength_m_ * f_o_hz);
    }

    bool operator==(const SceneGeometry &) const = default;

private:
    double wavelength_m_;
    double psi_;
    std::optional<double> phi_rad_;
};

/// Direct and reflected path of one (antenna, subcarrier) channel.
struct PathParams
{
    double alpha_d = 1.0;
    double mu_d = 0.0;
    double alpha_r = 0.0;
    double mu_r = 0.0;

    double delta_mu() const { return mu_r - mu_d; }
    double ratio() const { return alpha_r / alpha_d; }

    /// Validates amplitudes. max_ratio bounds alpha_r/alpha_d so that the
    /// first-order phase approximation stays meaningful; pass infinity to disable.
    void validate(double max_ratio = 0.2) const
    {
        require(std::isfinite(alpha_d) && alpha_d > 0.0, "PathParams: alpha_d must be positive");
        require(std::isfinite(alpha_r) && alpha_r >= 0.0, "PathParams: alpha_r must be non-negative");
        require(std::isfinite(mu_d) && std::isfinite(mu_r), "PathParams: phases must be finite");
        require(ratio() <= max_ratio, "PathParams: alpha_r/alpha_d exceeds the small-ratio limit");
    }

    bool operator==(const PathParams &) const = default;
};

/// v(t) = v_max cos(2 pi f_o t + phase)
struct Sinusoid
{
    double v_max_mps = 0.0;
    double f_o_hz = 1.0;
    double phase_rad = 0.0;

    bool operator==(const Sinusoid &) const = default;
};

/// Speed samples on a uniform grid starting at t = 0.
struct SampledSpeed
{
    std::vector<double> samples_mps;
    double rate_hz = 1.0;

    bool operator==(const SampledSpeed &) const = default;
};

/// Speed of the reflecting body part along the ellipse normal.
struct MotionProfile
{
    std::variant<Sinusoid, SampledSpeed> kind;
    double duration_s = 0.0;

    static MotionProfile sinusoid(double v_max_mps, double f_o_hz, double duration_s, double phase_rad = 0.0)
    {
        return {Sinusoid{v_max_mps, f_o_hz, phase_rad}, duration_s};
    }

    static MotionProfile sampled(std::vector<double> samples_mps, double rate_hz)
    {
        const double duration = rate_hz > 0.0 ? static_cast<double>(samples_mps.size()) / rate_hz : 0.0;
        return {SampledSpeed{std::move(samples_mps), rate_hz}, duration};
    }

    void validate() const
    {
        require(std::isfinite(duration_s) && duration_s > 0.0, "MotionProfile: duration must be positive");
        if (const auto *s = std::get_if<Sinusoid>(&kind))
        {
            require(std::isfinite(s->v_max_mps) && s->v_max_mps >= 0.0, "MotionProfile: v_max must be non-negative");
            require(std::isfinite(s->f_o_hz) && s->f_o_hz > 0.0, "MotionProfile: f_o must be positive");
            require(std::isfinite(s->phase_rad), "MotionProfile: phase must be finite");
        }
        else
        {
            const auto &sp = std::get<SampledSpeed>(kind);
            require(std::isfinite(sp.rate_hz) && sp.rate_hz > 0.0, "MotionProfile: sample rate must be positive");
            require(!sp.samples_mps.empty(), "MotionProfile: sampled profile is empty");
            require(std::all_of(sp.samples_mps.begin(), sp.samples_mps.end(), [](double v) { return std::isfinite(v); }),
                    "MotionProfile: sampled profile contains non-finite samples");
        }
    }

    bool operator==(const MotionProfile &) const = default;
};

/// Continuous-time displacement d(t) = integral of v from 0 to t, with d(0) = 0.
///
/// Sinusoids use the closed form. Sampled speeds are treated as piecewise linear, so
/// the value at grid nodes equals the cumulative trapezoid and in between the
/// integral is exact for the interpolated speed. Outside [0, duration] the speed is 0.
class DisplacementTrack
{
public:
    explicit DisplacementTrack(const MotionProfile &profile) : profile_(profile)
    {
        profile_.validate();
        if (const auto *sp = std::get_if<SampledSpeed>(&profile_.kind))
        {
            cumulative_.resize(sp->samples_mps.size());
            cumulative_[0] = 0.0;
            const double dt = 1.0 / sp->rate_hz;
            for (std::size_t k = 1; k < sp->samples_mps.size(); ++k)
                cumulative_[k] = cumulative_[k - 1] + 0.5 * dt * (sp->samples_mps[k - 1] + sp->samples_mps[k]);
        }
    }

    double operator()(double t) const
    {
        if (t <= 0.0)
            return 0.0;
        t = std::min(t, profile_.duration_s);
        if (const auto *s = std::get_if<Sinusoid>(&profile_.kind))
        {
            const double w = kTwoPi * s->f_o_hz;
            return s->v_max_mps / w * (std::sin(w * t + s->phase_rad) - std::sin(s->phase_rad));
        }
        const auto &sp = std::get<SampledSpeed>(profile_.kind);
        const double pos = t * sp.rate_hz;
        const auto last = sp.samples_mps.size() - 1;
        const auto k = std::min(static_cast<std::size_t>(pos), last);
        if (k >= last)
            return cumulative_[last];
        const double frac = pos - static_cast<double>(k);
        const double dt = 1.0 / sp.rate_hz;
        const double v0 = sp.samples_mps[k];
        const double v1 = sp.samples_mps[k + 1];
        return cumulative_[k] + dt * (v0 * frac + 0.5 * (v1 - v0) * frac * frac);
    }

    const MotionProfile &profile() const { return profile_; }

private:
    MotionProfile profile_;
    std::vector<double> cumulative_;
};

/// Number of grid points covering a profile: round(duration * rate).
inline std::size_t grid_length(double duration_s, double sample_rate_hz)
{
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

/// d(t) on the grid t_k = k / sample_rate.
inline std::vector<double> integrate_velocity(const MotionProfile &profile, double sample_rate_hz)
{
    require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0, "integrate_velocity: sample rate must be positive");
    const DisplacementTrack track(profile);
    std::vector<double> d(grid_length(profile.duration_s, sample_rate_hz));
    for (std::size_t k = 0; k < d.size(); ++k)
        d[k] = track(static_cast<double>(k) / sample_rate_hz);
    return d;
}

struct BasebandSample
{
    double t = 0.0;
    std::complex<double> value;
};

/// c = a_d e^{j mu_d} + a_r e^{j (mu_r + beta d)}
inline std::complex<double> baseband_value(const PathParams &paths, double beta, double displacement_m)
{
    return std::polar(paths.alpha_d, paths.mu_d) + std::polar(paths.alpha_r, paths.mu_r + beta * displacement_m);
}

inline std::vector<BasebandSample> synth_baseband(const SceneGeometry &geometry, const PathParams &paths,
                                                  const MotionProfile &profile, double sample_rate_hz,
                                                  double max_ratio = 0.2)
{
    paths.validate(max_ratio);
    const auto d = integrate_velocity(profile, sample_rate_hz);
    const double beta = geometry.beta_rad_per_m();
    std::vector<BasebandSample> out(d.size());
    for (std::size_t k = 0; k < d.size(); ++k)
        out[k] = {static_cast<double>(k) / sample_rate_hz, baseband_value(paths, beta, d[k])};
    return out;
}

/// |c|^2 with the segment mean removed.
inline std::vector<double> squared_magnitude(std::span<const BasebandSample> series)
{
    require(!series.empty(), "squared_magnitude: empty series");
    std::vector<double> s(series.size());
    double mean = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k)
    {
        s[k] = std::norm(series[k].value);
        mean += s[k];
    }
    mean /= static_cast<double>(s.size());
    for (auto &v : s)
        v -= mean;
    return s;
}

/// A_m cos(beta d + dmu_m), A_m = 2 a_d a_r. Equals |c|^2 - a_d^2 - a_r^2 exactly.
inline double squared_magnitude_closed_form(const PathParams &paths, double beta, double displacement_m)
{
    return 2.0 * paths.alpha_d * paths.alpha_r * std::cos(beta * displacement_m + paths.delta_mu());
}

/// Removes +-2pi jumps between consecutive samples, in place.
inline void unwrap_phase(std::span<double> phase)
{
    double offset = 0.0;
    for (std::size_t k = 1; k < phase.size(); ++k)
    {
        const double raw = phase[k] + offset;
        double jump = raw - phase[k - 1];
        if (jump > kPi || jump < -kPi)
        {
            const double turns = std::round(jump / kTwoPi);
            offset -= turns * kTwoPi;
        }
        phase[k] += offset;
    }
}

inline double wrap_to_pi(double x)
{
    x = std::remainder(x, kTwoPi);
    return x;
}

/// Amplitude and offset of the small-ratio phase-difference approximation between antennas i and j.
struct PhaseDifferenceForm
{
    double amplitude = 0.0; // A_p = 2 (a_r/a_d) sin((dmu_i - dmu_j)/2)
    double offset = 0.0;    // dmu_p = (dmu_i + dmu_j)/2
};

inline PhaseDifferenceForm phase_difference_form(const PathParams &paths_i, const PathParams &paths_j)
{
    const double ratio = 0.5 * (paths_i.ratio() + paths_j.ratio());
    const double dmu_i = paths_i.delta_mu();
    const double dmu_j = paths_j.delta_mu();
    return {2.0 * ratio * std::sin(0.5 * (dmu_i - dmu_j)), 0.5 * (dmu_i + dmu_j)};
}

/// First-order phase difference r_i sin(x + dmu_i) - r_j sin(x + dmu_j), x = beta d, without
/// the constant mu_d,i - mu_d,j. Equals A_p cos(x + dmu_p) when both antennas share a_r/a_d.
inline double phase_difference_closed_form(const PathParams &paths_i, const PathParams &paths_j, double beta,
                                           double displacement_m)
{
    const double x = beta * displacement_m;
    return paths_i.ratio() * std::sin(x + paths_i.delta_mu()) - paths_j.ratio() * std::sin(x + paths_j.delta_mu());
}

/// Unwrapped arg(c_i) - arg(c_j) over a shared sample grid.
///
/// Emits a warning when both antennas share the same dmu_m: the approximation then
/// predicts A_p = 0 and the stream carries no motion.
inline std::vector<double> phase_difference(std::span<const BasebandSample> baseband_i,
                                            std::span<const BasebandSample> baseband_j, const PathParams &paths_i,
                                            const PathParams &paths_j)
{
    require(baseband_i.size() == baseband_j.size(), "phase_difference: series lengths differ");
    require(!baseband_i.empty(), "phase_difference: empty series");
    if (std::abs(wrap_to_pi(paths_i.delta_mu() - paths_j.delta_mu())) < 1e-12)
        warn("phase_difference: equal reflected-path phase offsets on both antennas; stream carries no motion");
    std::vector<double> out(baseband_i.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = std::arg(baseband_i[k].value * std::conj(baseband_j[k].value));
    unwrap_phase(out);
    return out;
}

} // namespace seizewatch
