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

// Analytic spectrum and bandwidth of y(t) = A cos(beta' sin(2 pi f_o t) + dmu).
//
// Expanding exp(j beta' sin w t) in its Fourier-Bessel series gives lines at n f_o:
//   n even: A cos(dmu) J_n(beta')
//   n odd : j A sin(dmu) J_n(beta')
// as positive-frequency coefficients, i.e. y(t) = c_0 + 2 Re sum_{n>0} c_n exp(j n w t).

#pragma once

#include "signal_model.hpp"

#include <complex>
#include <vector>

namespace seizewatch
{

/// J_0(x) .. J_n_max(x) for x >= 0 by Miller's downward recurrence, normalised with
/// J_0 + 2 sum J_2k = 1. Absolute error is around 1e-15 for x up to a few hundred.
inline std::vector<double> bessel_j_sequence(double x, int n_max)
{
    require(n_max >= 0, "bessel_j_sequence: negative order");
    require(std::isfinite(x) && x >= 0.0, "bessel_j_sequence: argument must be finite and non-negative");
    std::vector<double> j(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (x == 0.0)
    {
        j[0] = 1.0;
        return j;
    }
    // Start well above both n_max and x so the spurious Y_n component has decayed.
    const int start = 2 * ((std::max(n_max, static_cast<int>(x)) + 15 + static_cast<int>(std::sqrt(40.0 * (x + n_max)))) / 2);
    double next = 0.0; // J_{k+1}
    double cur = 1e-300;
    double norm = 0.0;
    for (int k = start; k > 0; --k)
    {
        const double prev = 2.0 * k / x * cur - next; // J_{k-1}
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        if (k - 1 <= n_max)
            j[static_cast<std::size_t>(k - 1)] = cur;
        if ((k - 1) % 2 == 0)
            norm += (k - 1 == 0) ? cur : 2.0 * cur;
        if (std::abs(cur) > 1e250)
        {
            // Rescale to stay in range.
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for (auto &v : j)
                v *= 1e-250;
        }
    }
    for (auto &v : j)
        v /= norm;
    return j;
}

inline double bessel_j(int n, double x)
{
    return bessel_j_sequence(x, n).back();
}

struct SpectralLine
{
    int order = 0;
    double frequency_hz = 0.0;
    std::complex<double> amplitude;
};

struct LineSpectrum
{
    std::vector<SpectralLine> lines; // order 0 .. n_max
    double fundamental_hz = 0.0;
    double modulation_index = 0.0;

    /// J_0^2 + 2 sum_{n>=1} J_n^2 over the emitted orders; 1 for an untruncated series.
    double bessel_mass = 0.0;
};

/// Default truncation: ceil(b) + max(8, ceil(4 b^(1/3))).
inline int default_line_count(double beta_prime)
{
    const int extra = std::max(8, static_cast<int>(std::ceil(4.0 * std::cbrt(beta_prime))));
    return static_cast<int>(std::ceil(beta_prime)) + extra;
}

inline LineSpectrum bessel_line_spectrum(double beta_prime, double f_o_hz, double delta_mu_rad, double amplitude,
                                         int n_max)
{
    require(std::isfinite(beta_prime) && beta_prime >= 0.0, "bessel_line_spectrum: beta' must be non-negative");
    require(std::isfinite(f_o_hz) && f_o_hz > 0.0, "bessel_line_spectrum: f_o must be positive");
    require(n_max >= static_cast<int>(std::ceil(beta_prime)) + 8,
            "bessel_line_spectrum: n_max must be at least ceil(beta') + 8");
    const auto jn = bessel_j_sequence(beta_prime, n_max);
    LineSpectrum spec;
    spec.fundamental_hz = f_o_hz;
    spec.modulation_index = beta_prime;
    spec.lines.reserve(jn.size());
    const double even_scale = amplitude * std::cos(delta_mu_rad);
    const double odd_scale = amplitude * std::sin(delta_mu_rad);
    for (int n = 0; n <= n_max; ++n)
    {
        const double jv = jn[static_cast<std::size_t>(n)];
        const std::complex<double> amp = (n % 2 == 0) ? std::complex<double>(even_scale * jv, 0.0)
                                                      : std::complex<double>(0.0, odd_scale * jv);
        spec.lines.push_back({n, n * f_o_hz, amp});
        spec.bessel_mass += (n == 0 ? 1.0 : 2.0) * jv * jv;
    }
    if (spec.bessel_mass < 0.999)
        throw InputError("bessel_line_spectrum: n_max too small to capture 99.9% of the Bessel mass");
    return spec;
}

inline LineSpectrum bessel_line_spectrum(double beta_prime, double f_o_hz, double delta_mu_rad, double amplitude = 1.0)
{
    return bessel_line_spectrum(beta_prime, f_o_hz, delta_mu_rad, amplitude, default_line_count(beta_prime));
}

/// (b + 1) f_o for b >= 1, otherwise 2 f_o.
inline double carson_bandwidth(double beta_prime, double f_o_hz)
{
    require(std::isfinite(beta_prime) && beta_prime >= 0.0, "carson_bandwidth: beta' must be non-negative");
    require(std::isfinite(f_o_hz) && f_o_hz > 0.0, "carson_bandwidth: f_o must be positive");
    return beta_prime >= 1.0 ? (beta_prime + 1.0) * f_o_hz : 2.0 * f_o_hz;
}

enum class MotionClass
{
    Breathing,
    Seizure,
    NormalEvent,
};

/// Motion parameters of one class. For Breathing they are the adult maxima; for
/// Seizure the class minima (the bound is a lower bound); for NormalEvent the class
/// maxima (the bound is an upper bound).
struct MotionClassParams
{
    MotionClass motion_class = MotionClass::Breathing;
    double f_o_hz = 0.3;
    double v_max_mps = 0.01;

    static MotionClassParams breathing() { return {MotionClass::Breathing, 0.3, 0.01}; }
    static MotionClassParams seizure() { return {MotionClass::Seizure, 1.5, 0.48}; }
    static MotionClassParams normal_event() { return {MotionClass::NormalEvent, 2.0, 0.33}; }
};

// Physiological ranges behind the defaults above.
inline constexpr double kBreathingRateMinHz = 0.2;
inline constexpr double kBreathingRateMaxHz = 0.3;
inline constexpr double kSeizureRateMinHz = 1.5;
inline constexpr double kSeizureRateMaxHz = 5.0;
inline constexpr double kBreathingDisplacementM = 0.005;

inline double class_bandwidth_bound(const MotionClassParams &params, const SceneGeometry &geometry)
{
    require(params.f_o_hz > 0.0 && params.v_max_mps >= 0.0, "class_bandwidth_bound: invalid class parameters");
    if (params.motion_class == MotionClass::Breathing)
        return 2.0 * params.f_o_hz;
    return geometry.psi() * params.v_max_mps / geometry.wavelength_m() + params.f_o_hz;
}

/// Classification threshold: midpoint of the seizure lower bound and the normal-event upper bound.
inline double derive_f_th(const SceneGeometry &geometry,
                          const MotionClassParams &seizure = MotionClassParams::seizure(),
                          const MotionClassParams &normal = MotionClassParams::normal_event())
{
    return 0.5 * (class_bandwidth_bound(seizure, geometry) + class_bandwidth_bound(normal, geometry));
}

} // namespace seizewatch
