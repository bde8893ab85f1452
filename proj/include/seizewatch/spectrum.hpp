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

// Periodogram helpers over Eigen's FFT. All spectra here are one-sided power
// |X_k|^2 for k = 0 .. N/2 of a rectangular-windowed real segment.

#pragma once

#include "common.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace seizewatch
{

class Periodogram
{
public:
    /// One-sided |X_k|^2, k = 0 .. floor(N/2).
    const std::vector<double> &power(std::span<const double> segment)
    {
        input_.assign(segment.begin(), segment.end());
        fft_.fwd(spectrum_, input_);
        const std::size_t half = input_.size() / 2;
        power_.resize(half + 1);
        for (std::size_t k = 0; k <= half; ++k)
            power_[k] = std::norm(spectrum_[k]);
        return power_;
    }

    /// Full complex DFT (all N bins).
    const std::vector<std::complex<double>> &dft(std::span<const double> segment)
    {
        input_.assign(segment.begin(), segment.end());
        fft_.fwd(spectrum_, input_);
        return spectrum_;
    }

private:
    Eigen::FFT<double> fft_;
    std::vector<double> input_;
    std::vector<std::complex<double>> spectrum_;
    std::vector<double> power_;
};

inline double bin_frequency(std::size_t k, std::size_t n, double sample_rate_hz)
{
    return static_cast<double>(k) * sample_rate_hz / static_cast<double>(n);
}

/// Sum of one-sided bins with low < f <= high.
inline double band_power(std::span<const double> power, std::size_t n, double sample_rate_hz, double low_hz,
                         double high_hz)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k)
    {
        const double f = bin_frequency(k, n, sample_rate_hz);
        if (f > low_hz && f <= high_hz)
            sum += power[k];
    }
    return sum;
}

/// Smallest bin frequency B such that the power strictly above B is at most
/// `tail_fraction` of the non-DC power. Empty when the segment has no non-DC power.
inline std::optional<double> percentile_bandwidth(std::span<const double> power, std::size_t n, double sample_rate_hz,
                                                  double tail_fraction = 0.1)
{
    double total = 0.0;
    for (std::size_t k = 1; k < power.size(); ++k)
        total += power[k];
    if (!(total > 0.0))
        return std::nullopt;
    const double keep = (1.0 - tail_fraction) * total;
    double cumulative = 0.0;
    for (std::size_t k = 1; k < power.size(); ++k)
    {
        cumulative += power[k];
        if (cumulative >= keep * (1.0 - 1e-12))
            return bin_frequency(k, n, sample_rate_hz);
    }
    return bin_frequency(power.size() - 1, n, sample_rate_hz);
}

inline std::optional<double> percentile_bandwidth(std::span<const double> segment, double sample_rate_hz,
                                                  double tail_fraction = 0.1)
{
    Periodogram pg;
    return percentile_bandwidth(pg.power(segment), segment.size(), sample_rate_hz, tail_fraction);
}

} // namespace seizewatch
