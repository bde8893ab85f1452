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

// Stage 1: resampling, derived streams, Hampel filtering, SNR stream selection and
// block PCA down to a single stream p(t).

#pragma once

#include "csi_sim.hpp"
#include "spectrum.hpp"

#include <Eigen/Dense>

#include <compare>
#include <limits>
#include <numeric>

namespace seizewatch
{

enum class StreamKind : std::uint8_t
{
    Magnitude = 0, // |c|^2 of antenna `antenna`
    PhaseDiff = 1, // arg(c_antenna conj(c_0)), antenna >= 1
};

struct StreamId
{
    StreamKind kind = StreamKind::Magnitude;
    int antenna = 0;
    int subcarrier = 0;

    auto operator<=>(const StreamId &) const = default;
    bool operator==(const StreamId &) const = default;
};

inline std::string to_string(const StreamId &id)
{
    return std::string(id.kind == StreamKind::Magnitude ? "mag" : "pd") + ":" + std::to_string(id.antenna) + ":" +
           std::to_string(id.subcarrier);
}

inline StreamId stream_id_from_string(const std::string &s)
{
    StreamId id;
    const auto a = s.find(':');
    const auto b = s.find(':', a == std::string::npos ? a : a + 1);
    require(a != std::string::npos && b != std::string::npos, "malformed stream id '" + s + "'");
    const auto kind = s.substr(0, a);
    require(kind == "mag" || kind == "pd", "malformed stream id '" + s + "'");
    id.kind = kind == "mag" ? StreamKind::Magnitude : StreamKind::PhaseDiff;
    try
    {
        id.antenna = std::stoi(s.substr(a + 1, b - a - 1));
        id.subcarrier = std::stoi(s.substr(b + 1));
    }
    catch (const std::exception &)
    {
        throw InputError("malformed stream id '" + s + "'");
    }
    return id;
}

/// All (2 n_rx - 1) n_sc derived stream ids in sorted order.
inline std::vector<StreamId> all_stream_ids(int n_rx, int n_sc)
{
    std::vector<StreamId> ids;
    for (int a = 0; a < n_rx; ++a)
        for (int s = 0; s < n_sc; ++s)
            ids.push_back({StreamKind::Magnitude, a, s});
    for (int a = 1; a < n_rx; ++a)
        for (int s = 0; s < n_sc; ++s)
            ids.push_back({StreamKind::PhaseDiff, a, s});
    return ids;
}

struct StreamSet
{
    double sample_rate_hz = 200.0;
    double start_s = 0.0; // time of sample 0
    std::vector<StreamId> ids;
    std::vector<std::vector<double>> streams;

    std::size_t length() const { return streams.empty() ? 0 : streams.front().size(); }

    void validate() const
    {
        require(ids.size() == streams.size(), "StreamSet: one id per stream");
        for (const auto &s : streams)
            require(s.size() == length(), "StreamSet: streams must have equal length");
        auto sorted = ids;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "StreamSet: duplicate stream id");
    }
};

struct CalibrationState
{
    std::vector<StreamId> selected_ids;
    std::vector<double> selected_snr;
    double sigma_c_sq = 0.0;
    double t_cal_s = 13.0;
    double cal_start_s = 0.0;
    double bw_br_hz = 0.6;
    std::vector<double> reference_power; // per channel mean |c|^2 over the calibration window

    void validate(std::size_t n_derived) const
    {
        ensure(selected_ids.size() <= n_derived, "CalibrationState: more selected streams than available");
        ensure(sigma_c_sq >= 0.0, "CalibrationState: negative noise power");
    }
};

// ---------------------------------------------------------------------------
// Resampling and derived streams

/// Time of uniform grid sample 0: the first packet timestamp rounded to the grid.
template <typename Scalar>
inline double grid_origin_s(const BasicCsiTrace<Scalar> &trace)
{
    if (trace.timestamps_s.empty())
        return 0.0;
    return std::round(trace.timestamps_s.front() * trace.sample_rate_hz) / trace.sample_rate_hz;
}

/// Channel c linearly interpolated onto the uniform grid, samples [first, last).
template <typename Scalar>
std::vector<std::complex<double>> resample_channel(const BasicCsiTrace<Scalar> &trace, std::size_t channel,
                                                   std::size_t first, std::size_t last)
{
    require(channel < trace.channels.size(), "resample_channel: channel out of range");
    const auto &t = trace.timestamps_s;
    const auto &x = trace.channels[channel];
    const std::size_t n = t.size();
    last = std::min(last, n);
    require(first <= last, "resample_channel: empty range");
    require(n >= 2, "resample_channel: need at least two packets");
    const double dt = 1.0 / trace.sample_rate_hz;
    const double origin = grid_origin_s(trace);
    std::vector<std::complex<double>> out(last - first);
    // Packets are in order and within half a period of their slot, so the bracketing
    // pair of grid point k is (k-1, k) or (k, k+1).
    for (std::size_t k = first; k < last; ++k)
    {
        const double g = origin + static_cast<double>(k) * dt;
        std::size_t j = k;
        if (t[j] > g && j > 0)
            --j;
        if (j + 1 >= n)
            j = n - 2;
        while (j + 2 < n && t[j + 1] < g)
            ++j;
        while (j > 0 && t[j] > g)
            --j;
        const double span = t[j + 1] - t[j];
        const double frac = span > 0.0 ? std::clamp((g - t[j]) / span, 0.0, 1.0) : 0.0;
        const std::complex<double> a(x[j].real(), x[j].imag());
        const std::complex<double> b(x[j + 1].real(), x[j + 1].imag());
        out[k - first] = a + (b - a) * frac;
    }
    return out;
}

/// Mean |c|^2 per channel over [first, last) of the uniform grid.
template <typename Scalar>
std::vector<double> channel_reference_power(const BasicCsiTrace<Scalar> &trace, std::size_t first, std::size_t last)
{
    std::vector<double> ref(trace.n_channels());
    for (std::size_t c = 0; c < ref.size(); ++c)
    {
        const auto v = resample_channel(trace, c, first, last);
        double sum = 0.0;
        for (const auto &z : v)
            sum += std::norm(z);
        ref[c] = v.empty() ? 1.0 : sum / static_cast<double>(v.size());
    }
    return ref;
}

/// Builds derived streams on [first, last) of the uniform grid.
///
/// Magnitude streams are |c|^2 / P_ref - 1 with P_ref the channel's reference power, so
/// they are in the same dimensionless units as the phase differences. With an empty
/// `reference_power` the raw |c|^2 is returned.
template <typename Scalar>
StreamSet derive_streams(const BasicCsiTrace<Scalar> &trace, std::span<const StreamId> ids, std::size_t first,
                         std::size_t last, std::span<const double> reference_power = {})
{
    require(reference_power.empty() || reference_power.size() == trace.n_channels(),
            "derive_streams: one reference power per channel");
    StreamSet set;
    set.sample_rate_hz = trace.sample_rate_hz;
    set.start_s = grid_origin_s(trace) + static_cast<double>(first) / trace.sample_rate_hz;
    set.ids.assign(ids.begin(), ids.end());
    set.streams.reserve(ids.size());

    // Cache resampled channels; a phase difference needs antenna 0 as well.
    std::vector<std::vector<std::complex<double>>> cache(trace.n_channels());
    auto channel = [&](int antenna, int subcarrier) -> const std::vector<std::complex<double>> &
    {
        require(antenna >= 0 && antenna < trace.n_rx && subcarrier >= 0 && subcarrier < trace.n_sc,
                "derive_streams: stream id outside the receiver layout");
        const auto c = trace.channel_index(antenna, subcarrier);
        if (cache[c].empty())
            cache[c] = resample_channel(trace, c, first, last);
        return cache[c];
    };

    for (const auto &id : ids)
    {
        std::vector<double> s;
        if (id.kind == StreamKind::Magnitude)
        {
            const auto &v = channel(id.antenna, id.subcarrier);
            s.resize(v.size());
            const double ref = reference_power.empty() ? 0.0 : reference_power[trace.channel_index(id.antenna, id.subcarrier)];
            for (std::size_t k = 0; k < v.size(); ++k)
                s[k] = ref > 0.0 ? std::norm(v[k]) / ref - 1.0 : std::norm(v[k]);
        }
        else
        {
            require(id.antenna >= 1, "derive_streams: phase difference needs antenna >= 1");
            const auto &va = channel(id.antenna, id.subcarrier);
            const auto &v0 = channel(0, id.subcarrier);
            s.resize(va.size());
            for (std::size_t k = 0; k < va.size(); ++k)
                s[k] = std::arg(va[k] * std::conj(v0[k]));
            unwrap_phase(s);
        }
        set.streams.push_back(std::move(s));
    }
    return set;
}

// ---------------------------------------------------------------------------
// Hampel identifier

/// Sliding-window Hampel filter. The window is centred where possible and shifted
/// inwards at the edges so it always holds min(window, n) samples.
/// Returns the number of replaced samples.
inline std::size_t hampel_filter_inplace(std::vector<double> &x, std::size_t window = 101, double n_sigmas = 3.0,
                                         std::vector<std::size_t> *replaced = nullptr)
{
    require(window >= 3 && window % 2 == 1, "hampel_filter: window must be odd and at least 3");
    require(n_sigmas >= 0.0, "hampel_filter: n_sigmas must be non-negative");
    const std::size_t n = x.size();
    if (n == 0)
        return 0;
    const std::size_t w = std::min(window, n);
    const std::size_t half = window / 2;
    const std::vector<double> src = x;

    std::vector<double> sorted(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(w));
    std::sort(sorted.begin(), sorted.end());
    std::size_t win_first = 0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k)
    {
        const std::size_t want = std::min(k > half ? k - half : 0, n - w);
        while (win_first < want)
        {
            // Slide by one: drop src[win_first], add src[win_first + w].
            const auto out = std::lower_bound(sorted.begin(), sorted.end(), src[win_first]);
            sorted.erase(out);
            const double in = src[win_first + w];
            sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), in), in);
            ++win_first;
        }

        double med;
        double mad;
        if (w % 2 == 1)
        {
            const std::size_t m = w / 2;
            med = sorted[m];
            // m-th smallest |s - med|: merge the deviations left and right of the median.
            std::size_t i = 0, j = 0;
            double dev = 0.0;
            for (std::size_t t = 0; t < m; ++t)
            {
                const double l = i < m ? med - sorted[m - 1 - i] : std::numeric_limits<double>::infinity();
                const double r = j < m ? sorted[m + 1 + j] - med : std::numeric_limits<double>::infinity();
                if (l <= r)
                {
                    dev = l;
                    ++i;
                }
                else
                {
                    dev = r;
                    ++j;
                }
            }
            mad = dev;
        }
        else
        {
            med = 0.5 * (sorted[w / 2 - 1] + sorted[w / 2]);
            std::vector<double> d(w);
            for (std::size_t i = 0; i < w; ++i)
                d[i] = std::abs(sorted[i] - med);
            std::sort(d.begin(), d.end());
            mad = 0.5 * (d[w / 2 - 1] + d[w / 2]);
        }
        const double threshold = n_sigmas * 1.4826 * mad;
        if (std::abs(src[k] - med) > threshold)
        {
            x[k] = med;
            ++count;
            if (replaced)
                replaced->push_back(k);
        }
    }
    return count;
}

inline std::vector<double> hampel_filter(std::span<const double> stream, std::size_t window = 101, double n_sigmas = 3.0)
{
    std::vector<double> x(stream.begin(), stream.end());
    hampel_filter_inplace(x, window, n_sigmas);
    return x;
}

// ---------------------------------------------------------------------------
// SNR and stream selection

/// Periodogram power in (0, BW_br] over power in (BW_br, Nyquist]. A zero
/// denominator gives +infinity unless the numerator is zero too, which gives 0.
inline double compute_stream_snr(std::span<const double> stream, double sample_rate_hz, double bw_br_hz)
{
    require(stream.size() >= 4, "compute_stream_snr: stream too short");
    Periodogram pg;
    const auto &p = pg.power(stream);
    const double nyq = 0.5 * sample_rate_hz;
    double in = band_power(p, stream.size(), sample_rate_hz, 0.0, bw_br_hz);
    double out = band_power(p, stream.size(), sample_rate_hz, bw_br_hz, nyq);
    // FFT round-off leaves ~1e-32 relative power in empty bins; treat that as zero.
    double energy = 0.0;
    for (double v : p)
        energy += v;
    const double floor = 1e-24 * energy;
    in = in > floor ? in : 0.0;
    out = out > floor ? out : 0.0;
    if (out == 0.0)
        return in == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return in / out;
}

struct SelectionResult
{
    std::vector<StreamId> ids;
    std::vector<double> snr;
};

/// Top-k streams by SNR over the first t_cal_s of `calibration`; ties keep id order.
inline SelectionResult select_streams(const StreamSet &calibration, double t_cal_s, std::size_t k, double bw_br_hz)
{
    calibration.validate();
    const auto n_cal = static_cast<std::size_t>(std::llround(t_cal_s * calibration.sample_rate_hz));
    require(calibration.length() >= n_cal && n_cal >= 4, "select_streams: trace shorter than the calibration window");
    require(k >= 1, "select_streams: k must be positive");
    std::vector<double> snr(calibration.ids.size());
    for (std::size_t i = 0; i < snr.size(); ++i)
        snr[i] = compute_stream_snr(std::span(calibration.streams[i]).first(n_cal), calibration.sample_rate_hz, bw_br_hz);
    std::vector<std::size_t> order(snr.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b)
              {
                  if (snr[a] != snr[b])
                      return snr[a] > snr[b];
                  return calibration.ids[a] < calibration.ids[b];
              });
    SelectionResult out;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i)
    {
        out.ids.push_back(calibration.ids[order[i]]);
        out.snr.push_back(snr[order[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Block PCA

struct PcaOptions
{
    double block_s = 4.0;
    double overlap = 0.5;
};

/// Projection of one block onto its leading eigenvector; zeros for a rank-zero block.
/// `loading` receives the sign-normalised eigenvector.
inline std::vector<double> pca_block(const std::vector<std::span<const double>> &streams, std::size_t first,
                                     std::size_t last, Eigen::VectorXd *loading = nullptr)
{
    const auto k = static_cast<Eigen::Index>(streams.size());
    const auto len = static_cast<Eigen::Index>(last - first);
    Eigen::MatrixXd x(len, k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i < len; ++i)
            x(i, j) = streams[static_cast<std::size_t>(j)][first + static_cast<std::size_t>(i)];
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<Eigen::Index>(len - 1, 1));
    std::vector<double> out(static_cast<std::size_t>(len), 0.0);
    if (!(cov.trace() > 0.0))
    {
        if (loading)
            *loading = Eigen::VectorXd::Zero(k);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    ensure(solver.info() == Eigen::Success, "pca_block: eigen decomposition failed");
    Eigen::VectorXd v = solver.eigenvectors().col(k - 1);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0)
        v = -v;
    const Eigen::VectorXd p = x * v;
    for (Eigen::Index i = 0; i < len; ++i)
        out[static_cast<std::size_t>(i)] = p(i);
    if (loading)
        *loading = v;
    return out;
}

/// First principal component over overlapping blocks with linear cross-fades.
///
/// Block b covers [b h, b h + B) (the last one is truncated at n). Each block's sign is
/// chosen so its overlap with the output so far correlates non-negatively; the first
/// block makes its largest loading positive.
inline std::vector<double> pca_first_component(const std::vector<std::span<const double>> &streams,
                                               double sample_rate_hz, const PcaOptions &opt = {})
{
    require(streams.size() >= 2, "pca_first_component: need at least two streams");
    const std::size_t n = streams.front().size();
    for (const auto &s : streams)
        require(s.size() == n, "pca_first_component: streams must have equal length");
    require(opt.block_s > 0.0 && opt.overlap >= 0.0 && opt.overlap < 1.0, "pca_first_component: invalid block options");
    std::vector<double> out(n, 0.0);
    if (n == 0)
        return out;
    const auto block = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(opt.block_s * sample_rate_hz)));
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(block) * (1.0 - opt.overlap))));

    std::size_t written = 0; // out[0, written) is final up to cross-fades
    for (std::size_t first = 0;; first += hop)
    {
        const std::size_t last = std::min(first + block, n);
        auto p = pca_block(streams, first, last);
        const std::size_t overlap = written > first ? written - first : 0;
        if (overlap > 0)
        {
            double dot = 0.0;
            for (std::size_t i = 0; i < overlap; ++i)
                dot += out[first + i] * p[i];
            if (dot < 0.0)
                for (auto &v : p)
                    v = -v;
            for (std::size_t i = 0; i < overlap; ++i)
            {
                const double w = (static_cast<double>(i) + 0.5) / static_cast<double>(overlap);
                out[first + i] = (1.0 - w) * out[first + i] + w * p[i];
            }
        }
        for (std::size_t i = overlap; i < p.size(); ++i)
            out[first + i] = p[i];
        written = last;
        if (last >= n)
            break;
    }
    return out;
}

inline std::vector<double> pca_first_component(const StreamSet &set, const PcaOptions &opt = {})
{
    std::vector<std::span<const double>> spans(set.streams.begin(), set.streams.end());
    return pca_first_component(spans, set.sample_rate_hz, opt);
}

} // namespace seizewatch
