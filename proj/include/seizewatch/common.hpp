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

#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace seizewatch
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Bad user input: malformed arguments, files or scenarios. Maps to CLI exit code 2.
class InputError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// An internal consistency check failed. Maps to CLI exit code 3.
class InvariantError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

// Sink for warn-level diagnostics. Tests swap it out to capture messages.
inline std::function<void(std::string_view)> &warning_sink()
{
    static std::function<void(std::string_view)> sink = [](std::string_view msg)
    { std::cerr << "seizewatch warning: " << msg << '\n'; };
    return sink;
}

inline void warn(std::string_view msg)
{
    if (auto &sink = warning_sink())
        sink(msg);
}

inline void require(bool condition, const std::string &what)
{
    if (!condition)
        throw InputError(what);
}

inline void ensure(bool condition, const std::string &what)
{
    if (!condition)
        throw InvariantError(what);
}

} // namespace seizewatch
