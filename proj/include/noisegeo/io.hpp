// Copyright 2026 The noisegeo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "noisegeo/pauli.hpp"

namespace noisegeo {

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Round-trip float formatting used in every CSV.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// '#'-prefixed provenance lines placed at the top of every CSV.
inline std::string csv_header(std::string_view experiment, std::string_view config_hash, std::uint64_t seed) {
    std::ostringstream os;
    os << "# noisegeo " << experiment << "\n# config_hash: " << config_hash << "\n# seed: " << seed << "\n";
    return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Product state from a per-qubit label: '0', '1', '+', '-'; leftmost is qubit 0.
inline CVec product_state(std::string_view label) {
    if (label.empty() || label.size() > static_cast<std::size_t>(kMaxQubits)) throw std::invalid_argument("product_state: bad label");
    const double r = 1 / std::sqrt(2.0);
    CVec v = CVec::Ones(1);
    for (char ch : label) {
        CVec q(2);
        switch (ch) {
            case '0': q << 1, 0; break;
            case '1': q << 0, 1; break;
            case '+': q << r, r; break;
            case '-': q << r, -r; break;
            default: throw std::invalid_argument("product_state: unknown symbol '" + std::string(1, ch) + "'");
        }
        CVec next(v.size() * 2);
        for (Eigen::Index i = 0; i < v.size(); ++i) next.segment(2 * i, 2) = v(i) * q;
        v = next;
    }
    return v;
}

}  // namespace noisegeo
