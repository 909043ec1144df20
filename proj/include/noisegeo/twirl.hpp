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

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisegeo/circuit.hpp"

namespace noisegeo {

/// One Pauli twirl per hard layer, in circuit order.
struct TwirlAssignment {
    int num_qubits = 0;
    std::vector<PauliString> twirls;
    std::uint64_t master_seed = 0;
    std::uint64_t run = 0;

    bool operator==(const TwirlAssignment& o) const { return num_qubits == o.num_qubits && twirls == o.twirls; }
};

/// Tc = U0 T^dag U0^dag for a hard layer with noiseless unitary U0.
inline CMat twirl_correction(const HardLayer& layer, const PauliString& t) {
    const CMat p = pauli_matrix<double>(t);
    return layer.target() * p.adjoint() * layer.target().adjoint();
}

inline std::vector<PauliString> default_twirl_set(int num_qubits) { return all_paulis(num_qubits); }

inline std::vector<PauliString> parse_twirl_set(const std::vector<std::string>& labels) {
    std::vector<PauliString> out;
    for (const auto& l : labels) out.push_back(PauliString::parse(l));
    return out;
}

/// Uniform independent draw per hard layer; layer i of run r uses the stream
/// derive_seed(master, {twirl, r, i}), so any prefix of a longer circuit sees
/// the same twirls.
inline TwirlAssignment sample_twirls(const Circuit& c, std::uint64_t master_seed, std::uint64_t run,
                                     const std::vector<PauliString>& twirl_set) {
    if (twirl_set.empty()) throw std::invalid_argument("sample_twirls: empty twirl set");
    for (const auto& t : twirl_set) {
        if (t.num_qubits() != c.num_qubits()) throw std::invalid_argument("sample_twirls: twirl qubit count mismatch");
    }
    TwirlAssignment a{c.num_qubits(), {}, master_seed, run};
    for (std::size_t i = 0; i < c.hard_layer_count(); ++i) {
        std::mt19937_64 rng(derive_seed(master_seed, {kTwirlStream, run, i}));
        std::uniform_int_distribution<std::size_t> pick(0, twirl_set.size() - 1);
        a.twirls.push_back(twirl_set[pick(rng)]);
    }
    return a;
}

inline TwirlAssignment sample_twirls(const Circuit& c, std::uint64_t master_seed, std::uint64_t run = 0) {
    return sample_twirls(c, master_seed, run, default_twirl_set(c.num_qubits()));
}

/// Folds T before and Tc after each hard layer into the neighbouring easy
/// layers, creating easy layers only where none exist. Identity twirls leave
/// the circuit untouched.
inline Circuit apply_twirls(const Circuit& c, const TwirlAssignment& a) {
    if (a.twirls.size() != c.hard_layer_count()) {
        throw std::invalid_argument("apply_twirls: assignment covers " + std::to_string(a.twirls.size()) + " layers, circuit has " +
                                    std::to_string(c.hard_layer_count()));
    }
    if (a.num_qubits != c.num_qubits()) throw std::invalid_argument("apply_twirls: qubit count mismatch");

    std::vector<Layer> out;
    std::optional<EasyLayer> pending;  // correction waiting to be merged into the next easy layer
    std::size_t index = 0;
    auto flush = [&] {
        if (pending) out.emplace_back(std::move(*pending));
        pending.reset();
    };
    for (const auto& l : c.layers()) {
        if (const auto* e = std::get_if<EasyLayer>(&l)) {
            if (pending) {
                out.emplace_back(EasyLayer{e->unitary * pending->unitary, e->label + "." + pending->label});
                pending.reset();
            } else {
                out.emplace_back(*e);
            }
            continue;
        }
        const auto& h = std::get<HardLayer>(l);
        const PauliString& t = a.twirls[index++];
        if (t.is_identity()) {
            flush();
            out.emplace_back(h);
            continue;
        }
        const CMat tm = pauli_matrix<double>(t);
        const std::string tlabel = "T[" + t.label() + "]";
        if (pending) {
            pending->unitary = tm * pending->unitary;
            pending->label = tlabel + "." + pending->label;
            flush();
        } else if (!out.empty() && std::holds_alternative<EasyLayer>(out.back())) {
            auto& prev = std::get<EasyLayer>(out.back());
            prev.unitary = tm * prev.unitary;
            prev.label = tlabel + "." + prev.label;
        } else {
            out.emplace_back(EasyLayer{tm, tlabel});
        }
        out.emplace_back(h);
        pending = EasyLayer{twirl_correction(h, t), "Tc[" + t.label() + "]"};
    }
    flush();

    Circuit twirled(c.num_qubits());
    for (auto& l : out) std::visit([&](auto& v) { twirled.add(std::move(v)); }, l);
    return twirled;
}

/// T^dag (R . sigma) T: component j flips sign iff T anticommutes with sigma_j.
inline ErrorVector dressed_error(const ErrorVector& r, const PauliString& t) {
    if (t.num_qubits() != r.num_qubits()) throw std::invalid_argument("dressed_error: qubit count mismatch");
    ErrorVector out = r;
    for (std::size_t p = 0; p < r.size(); ++p) {
        if (!commutes(t, r.axis(p))) out.components()(static_cast<Eigen::Index>(p)) = -out.components()(static_cast<Eigen::Index>(p));
    }
    return out;
}

inline constexpr std::size_t kMaxEnumeratedAssignments = 4096;

/// Every assignment of `twirl_set` to the hard layers, equally weighted;
/// the first hard layer varies slowest.
inline std::vector<TwirlAssignment> enumerate_twirl_assignments(const Circuit& c, const std::vector<PauliString>& twirl_set) {
    if (twirl_set.empty()) throw std::invalid_argument("enumerate_twirl_assignments: empty twirl set");
    const std::size_t layers = c.hard_layer_count();
    std::size_t total = 1;
    for (std::size_t i = 0; i < layers; ++i) {
        if (total > kMaxEnumeratedAssignments / twirl_set.size()) {
            throw std::invalid_argument("enumerate_twirl_assignments: more than " + std::to_string(kMaxEnumeratedAssignments) +
                                        " assignments");
        }
        total *= twirl_set.size();
    }
    std::vector<TwirlAssignment> out;
    out.reserve(total);
    for (std::size_t n = 0; n < total; ++n) {
        TwirlAssignment a{c.num_qubits(), std::vector<PauliString>(layers, PauliString::identity(c.num_qubits())), 0, n};
        std::size_t rest = n;
        for (std::size_t i = layers; i-- > 0;) {
            a.twirls[i] = twirl_set[rest % twirl_set.size()];
            rest /= twirl_set.size();
        }
        out.push_back(std::move(a));
    }
    return out;
}

inline std::vector<TwirlAssignment> enumerate_twirl_assignments(const Circuit& c) {
    return enumerate_twirl_assignments(c, default_twirl_set(c.num_qubits()));
}

inline nlohmann::json to_json(const TwirlAssignment& a) {
    nlohmann::json layers = nlohmann::json::object();
    for (std::size_t i = 0; i < a.twirls.size(); ++i) layers[std::to_string(i)] = a.twirls[i].label();
    return {{"num_qubits", a.num_qubits}, {"master_seed", a.master_seed}, {"run", a.run}, {"layers", layers}};
}

inline TwirlAssignment twirl_assignment_from_json(const nlohmann::json& j) {
    TwirlAssignment a;
    a.num_qubits = j.at("num_qubits").get<int>();
    a.master_seed = j.value("master_seed", std::uint64_t{0});
    a.run = j.value("run", std::uint64_t{0});
    const auto& layers = j.at("layers");
    a.twirls.assign(layers.size(), PauliString::identity(a.num_qubits));
    for (auto it = layers.begin(); it != layers.end(); ++it) {
        const std::size_t i = std::stoul(it.key());
        if (i >= a.twirls.size()) throw std::invalid_argument("twirl assignment JSON: layer index out of range");
        a.twirls[i] = PauliString::parse(it.value().get<std::string>());
        if (a.twirls[i].num_qubits() != a.num_qubits) throw std::invalid_argument("twirl assignment JSON: qubit count mismatch");
    }
    return a;
}

}  // namespace noisegeo
