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

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "noisegeo/geometry.hpp"
#include "noisegeo/linalg.hpp"
#include "noisegeo/parallel.hpp"
#include "noisegeo/spectra.hpp"

namespace noisegeo {

/// A noisy multi-qubit layer. The schedule, its noiseless propagator and its
/// error curves are shared between copies, so long circuits of the same gate
/// cost one propagation.
class HardLayer {
   public:
    HardLayer() = default;

    /// Propagates `schedule` noiselessly; if `expected` is given the result
    /// must match it up to global phase within 1e-8.
    explicit HardLayer(HamiltonianSchedule schedule, std::string label = "hard", std::optional<CMat> expected = std::nullopt)
    {
        auto data = std::make_shared<Data>();
        data->schedule = std::move(schedule);
        data->label = std::move(label);
        data->frames = propagate_noiseless(data->schedule, kReferenceSubsteps);
        data->target = data->frames.back();
        if (expected && !equal_up_to_global_phase(data->target, *expected, 1e-8)) {
            throw std::invalid_argument("HardLayer '" + data->label + "': noiseless propagation does not reach the expected gate");
        }
        data->curves = toggling_frame_curves(data->schedule, data->frames);
        data_ = std::move(data);
    }

    const HamiltonianSchedule& schedule() const { return data_->schedule; }
    /// Noiseless layer unitary U0(T) from the refined propagation.
    const CMat& target() const { return data_->target; }
    const std::vector<ErrorCurve>& curves() const { return data_->curves; }
    const std::string& label() const { return data_->label; }
    int num_qubits() const { return data_->schedule.num_qubits(); }
    const void* identity() const { return data_.get(); }

   private:
    struct Data {
        HamiltonianSchedule schedule;
        std::string label;
        std::vector<CMat> frames;
        CMat target;
        std::vector<ErrorCurve> curves;
    };
    std::shared_ptr<const Data> data_;
};

/// A noiseless layer.
struct EasyLayer {
    CMat unitary;
    std::string label;
};

using Layer = std::variant<HardLayer, EasyLayer>;

class Circuit {
   public:
    Circuit() = default;
    explicit Circuit(int num_qubits) : num_qubits_(num_qubits) {
        if (num_qubits < 1 || num_qubits > kMaxQubits) throw std::invalid_argument("Circuit: qubit count must be in [1, 4]");
    }

    int num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return hilbert_dim(num_qubits_); }
    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t size() const { return layers_.size(); }

    Circuit& add(HardLayer layer) {
        if (layer.num_qubits() != num_qubits_) throw std::invalid_argument("Circuit: hard layer qubit count mismatch");
        layers_.emplace_back(std::move(layer));
        ++hard_count_;
        return *this;
    }
    Circuit& add(EasyLayer layer) {
        const auto d = static_cast<Eigen::Index>(dim());
        if (layer.unitary.rows() != d || layer.unitary.cols() != d) throw std::invalid_argument("Circuit: easy layer dimension mismatch");
        if (!is_unitary(layer.unitary, 1e-10)) throw std::invalid_argument("Circuit: easy layer '" + layer.label + "' is not unitary");
        layers_.emplace_back(std::move(layer));
        return *this;
    }
    Circuit& append(const Circuit& other) {
        if (other.num_qubits_ != num_qubits_) throw std::invalid_argument("Circuit: qubit count mismatch");
        for (const auto& l : other.layers_) std::visit([&](const auto& v) { add(v); }, l);
        return *this;
    }

    std::size_t hard_layer_count() const { return hard_count_; }

    std::vector<const HardLayer*> hard_layers() const {
        std::vector<const HardLayer*> out;
        for (const auto& l : layers_) {
            if (const auto* h = std::get_if<HardLayer>(&l)) out.push_back(h);
        }
        return out;
    }

    /// Ideal unitary: every hard layer replaced by its noiseless U0.
    CMat noiseless_unitary() const {
        const auto d = static_cast<Eigen::Index>(dim());
        CMat u = CMat::Identity(d, d);
        for (const auto& l : layers_) u = layer_unitary(l) * u;
        return u;
    }

    static const CMat& layer_unitary(const Layer& l) {
        if (const auto* h = std::get_if<HardLayer>(&l)) return h->target();
        return std::get<EasyLayer>(l).unitary;
    }

   private:
    int num_qubits_ = 0;
    std::vector<Layer> layers_;
    std::size_t hard_count_ = 0;
};

// ---------------------------------------------------------------------------
// Standard circuits.

/// CNOT (control = qubit 0) compiled as (H on qubit 0), XX(pi/2), (Sdg H ; H Sdg H).
/// Equal to CNOT up to the global phase e^{-i pi/4}.
inline Circuit make_cnot_composite(const HardLayer& xx_layer) {
    if (xx_layer.num_qubits() != 2) throw std::invalid_argument("make_cnot_composite: needs a two-qubit layer");
    const CMat h = single_qubit_gate("H");
    const CMat sdg = single_qubit_gate("Sdg");
    Circuit c(2);
    c.add(EasyLayer{kron<double>(h, CMat::Identity(2, 2)), "H*I"});
    c.add(xx_layer);
    c.add(EasyLayer{kron<double>(sdg * h, h * sdg * h), "SdgH*HSdgH"});
    return c;
}

inline HardLayer make_xx_layer(const PulseShape& pulse, std::vector<NoiseTerm> noise) {
    return HardLayer(make_xx_halfpi(pulse, std::move(noise)), "XX(pi/2)", xx_halfpi_target());
}

inline HardLayer make_iswap_layer(double g, std::size_t intervals, std::vector<NoiseTerm> noise) {
    return HardLayer(make_iswap(g, intervals, std::move(noise)), "iSWAP", iswap_target());
}

inline Circuit make_chain(const HardLayer& layer, std::size_t depth) {
    Circuit c(layer.num_qubits());
    for (std::size_t i = 0; i < depth; ++i) c.add(layer);
    return c;
}

struct InterleavedLayout {
    Circuit circuit;
    std::vector<std::size_t> hadamard_slots;  // number of CNOTs preceding each Hadamard
    std::vector<int> hadamard_qubits;
    std::uint64_t seed = 0;
};

/// `cnot_layers` CNOT composites with `hadamards` single Hadamards inserted at
/// seeded uniformly random positions on random qubits.
inline InterleavedLayout make_cnot_hadamard_circuit(const HardLayer& xx_layer, std::size_t cnot_layers, std::size_t hadamards,
                                                    std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, {kLayoutStream}));
    std::uniform_int_distribution<std::size_t> slot(0, cnot_layers);
    std::uniform_int_distribution<int> qubit(0, 1);
    InterleavedLayout out{Circuit(2), {}, {}, seed};
    for (std::size_t k = 0; k < hadamards; ++k) {
        out.hadamard_slots.push_back(slot(rng));
        out.hadamard_qubits.push_back(qubit(rng));
    }
    std::vector<std::size_t> order(hadamards);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.hadamard_slots[a] < out.hadamard_slots[b]; });
    const Circuit cnot = make_cnot_composite(xx_layer);
    std::size_t next = 0;
    for (std::size_t layer = 0; layer <= cnot_layers; ++layer) {
        while (next < order.size() && out.hadamard_slots[order[next]] == layer) {
            const int q = out.hadamard_qubits[order[next]];
            out.circuit.add(EasyLayer{single_qubit_clifford("H", q, 2), q == 0 ? "H*I" : "I*H"});
            ++next;
        }
        if (layer < cnot_layers) out.circuit.append(cnot);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Noise realizations per run.

enum class RealizationMode {
    kSharedPerRun,       // quasi-static values drawn once per run and reused by every layer
    kIndependentPerLayer,
};

/// One realization per hard layer for run `run`. In shared mode every hard
/// layer draws from the same stream, so quasi-static noise on identical
/// schedules yields identical values; time-correlated processes restart at
/// each layer.
inline std::vector<NoiseRealization> draw_realizations(const Circuit& c, std::uint64_t master, std::uint64_t run,
                                                       RealizationMode mode = RealizationMode::kSharedPerRun) {
    std::vector<NoiseRealization> out;
    std::uint64_t index = 0;
    for (const HardLayer* h : c.hard_layers()) {
        const std::uint64_t layer = mode == RealizationMode::kSharedPerRun ? 0 : index;
        out.push_back(synthesize_realization(h->schedule(), derive_seed(master, {kNoiseStream, run, layer})));
        ++index;
    }
    return out;
}

inline std::vector<NoiseRealization> mean_realizations(const Circuit& c) {
    std::vector<NoiseRealization> out;
    for (const HardLayer* h : c.hard_layers()) out.push_back(mean_realization(h->schedule()));
    return out;
}

// ---------------------------------------------------------------------------
// Error front propagation.

/// R_lo of one hard layer; first order unless `second` is set.
inline ErrorVector layer_local_error(const HardLayer& layer, const NoiseRealization& noise, bool second = false) {
    if (layer.curves().empty()) throw std::invalid_argument("layer_local_error: hard layer has no noise terms");
    check_realization(layer.schedule(), noise);
    ErrorVector r = first_order_error(layer.curves(), noise);
    if (second) r += second_order_error(layer.curves(), noise);
    return r;
}

inline ErrorVector layer_local_error(const Layer& layer, const NoiseRealization& noise, bool second = false) {
    const auto* h = std::get_if<HardLayer>(&layer);
    if (h == nullptr) throw std::invalid_argument("layer_local_error: easy layers carry no error");
    return layer_local_error(*h, noise, second);
}

/// Components of C^dag (R . sigma) C.
inline ErrorVector conjugate_error(const ErrorVector& r, const CMat& c) {
    return ErrorVector::from_operator(c.adjoint() * r.to_operator() * c);
}

struct ErrorTrajectory {
    std::vector<ErrorVector> local_steps;  // R_lo per hard layer
    std::vector<ErrorVector> steps;        // front-propagated R^(i)
    std::vector<ErrorVector> cumulative;   // sum_{k <= i} R^(k)
    std::vector<double> distances;         // ||cumulative[i]||

    std::size_t depth() const { return steps.size(); }
};

/// Moves every layer's error to the front of the circuit. The error of hard
/// layer i precedes its gate, so it is conjugated by the noiseless product of
/// all layers strictly before it.
inline ErrorTrajectory propagate_error_front(const Circuit& c, const std::vector<NoiseRealization>& realizations,
                                             bool second = false) {
    if (realizations.size() != c.hard_layer_count()) {
        throw std::invalid_argument("propagate_error_front: expected " + std::to_string(c.hard_layer_count()) +
                                    " realizations, got " + std::to_string(realizations.size()));
    }
    const auto d = static_cast<Eigen::Index>(c.dim());
    ErrorTrajectory t;
    CMat front = CMat::Identity(d, d);
    ErrorVector total(c.num_qubits());
    std::size_t index = 0;
    for (const auto& l : c.layers()) {
        if (const auto* h = std::get_if<HardLayer>(&l)) {
            ErrorVector local = layer_local_error(*h, realizations[index++], second);
            ErrorVector step = conjugate_error(local, front);
            total += step;
            t.local_steps.push_back(std::move(local));
            t.steps.push_back(std::move(step));
            t.cumulative.push_back(total);
            t.distances.push_back(total.norm());
        }
        front = Circuit::layer_unitary(l) * front;
    }
    return t;
}

struct ErrorPhase {
    ErrorVector phase;
    double distance = 0;
};

inline ErrorPhase total_error_phase(const ErrorTrajectory& t) {
    if (t.steps.empty()) throw std::invalid_argument("total_error_phase: empty trajectory");
    return {t.cumulative.back(), t.cumulative.back().norm()};
}

/// depth, distance, then the cumulative components of the top-k axes ranked by
/// their largest magnitude along the trajectory.
inline void write_trajectory_csv(std::ostream& out, const ErrorTrajectory& t, std::size_t top_k) {
    if (t.steps.empty()) throw std::invalid_argument("write_trajectory_csv: empty trajectory");
    const int m = t.steps.front().num_qubits();
    const std::size_t axes = t.steps.front().size();
    std::vector<double> peak(axes, 0.0);
    for (const auto& v : t.cumulative) {
        for (std::size_t p = 0; p < axes; ++p) peak[p] = std::max(peak[p], std::abs(v.components()(static_cast<Eigen::Index>(p))));
    }
    std::vector<std::size_t> order(axes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return peak[a] > peak[b]; });
    order.resize(std::min(top_k, axes));

    out << "depth,distance";
    for (auto p : order) out << "," << PauliString(m, p + 1).label();
    out << "\n";
    char buf[40];
    for (std::size_t i = 0; i < t.depth(); ++i) {
        out << (i + 1);
        std::snprintf(buf, sizeof buf, "%.17g", t.distances[i]);
        out << "," << buf;
        for (auto p : order) {
            std::snprintf(buf, sizeof buf, "%.17g", t.cumulative[i].components()(static_cast<Eigen::Index>(p)));
            out << "," << buf;
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Exact simulation.

/// Memoizes noisy layer propagators keyed on (layer, realization). Safe to
/// share between threads.
class NoisyUnitaryCache {
   public:
    CMat get(const HardLayer& layer, const NoiseRealization& noise) {
        {
            std::lock_guard lock(mutex_);
            for (const auto& e : entries_) {
                if (e.layer == layer.identity() && e.noise == noise) return e.unitary;
            }
        }
        CMat u = propagate_noisy(layer.schedule(), noise, kReferenceSubsteps);
        std::lock_guard lock(mutex_);
        entries_.push_back({layer.identity(), noise, u});
        return u;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

   private:
    struct Entry {
        const void* layer;
        NoiseRealization noise;
        CMat unitary;
    };
    mutable std::mutex mutex_;
    std::vector<Entry> entries_;
};

/// Product of the noisy layer propagators, in circuit order.
inline CMat simulate_exact_unitary(const Circuit& c, const std::vector<NoiseRealization>& realizations,
                                   NoisyUnitaryCache* cache = nullptr) {
    if (realizations.size() != c.hard_layer_count()) throw std::invalid_argument("simulate_exact: one realization per hard layer required");
    const auto d = static_cast<Eigen::Index>(c.dim());
    CMat u = CMat::Identity(d, d);
    std::size_t index = 0;
    for (const auto& l : c.layers()) {
        if (const auto* h = std::get_if<HardLayer>(&l)) {
            const auto& noise = realizations[index++];
            u = (cache ? cache->get(*h, noise) : propagate_noisy(h->schedule(), noise, kReferenceSubsteps)) * u;
        } else {
            u = std::get<EasyLayer>(l).unitary * u;
        }
    }
    return u;
}

inline CVec simulate_exact(const Circuit& c, const std::vector<NoiseRealization>& realizations, const CVec& initial,
                           NoisyUnitaryCache* cache = nullptr) {
    if (initial.size() != static_cast<Eigen::Index>(c.dim())) throw std::invalid_argument("simulate_exact: state dimension mismatch");
    if (std::abs(initial.norm() - 1) > 1e-9) throw std::invalid_argument("simulate_exact: initial state is not normalized");
    CVec psi = initial;
    std::size_t index = 0;
    if (realizations.size() != c.hard_layer_count()) throw std::invalid_argument("simulate_exact: one realization per hard layer required");
    for (const auto& l : c.layers()) {
        if (const auto* h = std::get_if<HardLayer>(&l)) {
            const auto& noise = realizations[index++];
            psi = (cache ? cache->get(*h, noise) : propagate_noisy(h->schedule(), noise, kReferenceSubsteps)) * psi;
        } else {
            psi = std::get<EasyLayer>(l).unitary * psi;
        }
    }
    return psi;
}

/// Computational basis state |bits>, leftmost character = qubit 0.
inline CVec basis_state(std::string_view bits) {
    if (bits.empty() || bits.size() > static_cast<std::size_t>(kMaxQubits)) throw std::invalid_argument("basis_state: bad label");
    CVec v = CVec::Zero(static_cast<Eigen::Index>(std::size_t{1} << bits.size()));
    std::size_t index = 0;
    for (char ch : bits) {
        if (ch != '0' && ch != '1') throw std::invalid_argument("basis_state: label must be binary");
        index = (index << 1) | static_cast<std::size_t>(ch - '0');
    }
    v(static_cast<Eigen::Index>(index)) = 1;
    return v;
}

}  // namespace noisegeo
