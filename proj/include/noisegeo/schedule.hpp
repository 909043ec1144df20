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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "noisegeo/linalg.hpp"
#include "noisegeo/pauli.hpp"

namespace noisegeo {

inline constexpr std::size_t kMinSamples = 16;
inline constexpr std::size_t kDefaultIntervals = 512;
/// Refinement used by the exact noisy reference propagation.
inline constexpr int kReferenceSubsteps = 4;

/// Uniform grid t_k = k * dt on [0, T], k = 0..intervals.
class TimeGrid {
   public:
    TimeGrid() = default;
    TimeGrid(double duration, std::size_t intervals) : duration_(duration), intervals_(intervals) {
        if (!(duration > 0) || !std::isfinite(duration)) throw std::invalid_argument("TimeGrid: duration must be positive");
        if (intervals + 1 < kMinSamples) throw std::invalid_argument("TimeGrid: at least 16 samples required");
    }

    double duration() const { return duration_; }
    std::size_t intervals() const { return intervals_; }
    std::size_t size() const { return intervals_ + 1; }
    double dt() const { return duration_ / static_cast<double>(intervals_); }
    double time(std::size_t k) const { return static_cast<double>(k) * dt(); }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

   private:
    double duration_ = 0;
    std::size_t intervals_ = 0;
};

/// Trapezoidal integral of samples on a uniform grid.
inline double trapezoid(std::span<const double> f, double dt) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
    return s * dt;
}

/// Running trapezoidal integral, out[0] = 0.
inline std::vector<double> cumulative_trapezoid(std::span<const double> f, double dt) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 1; k < f.size(); ++k) out[k] = out[k - 1] + 0.5 * dt * (f[k - 1] + f[k]);
    return out;
}

/// Sampled control amplitude Omega(t_k) in angular-frequency units.
class PulseShape {
   public:
    PulseShape() = default;
    PulseShape(TimeGrid grid, std::vector<double> amplitude) : grid_(grid), amplitude_(std::move(amplitude)) {
        if (amplitude_.size() != grid_.size()) throw std::invalid_argument("PulseShape: sample count does not match grid");
        for (double a : amplitude_) {
            if (!std::isfinite(a)) throw std::invalid_argument("PulseShape: non-finite amplitude");
        }
    }

    static PulseShape from_function(const TimeGrid& grid, const std::function<double(double)>& f) {
        std::vector<double> a(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) a[k] = f(grid.time(k));
        return PulseShape(grid, std::move(a));
    }

    static PulseShape constant(const TimeGrid& grid, double value) {
        return PulseShape(grid, std::vector<double>(grid.size(), value));
    }

    /// A (1 - cos(2 pi t / T)) with A fixed so the trapezoidal area equals `area`.
    static PulseShape cosine(const TimeGrid& grid, double area) {
        const double period = grid.duration();
        return from_function(grid, [period](double t) { return 1.0 - std::cos(2.0 * std::numbers::pi * t / period); })
            .rescaled_to_area(area);
    }

    const TimeGrid& grid() const { return grid_; }
    std::span<const double> amplitude() const { return amplitude_; }
    double operator[](std::size_t k) const { return amplitude_[k]; }
    std::size_t size() const { return amplitude_.size(); }

    double area() const { return trapezoid(amplitude_, grid_.dt()); }

    PulseShape rescaled_to_area(double target) const {
        const double a = area();
        if (std::abs(a) < 1e-300) throw std::invalid_argument("PulseShape: cannot rescale a zero-area pulse");
        std::vector<double> out(amplitude_);
        for (double& v : out) v *= target / a;
        return PulseShape(grid_, std::move(out));
    }

    /// Linear interpolation inside interval k at fraction u in [0, 1].
    double interpolate(std::size_t k, double u) const {
        return (1.0 - u) * amplitude_[k] + u * amplitude_[std::min(k + 1, amplitude_.size() - 1)];
    }

   private:
    TimeGrid grid_;
    std::vector<double> amplitude_;
};

/// Parses two-column (time, amplitude) text. Columns may be separated by
/// whitespace or commas; '#' starts a comment.
inline PulseShape parse_pulse(std::istream& in, const std::string& source = "<stream>") {
    std::vector<double> times;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (char& c : line) {
            if (c == ',' || c == '\t' || c == ';') c = ' ';
        }
        std::istringstream row(line);
        std::vector<double> cols;
        std::string tok;
        while (row >> tok) {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) {
                throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": non-numeric value '" + tok + "'");
            }
            cols.push_back(v);
        }
        if (cols.empty()) continue;
        if (cols.size() != 2) {
            throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": expected 2 columns, got " +
                                        std::to_string(cols.size()));
        }
        times.push_back(cols[0]);
        values.push_back(cols[1]);
    }
    if (times.size() < kMinSamples) {
        throw std::invalid_argument(source + ": pulse needs at least 16 samples, got " + std::to_string(times.size()));
    }
    const double t0 = times.front();
    const double duration = times.back() - t0;
    if (!(duration > 0)) throw std::invalid_argument(source + ": time column must be strictly increasing");
    const double dt = duration / static_cast<double>(times.size() - 1);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double step = times[k] - times[k - 1];
        if (std::abs(step - dt) > 1e-6 * dt) {
            throw std::invalid_argument(source + ": non-uniform time grid near sample " + std::to_string(k));
        }
    }
    return PulseShape(TimeGrid(duration, times.size() - 1), std::move(values));
}

inline PulseShape import_pulse(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open pulse file " + path.string());
    return parse_pulse(in, path.string());
}

inline void write_pulse(std::ostream& out, const PulseShape& pulse) {
    char buf[64];
    for (std::size_t k = 0; k < pulse.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", pulse.grid().time(k), pulse[k]);
        out << buf;
    }
}

// Noise processes. Every process carries a constant mean; the fluctuating part
// is described by the process parameters.
struct QuasiStatic {
    double mean = 0;
    double std = 0;
};
struct OrnsteinUhlenbeck {
    double sigma = 0;
    double tau_c = 1;
    double mean = 0;
};
struct WhiteNoise {
    double level = 0;  // two-sided PSD S0
    double mean = 0;
};
struct TabulatedPsd {
    std::vector<double> omega;
    std::vector<double> density;
    double mean = 0;
};
using NoiseProcess = std::variant<QuasiStatic, OrnsteinUhlenbeck, WhiteNoise, TabulatedPsd>;

inline double process_mean(const NoiseProcess& p) {
    return std::visit([](const auto& v) { return v.mean; }, p);
}

inline bool is_deterministic(const NoiseProcess& p) {
    if (const auto* q = std::get_if<QuasiStatic>(&p)) return q->std == 0;
    if (const auto* o = std::get_if<OrnsteinUhlenbeck>(&p)) return o->sigma == 0;
    if (const auto* w = std::get_if<WhiteNoise>(&p)) return w->level == 0;
    const auto& t = std::get<TabulatedPsd>(p);
    for (double s : t.density) {
        if (s != 0) return false;
    }
    return true;
}

inline void validate_process(const NoiseProcess& p) {
    auto bad = [](const char* what) { throw std::invalid_argument(std::string("noise process: ") + what); };
    if (const auto* q = std::get_if<QuasiStatic>(&p)) {
        if (!(q->std >= 0)) bad("negative standard deviation");
    } else if (const auto* o = std::get_if<OrnsteinUhlenbeck>(&p)) {
        if (!(o->sigma >= 0)) bad("negative OU sigma");
        if (!(o->tau_c > 0)) bad("OU correlation time must be positive");
    } else if (const auto* w = std::get_if<WhiteNoise>(&p)) {
        if (!(w->level >= 0)) bad("negative white-noise level");
    } else {
        const auto& t = std::get<TabulatedPsd>(p);
        if (t.omega.size() != t.density.size() || t.omega.size() < 2) bad("tabulated PSD needs matching omega/density columns");
        for (std::size_t k = 0; k < t.omega.size(); ++k) {
            if (!(t.density[k] >= 0)) bad("negative tabulated PSD value");
            if (k > 0 && !(t.omega[k] > t.omega[k - 1])) bad("tabulated PSD omega grid must increase");
        }
    }
}

struct Additive {};
/// Noise amplitude proportional to control channel `control`: eps(t) = eps~(t) Omega_c(t).
struct Multiplicative {
    std::size_t control = 0;
};
using NoiseCoupling = std::variant<Additive, Multiplicative>;

struct NoiseTerm {
    PauliSum op;
    NoiseCoupling coupling = Additive{};
    NoiseProcess process = QuasiStatic{};
};

struct ControlTerm {
    PulseShape pulse;
    CMat op;
    std::string label;
};

/// H(t) = sum_c Omega_c(t) G_c + sum_i eps_i(t) dH_i on a shared grid.
class HamiltonianSchedule {
   public:
    HamiltonianSchedule() = default;
    HamiltonianSchedule(int num_qubits, TimeGrid grid, std::vector<ControlTerm> controls, std::vector<NoiseTerm> noise = {})
        : num_qubits_(num_qubits), grid_(grid), controls_(std::move(controls)), noise_(std::move(noise)) {
        validate();
    }

    int num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return hilbert_dim(num_qubits_); }
    const TimeGrid& grid() const { return grid_; }
    double duration() const { return grid_.duration(); }
    const std::vector<ControlTerm>& controls() const { return controls_; }
    const std::vector<NoiseTerm>& noise() const { return noise_; }

    HamiltonianSchedule with_noise(std::vector<NoiseTerm> noise) const {
        return HamiltonianSchedule(num_qubits_, grid_, controls_, std::move(noise));
    }

    /// Noise amplitude profile C(t_k): 1 for additive terms, Omega_c(t_k) for multiplicative.
    std::vector<double> noise_amplitude(std::size_t noise_index) const {
        const auto& term = noise_.at(noise_index);
        if (const auto* m = std::get_if<Multiplicative>(&term.coupling)) {
            auto a = controls_[m->control].pulse.amplitude();
            return {a.begin(), a.end()};
        }
        return std::vector<double>(grid_.size(), 1.0);
    }

    void validate() const {
        if (num_qubits_ < 1 || num_qubits_ > kMaxQubits) throw std::invalid_argument("schedule: qubit count must be in [1, 4]");
        const auto d = static_cast<Eigen::Index>(dim());
        for (const auto& c : controls_) {
            if (c.op.rows() != d || c.op.cols() != d) throw std::invalid_argument("schedule: control operator has wrong dimension");
            if (!is_hermitian(c.op)) throw std::invalid_argument("schedule: control operator '" + c.label + "' is not Hermitian");
            if (!(c.pulse.grid() == grid_)) throw std::invalid_argument("schedule: pulse grid differs from schedule grid");
        }
        for (const auto& n : noise_) {
            if (n.op.num_qubits() != num_qubits_) throw std::invalid_argument("schedule: noise operator has wrong qubit count");
            validate_process(n.process);
            if (const auto* m = std::get_if<Multiplicative>(&n.coupling); m && m->control >= controls_.size()) {
                throw std::invalid_argument("schedule: multiplicative noise references a missing control");
            }
        }
    }

   private:
    int num_qubits_ = 0;
    TimeGrid grid_;
    std::vector<ControlTerm> controls_;
    std::vector<NoiseTerm> noise_;
};

/// Sampled noise eps~_i(t_k) for each noise term of a schedule. Multiplicative
/// coupling is applied by the consumer, not stored here.
struct NoiseRealization {
    std::vector<std::vector<double>> samples;
    std::uint64_t seed = 0;

    static NoiseRealization constant(const HamiltonianSchedule& s, const std::vector<double>& values) {
        if (values.size() != s.noise().size()) throw std::invalid_argument("realization: one value per noise term required");
        NoiseRealization r;
        for (double v : values) r.samples.emplace_back(s.grid().size(), v);
        return r;
    }

    static NoiseRealization zero(const HamiltonianSchedule& s) {
        return constant(s, std::vector<double>(s.noise().size(), 0.0));
    }

    NoiseRealization scaled(double factor) const {
        NoiseRealization r = *this;
        for (auto& row : r.samples) {
            for (double& v : row) v *= factor;
        }
        return r;
    }

    friend bool operator==(const NoiseRealization& a, const NoiseRealization& b) { return a.samples == b.samples; }
};

inline void check_realization(const HamiltonianSchedule& s, const NoiseRealization& r) {
    if (r.samples.size() != s.noise().size()) {
        throw std::invalid_argument("realization has " + std::to_string(r.samples.size()) + " noise rows, schedule has " +
                                    std::to_string(s.noise().size()));
    }
    for (const auto& row : r.samples) {
        if (row.size() != s.grid().size()) throw std::invalid_argument("realization grid does not match schedule grid");
    }
}

namespace detail {

struct PropagationFrame {
    std::vector<CMat> noise_ops;
};

inline CMat hamiltonian_at(const HamiltonianSchedule& s, const PropagationFrame& frame, const NoiseRealization* noise,
                           std::size_t k, double u) {
    const auto d = static_cast<Eigen::Index>(s.dim());
    CMat h = CMat::Zero(d, d);
    for (const auto& c : s.controls()) h += c.pulse.interpolate(k, u) * c.op;
    if (noise != nullptr) {
        for (std::size_t i = 0; i < s.noise().size(); ++i) {
            const auto& row = noise->samples[i];
            double eps = (1.0 - u) * row[k] + u * row[std::min(k + 1, row.size() - 1)];
            if (const auto* m = std::get_if<Multiplicative>(&s.noise()[i].coupling)) {
                eps *= s.controls()[m->control].pulse.interpolate(k, u);
            }
            if (eps != 0) h += eps * frame.noise_ops[i];
        }
    }
    return h;
}

}  // namespace detail

/// Primary propagator U0(t_k) at every grid point.
///
/// Each interval is split into `substeps` pieces; each piece uses the exact
/// exponential of H at its midpoint with linearly interpolated amplitudes, so
/// the scheme is unitary and second-order accurate in the step h = dt/substeps.
inline std::vector<CMat> propagate_noiseless(const HamiltonianSchedule& s, int substeps = 1) {
    s.validate();
    if (substeps < 1) throw std::invalid_argument("propagate_noiseless: substeps must be >= 1");
    const auto d = static_cast<Eigen::Index>(s.dim());
    const TimeGrid& g = s.grid();
    std::vector<CMat> out;
    out.reserve(g.size());
    out.push_back(CMat::Identity(d, d));

    if (s.controls().size() == 1) {
        // A single control term commutes with itself at all times, so
        // U0(t) = exp(-i theta(t) G) with theta the piecewise-linear area.
        const auto& c = s.controls().front();
        Eigen::SelfAdjointEigenSolver<CMat> es(c.op);
        const CMat& v = es.eigenvectors();
        const Eigen::VectorXd& w = es.eigenvalues();
        double theta = 0;
        for (std::size_t k = 0; k + 1 < g.size(); ++k) {
            theta += 0.5 * g.dt() * (c.pulse[k] + c.pulse[k + 1]);
            Eigen::VectorXcd ph(w.size());
            for (Eigen::Index j = 0; j < w.size(); ++j) ph(j) = std::polar(1.0, -w(j) * theta);
            out.push_back(v * ph.asDiagonal() * v.adjoint());
        }
        return out;
    }

    detail::PropagationFrame frame;
    const double h = g.dt() / substeps;
    CMat u = CMat::Identity(d, d);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        for (int sub = 0; sub < substeps; ++sub) {
            double frac = (sub + 0.5) / substeps;
            u = expm_hermitian(detail::hamiltonian_at(s, frame, nullptr, k, frac), h) * u;
        }
        out.push_back(u);
    }
    return out;
}

/// Full noisy propagator U(T) for one realization (the exact reference).
inline CMat propagate_noisy(const HamiltonianSchedule& s, const NoiseRealization& noise, int substeps = kReferenceSubsteps) {
    s.validate();
    check_realization(s, noise);
    if (substeps < 1) throw std::invalid_argument("propagate_noisy: substeps must be >= 1");
    detail::PropagationFrame frame;
    for (const auto& n : s.noise()) frame.noise_ops.push_back(n.op.matrix());
    const auto d = static_cast<Eigen::Index>(s.dim());
    const TimeGrid& g = s.grid();
    const double h = g.dt() / substeps;
    CMat u = CMat::Identity(d, d);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        for (int sub = 0; sub < substeps; ++sub) {
            double frac = (sub + 0.5) / substeps;
            u = expm_hermitian(detail::hamiltonian_at(s, frame, &noise, k, frac), h) * u;
        }
    }
    return u;
}

/// Noiseless U0(T) on the same refined grid as propagate_noisy.
inline CMat reference_noiseless_unitary(const HamiltonianSchedule& s, int substeps = kReferenceSubsteps) {
    return propagate_noiseless(s, substeps).back();
}

// ---------------------------------------------------------------------------
// Standard gates.

inline CMat pauli_op(std::string_view label) { return pauli_matrix<double>(PauliString::parse(label)); }

/// exp(-i (pi/4) XX).
inline CMat xx_halfpi_target() { return expm_hermitian(pauli_op("XX"), std::numbers::pi / 4); }

/// exp(-i (pi/4)(XX + YY)): the gate generated by g(XX + YY) over T = pi/(4g).
/// It maps |01> to -i|10>, the conjugate phase convention of the usual iSWAP.
inline CMat iswap_target() { return expm_hermitian(pauli_op("XX") + pauli_op("YY"), std::numbers::pi / 4); }

/// CNOT with qubit 0 (leftmost) as control.
inline CMat cnot_matrix() {
    CMat m = CMat::Zero(4, 4);
    m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
    return m;
}

inline CMat single_qubit_gate(std::string_view name) {
    using C = std::complex<double>;
    const double r = 1.0 / std::sqrt(2.0);
    CMat g(2, 2);
    if (name == "I") {
        g << 1, 0, 0, 1;
    } else if (name == "X") {
        g << 0, 1, 1, 0;
    } else if (name == "Y") {
        g << 0, C(0, -1), C(0, 1), 0;
    } else if (name == "Z") {
        g << 1, 0, 0, -1;
    } else if (name == "H") {
        g << r, r, r, -r;
    } else if (name == "S") {
        g << 1, 0, 0, C(0, 1);
    } else if (name == "Sdg") {
        g << 1, 0, 0, C(0, -1);
    } else if (name == "SX") {
        g << C(0.5, 0.5), C(0.5, -0.5), C(0.5, -0.5), C(0.5, 0.5);
    } else if (name == "SXdg") {
        g << C(0.5, -0.5), C(0.5, 0.5), C(0.5, 0.5), C(0.5, -0.5);
    } else {
        throw std::invalid_argument("unknown single-qubit Clifford '" + std::string(name) + "'");
    }
    return g;
}

/// Single-qubit Clifford `name` on `qubit` (0 = leftmost), identity elsewhere.
inline CMat single_qubit_clifford(std::string_view name, int qubit, int num_qubits) {
    if (qubit < 0 || qubit >= num_qubits) throw std::invalid_argument("single_qubit_clifford: qubit out of range");
    CMat out = CMat::Identity(1, 1);
    for (int q = 0; q < num_qubits; ++q) out = kron<double>(out, q == qubit ? single_qubit_gate(name) : CMat::Identity(2, 2));
    return out;
}

/// XX(pi/2) driven by H = Omega(t)/2 XX; the pulse is rescaled to area pi/2.
inline HamiltonianSchedule make_xx_halfpi(const PulseShape& pulse, std::vector<NoiseTerm> noise = {}) {
    return HamiltonianSchedule(2, pulse.grid(),
                               {{pulse.rescaled_to_area(std::numbers::pi / 2), 0.5 * pauli_op("XX"), "XX"}},
                               std::move(noise));
}

/// Constant g(XX + YY) for T = pi/(4g).
inline HamiltonianSchedule make_iswap(double g, std::size_t intervals = kDefaultIntervals, std::vector<NoiseTerm> noise = {}) {
    if (!(g > 0)) throw std::invalid_argument("make_iswap: coupling must be positive");
    TimeGrid grid(std::numbers::pi / (4 * g), intervals);
    return HamiltonianSchedule(2, grid, {{PulseShape::constant(grid, g), pauli_op("XX") + pauli_op("YY"), "XX+YY"}},
                               std::move(noise));
}

/// One-qubit rotation about X by `angle`, driven by H = Omega(t)/2 X.
inline HamiltonianSchedule make_x_rotation(const PulseShape& pulse, double angle, std::vector<NoiseTerm> noise = {}) {
    return HamiltonianSchedule(1, pulse.grid(), {{pulse.rescaled_to_area(angle), 0.5 * pauli_op("X"), "X"}},
                               std::move(noise));
}

/// delta (IZ - ZI + 0.5 ZZ), the two-qubit dephasing/crosstalk term on the XX layer.
inline NoiseTerm cnot_layer_noise(NoiseProcess process) {
    return {PauliSum({{PauliString::parse("IZ"), 1.0}, {PauliString::parse("ZI"), -1.0}, {PauliString::parse("ZZ"), 0.5}}),
            Additive{}, std::move(process)};
}

/// delta_g (XX + YY + ZZ), the Heisenberg term that commutes with the iSWAP drive.
inline NoiseTerm iswap_layer_noise(NoiseProcess process) {
    return {PauliSum({{PauliString::parse("XX"), 1.0}, {PauliString::parse("YY"), 1.0}, {PauliString::parse("ZZ"), 1.0}}),
            Additive{}, std::move(process)};
}

}  // namespace noisegeo
