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

// Config-driven experiments behind the command-line runner. Each experiment
// has a compute function returning plain data and a run function that writes
// the CSV/JSON artifacts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisegeo/channel.hpp"
#include "noisegeo/circuit.hpp"
#include "noisegeo/geometry.hpp"
#include "noisegeo/io.hpp"
#include "noisegeo/metrics.hpp"
#include "noisegeo/parallel.hpp"
#include "noisegeo/pulse_optimizer.hpp"
#include "noisegeo/schedule.hpp"
#include "noisegeo/spectra.hpp"
#include "noisegeo/twirl.hpp"

namespace noisegeo {

/// Invalid or unreadable configuration (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical self-check of an experiment failed (exit code 3).
struct NumericalCheckError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"error-walk", "fidelity-sweep", "ptm", "filter-function", "pulse-opt"};
    return names;
}

struct ExperimentConfig {
    std::string experiment;

    // Circuit.
    std::string gate = "cnot";            // cnot | iswap | x-rotation
    std::string circuit = "iswap-chain";  // iswap-chain | cnot-hadamard (error-walk only)
    double duration = 1.0;                // gate time T; the iSWAP coupling is pi/(4T)
    std::size_t intervals = 512;
    double rotation_angle = 2 * std::numbers::pi;
    std::vector<std::size_t> depths;      // empty: depth_step, 2 depth_step, ..., max_depth
    std::size_t max_depth = 256;
    std::size_t depth_step = 4;
    std::size_t cnot_layers = 200;
    std::size_t hadamards = 74;
    std::optional<std::uint64_t> layout_seed;

    // Noise.
    std::string process = "quasi-static";  // quasi-static | white | ou
    double noise_strength = 0.01;          // process mean (delta)
    std::vector<double> noise_strengths{0.0, 0.005, 0.01, 0.02, 0.04, 0.08};
    double noise_std = 0;                  // quasi-static spread
    double white_level = 1e-4;
    double ou_sigma = 0.01;
    double ou_tau = 0.25;
    std::string realization_mode = "shared";  // shared | independent

    // Twirling and sampling.
    std::vector<std::string> twirl_set;  // empty: all Paulis
    bool enumerate = true;
    std::size_t shots = 1000;
    std::size_t runs = 200;
    std::string state = "01";

    // Pulses.
    std::string pulse = "cosine";            // cosine | constant | file | optimized
    std::string pulse_file;
    std::string robust_pulse = "optimized";  // optimized | file | none
    std::string robust_pulse_file;
    std::size_t fourier_coefficients = 4;

    // Analysis.
    std::size_t top_k = 6;
    std::size_t fit_skip = 2;
    std::size_t omega_points = 4096;
    double omega_cutoff_periods = 64;
    std::size_t mc_shots = 10000;

    std::uint64_t seed = 0;
    int threads = 0;  // 0: hardware concurrency; never affects outputs
    std::string output_dir = ".";

    std::vector<std::size_t> resolved_depths() const {
        if (!depths.empty()) return depths;
        std::vector<std::size_t> out;
        for (std::size_t d = depth_step; d <= max_depth; d += depth_step) out.push_back(d);
        return out;
    }
    std::uint64_t resolved_layout_seed() const { return layout_seed.value_or(seed); }
};

/// Every field that influences results; `threads` and `output_dir` are left out.
inline nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"experiment", c.experiment},
            {"gate", c.gate},
            {"circuit", c.circuit},
            {"duration", c.duration},
            {"intervals", c.intervals},
            {"rotation_angle", c.rotation_angle},
            {"depths", c.resolved_depths()},
            {"cnot_layers", c.cnot_layers},
            {"hadamards", c.hadamards},
            {"layout_seed", c.resolved_layout_seed()},
            {"process", c.process},
            {"noise_strength", c.noise_strength},
            {"noise_strengths", c.noise_strengths},
            {"noise_std", c.noise_std},
            {"white_level", c.white_level},
            {"ou_sigma", c.ou_sigma},
            {"ou_tau", c.ou_tau},
            {"realization_mode", c.realization_mode},
            {"twirl_set", c.twirl_set},
            {"enumerate", c.enumerate},
            {"shots", c.shots},
            {"runs", c.runs},
            {"state", c.state},
            {"pulse", c.pulse},
            {"pulse_file", c.pulse_file},
            {"robust_pulse", c.robust_pulse},
            {"robust_pulse_file", c.robust_pulse_file},
            {"fourier_coefficients", c.fourier_coefficients},
            {"top_k", c.top_k},
            {"fit_skip", c.fit_skip},
            {"omega_points", c.omega_points},
            {"omega_cutoff_periods", c.omega_cutoff_periods},
            {"mc_shots", c.mc_shots},
            {"seed", c.seed}};
}

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

namespace detail {

class ConfigReader {
   public:
    explicit ConfigReader(const nlohmann::json& j) : j_(j) {
        if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    }

    void read(const char* key, double& v) {
        if (const auto* x = find(key)) {
            if (!x->is_number()) fail(key, "expected a number");
            v = x->get<double>();
            if (!std::isfinite(v)) fail(key, "must be finite");
        }
    }
    void read(const char* key, std::size_t& v) {
        if (const auto* x = find(key)) v = unsigned_value(key, *x);
    }
    void read(const char* key, std::optional<std::uint64_t>& v) {
        if (const auto* x = find(key)) v = unsigned_value(key, *x);
    }
    void read(const char* key, int& v) {
        if (const auto* x = find(key)) {
            if (!x->is_number_integer()) fail(key, "expected an integer");
            v = x->get<int>();
        }
    }
    void read(const char* key, bool& v) {
        if (const auto* x = find(key)) {
            if (!x->is_boolean()) fail(key, "expected true or false");
            v = x->get<bool>();
        }
    }
    void read(const char* key, std::string& v, std::initializer_list<const char*> allowed = {}) {
        if (const auto* x = find(key)) {
            if (!x->is_string()) fail(key, "expected a string");
            v = x->get<std::string>();
            if (allowed.size() == 0) return;
            std::string options;
            for (const char* a : allowed) {
                if (v == a) return;
                options += options.empty() ? a : std::string(", ") + a;
            }
            fail(key, "'" + v + "' is not one of " + options);
        }
    }
    void read(const char* key, std::vector<double>& v) {
        if (const auto* x = find(key)) {
            if (!x->is_array()) fail(key, "expected an array of numbers");
            v.clear();
            for (std::size_t i = 0; i < x->size(); ++i) {
                if (!(*x)[i].is_number()) fail(key + index(i), "expected a number");
                v.push_back((*x)[i].get<double>());
            }
        }
    }
    void read(const char* key, std::vector<std::size_t>& v) {
        if (const auto* x = find(key)) {
            if (!x->is_array()) fail(key, "expected an array of non-negative integers");
            v.clear();
            for (std::size_t i = 0; i < x->size(); ++i) v.push_back(unsigned_value(key + index(i), (*x)[i]));
        }
    }
    void read(const char* key, std::vector<std::string>& v) {
        if (const auto* x = find(key)) {
            if (!x->is_array()) fail(key, "expected an array of strings");
            v.clear();
            for (std::size_t i = 0; i < x->size(); ++i) {
                if (!(*x)[i].is_string()) fail(key + index(i), "expected a string");
                v.push_back((*x)[i].get<std::string>());
            }
        }
    }

    void reject_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("config key '" + it.key() + "': unknown key");
        }
    }

    [[noreturn]] static void fail(const std::string& key, const std::string& what) {
        throw ConfigError("config key '" + key + "': " + what);
    }

   private:
    const nlohmann::json* find(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    static std::string index(std::size_t i) { return "[" + std::to_string(i) + "]"; }
    static std::uint64_t unsigned_value(const std::string& key, const nlohmann::json& x) {
        if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
            fail(key, "expected a non-negative integer");
        }
        return x.get<std::uint64_t>();
    }

    const nlohmann::json& j_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
    using R = detail::ConfigReader;
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
        R::fail("experiment", c.experiment.empty() ? "missing" : "'" + c.experiment + "' is not a known experiment");
    }
    if (!(c.duration > 0)) R::fail("duration", "must be positive");
    if (c.intervals < kMinSamples - 1) R::fail("intervals", "must be at least " + std::to_string(kMinSamples - 1));
    if (c.depth_step == 0) R::fail("depth_step", "must be positive");
    for (std::size_t i = 0; i < c.depths.size(); ++i) {
        if (c.depths[i] == 0) R::fail("depths[" + std::to_string(i) + "]", "must be positive");
        if (i > 0 && c.depths[i] <= c.depths[i - 1]) R::fail("depths[" + std::to_string(i) + "]", "depths must increase");
    }
    if (c.resolved_depths().empty()) R::fail("max_depth", "no depths selected");
    if (c.cnot_layers == 0) R::fail("cnot_layers", "must be positive");
    if (!(c.noise_std >= 0)) R::fail("noise_std", "must be non-negative");
    if (!(c.white_level >= 0)) R::fail("white_level", "must be non-negative");
    if (!(c.ou_sigma >= 0)) R::fail("ou_sigma", "must be non-negative");
    if (!(c.ou_tau > 0)) R::fail("ou_tau", "must be positive");
    if (c.noise_strengths.empty()) R::fail("noise_strengths", "must not be empty");
    if (c.shots == 0) R::fail("shots", "must be positive");
    if (c.runs == 0) R::fail("runs", "must be positive");
    if (c.mc_shots == 0) R::fail("mc_shots", "must be positive");
    if (c.omega_points < 16) R::fail("omega_points", "must be at least 16");
    if (!(c.omega_cutoff_periods > 0)) R::fail("omega_cutoff_periods", "must be positive");
    if (c.fourier_coefficients < 3) R::fail("fourier_coefficients", "must be at least 3");
    if (c.pulse == "file" && c.pulse_file.empty()) R::fail("pulse_file", "required when pulse is 'file'");
    if (c.robust_pulse == "file" && c.robust_pulse_file.empty()) R::fail("robust_pulse_file", "required when robust_pulse is 'file'");
    try {
        parse_twirl_set(c.twirl_set);
    } catch (const std::exception& e) {
        R::fail("twirl_set", e.what());
    }
    const int qubits = c.gate == "x-rotation" ? 1 : 2;
    if (c.state.size() != static_cast<std::size_t>(qubits)) R::fail("state", "needs one symbol per qubit");
    try {
        product_state(c.state);
    } catch (const std::exception& e) {
        R::fail("state", e.what());
    }
    if (c.experiment == "error-walk" && c.circuit == "cnot-hadamard" && c.gate != "cnot") {
        R::fail("gate", "the cnot-hadamard circuit uses the cnot gate");
    }
}

/// Reads a flat JSON object. `experiment` (from the subcommand) overrides or
/// supplies the "experiment" key; unknown keys are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::string& experiment = {}) {
    ExperimentConfig c;
    detail::ConfigReader r(j);
    r.read("experiment", c.experiment);
    if (!experiment.empty()) {
        if (!c.experiment.empty() && c.experiment != experiment) {
            detail::ConfigReader::fail("experiment", "'" + c.experiment + "' does not match subcommand '" + experiment + "'");
        }
        c.experiment = experiment;
    }
    r.read("gate", c.gate, {"cnot", "iswap", "x-rotation"});
    r.read("circuit", c.circuit, {"iswap-chain", "cnot-hadamard"});
    if (c.experiment == "error-walk" && c.circuit == "iswap-chain" && !j.contains("gate")) c.gate = "iswap";
    r.read("duration", c.duration);
    r.read("intervals", c.intervals);
    r.read("rotation_angle", c.rotation_angle);
    r.read("depths", c.depths);
    r.read("max_depth", c.max_depth);
    r.read("depth_step", c.depth_step);
    r.read("cnot_layers", c.cnot_layers);
    r.read("hadamards", c.hadamards);
    r.read("layout_seed", c.layout_seed);
    r.read("process", c.process, {"quasi-static", "white", "ou"});
    r.read("noise_strength", c.noise_strength);
    r.read("noise_strengths", c.noise_strengths);
    r.read("noise_std", c.noise_std);
    r.read("white_level", c.white_level);
    r.read("ou_sigma", c.ou_sigma);
    r.read("ou_tau", c.ou_tau);
    r.read("realization_mode", c.realization_mode, {"shared", "independent"});
    r.read("twirl_set", c.twirl_set);
    r.read("enumerate", c.enumerate);
    r.read("shots", c.shots);
    r.read("runs", c.runs);
    r.read("state", c.state);
    r.read("pulse", c.pulse, {"cosine", "constant", "file", "optimized"});
    r.read("pulse_file", c.pulse_file);
    r.read("robust_pulse", c.robust_pulse, {"optimized", "file", "none"});
    r.read("robust_pulse_file", c.robust_pulse_file);
    r.read("fourier_coefficients", c.fourier_coefficients);
    r.read("top_k", c.top_k);
    r.read("fit_skip", c.fit_skip);
    r.read("omega_points", c.omega_points);
    r.read("omega_cutoff_periods", c.omega_cutoff_periods);
    r.read("mc_shots", c.mc_shots);
    std::optional<std::uint64_t> seed;
    r.read("seed", seed);
    if (seed) c.seed = *seed;
    r.read("threads", c.threads);
    r.read("output_dir", c.output_dir);
    r.reject_unknown();
    if (c.gate == "x-rotation" && !j.contains("state")) c.state = "0";
    validate(c);
    return c;
}

/// Parses JSON text; syntax errors report line and column.
inline ExperimentConfig parse_config_text(const std::string& text, const std::string& experiment = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(j, experiment);
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::string& experiment = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), experiment);
}

// ---------------------------------------------------------------------------
// Building blocks.

inline NoiseProcess make_process(const ExperimentConfig& c, double strength) {
    if (c.process == "white") return WhiteNoise{c.white_level, strength};
    if (c.process == "ou") return OrnsteinUhlenbeck{c.ou_sigma, c.ou_tau, strength};
    return QuasiStatic{strength, c.noise_std};
}

inline RealizationMode realization_mode(const ExperimentConfig& c) {
    return c.realization_mode == "independent" ? RealizationMode::kIndependentPerLayer : RealizationMode::kSharedPerRun;
}

inline std::vector<PauliString> twirl_set(const ExperimentConfig& c) {
    const int qubits = c.gate == "x-rotation" ? 1 : 2;
    return c.twirl_set.empty() ? default_twirl_set(qubits) : parse_twirl_set(c.twirl_set);
}

inline TimeGrid gate_grid(const ExperimentConfig& c) { return TimeGrid(c.duration, c.intervals); }

inline CMat x_rotation_target(double angle) { return expm_hermitian(0.5 * pauli_op("X"), angle); }

/// First-order robustness problem for the configured gate.
inline PulseProblem pulse_problem(const ExperimentConfig& c) {
    const TimeGrid grid = gate_grid(c);
    if (c.gate == "cnot") return xx_halfpi_problem(grid, c.fourier_coefficients, c.seed);
    if (c.gate == "x-rotation") {
        return {1, grid, 0.5 * pauli_op("X"), c.rotation_angle, x_rotation_target(c.rotation_angle),
                {PauliSum::single(PauliString::parse("Z"))}, c.fourier_coefficients, c.seed};
    }
    return {2, grid, pauli_op("XX") + pauli_op("YY"), std::numbers::pi / 4, iswap_target(),
            {iswap_layer_noise(QuasiStatic{}).op}, c.fourier_coefficients, c.seed};
}

/// Resolves a pulse choice. Optimization failures raise NumericalCheckError.
inline PulseShape resolve_pulse(const ExperimentConfig& c, const std::string& kind, const std::string& file) {
    if (kind == "file") {
        try {
            return import_pulse(file);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("pulse file: ") + e.what());
        }
    }
    if (kind == "optimized") {
        const PulseResult r = optimize_robust_pulse(pulse_problem(c));
        if (!r.success) throw NumericalCheckError("pulse optimization failed: " + r.message);
        return r.pulse;
    }
    if (kind == "constant") return PulseShape::constant(gate_grid(c), 1.0);
    return PulseShape::cosine(gate_grid(c), 1.0);
}

/// The configured gate as a noisy hard layer with mean noise `strength`.
inline HardLayer build_layer(const ExperimentConfig& c, const PulseShape& pulse, double strength) {
    const NoiseProcess p = make_process(c, strength);
    if (c.gate == "cnot") return make_xx_layer(pulse, {cnot_layer_noise(p)});
    if (c.gate == "iswap") return make_iswap_layer(std::numbers::pi / (4 * c.duration), c.intervals, {iswap_layer_noise(p)});
    NoiseTerm z{PauliSum::single(PauliString::parse("Z")), Additive{}, p};
    return HardLayer(make_x_rotation(pulse, c.rotation_angle, {z}), "X-rotation", x_rotation_target(c.rotation_angle));
}

/// One application of the configured gate: the CNOT composite or the bare layer.
inline Circuit gate_circuit(const ExperimentConfig& c, const HardLayer& layer) {
    return c.gate == "cnot" ? make_cnot_composite(layer) : make_chain(layer, 1);
}

struct NumericalCheck {
    std::string name;
    double value = 0;
    double reference = 0;
    double error = 0;
    double tolerance = 0;
    bool passed = false;
};

/// Relative comparison with an absolute floor for values that should vanish.
inline NumericalCheck relative_check(std::string name, double value, double reference, double tolerance, double floor) {
    NumericalCheck k{std::move(name), value, reference, 0, tolerance, false};
    const double diff = std::abs(value - reference);
    const double scale = std::max(std::abs(reference), std::abs(value));
    k.error = scale > floor ? diff / scale : 0;
    k.passed = scale > floor ? k.error <= tolerance : diff <= floor;
    return k;
}

inline nlohmann::json to_json(const NumericalCheck& k) {
    return {{"name", k.name}, {"value", k.value}, {"reference", k.reference}, {"error", k.error}, {"tolerance", k.tolerance},
            {"passed", k.passed}};
}

inline nlohmann::json to_json(const Estimate& e) {
    return {{"value", e.value}, {"standard_error", e.standard_error}, {"samples", e.samples}};
}

inline nlohmann::json to_json(const ScalingFit& f) {
    return {{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"standard_error", f.standard_error},
            {"ci95", {f.ci_low, f.ci_high}},  {"points", f.points},       {"skipped", f.skipped}};
}

// ---------------------------------------------------------------------------
// Error walk.

struct ErrorWalkData {
    std::vector<std::size_t> depths;  // hard-layer counts
    std::vector<double> bare;         // untwirled distance, run 0
    std::vector<double> twirled;      // single twirled run (run 0)
    std::vector<double> rms;          // sqrt(<|Phi|^2>) over twirled runs
    std::vector<Estimate> mean_sq;    // <|Phi|^2>
    std::vector<double> expected_sq;  // <sum_k |R_lo,k|^2>
    std::optional<ScalingFit> bare_fit;
    std::optional<ScalingFit> rms_fit;
    ErrorTrajectory bare_trajectory;
    ErrorTrajectory twirled_trajectory;
    std::optional<InterleavedLayout> layout;
};

/// Front-propagated error distances of `c` without twirls and over `runs`
/// independently twirled runs, reported at the given hard-layer counts.
inline ErrorWalkData compute_error_walk(const Circuit& c, const std::vector<std::size_t>& depths, std::size_t runs,
                                        std::uint64_t seed, const std::vector<PauliString>& set, RealizationMode mode,
                                        unsigned threads, std::size_t fit_skip) {
    if (runs == 0) throw std::invalid_argument("compute_error_walk: runs must be positive");
    const std::size_t n = c.hard_layer_count();
    for (std::size_t d : depths) {
        if (d == 0 || d > n) throw std::invalid_argument("compute_error_walk: depth " + std::to_string(d) + " outside the circuit");
    }
    ErrorWalkData out;
    out.depths = depths;
    out.bare_trajectory = propagate_error_front(c, draw_realizations(c, seed, 0, mode));

    std::vector<std::vector<double>> sq(runs), local(runs);
    std::vector<ErrorTrajectory> first(1);
    parallel_for(runs, threads, [&](std::size_t r) {
        const Circuit tc = apply_twirls(c, sample_twirls(c, seed, r, set));
        ErrorTrajectory t = propagate_error_front(tc, draw_realizations(c, seed, r, mode));
        sq[r].resize(n);
        local[r].resize(n);
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sq[r][i] = t.distances[i] * t.distances[i];
            acc += t.local_steps[i].squared_norm();
            local[r][i] = acc;
        }
        if (r == 0) first[0] = std::move(t);
    });
    out.twirled_trajectory = std::move(first[0]);

    std::vector<double> column(runs);
    for (std::size_t d : depths) {
        const std::size_t i = d - 1;
        out.bare.push_back(out.bare_trajectory.distances[i]);
        out.twirled.push_back(out.twirled_trajectory.distances[i]);
        for (std::size_t r = 0; r < runs; ++r) column[r] = sq[r][i];
        const Estimate e = sample_mean(column);
        out.mean_sq.push_back(e);
        out.rms.push_back(std::sqrt(e.value));
        for (std::size_t r = 0; r < runs; ++r) column[r] = local[r][i];
        out.expected_sq.push_back(pairwise_sum<double>(column) / static_cast<double>(runs));
    }

    std::vector<double> x(depths.begin(), depths.end());
    try {
        out.bare_fit = fit_scaling_exponent({x, out.bare, {}}, fit_skip);
    } catch (const std::invalid_argument&) {
    }
    try {
        out.rms_fit = fit_scaling_exponent({x, out.rms, {}}, fit_skip);
    } catch (const std::invalid_argument&) {
    }
    return out;
}

inline ErrorWalkData compute_error_walk(const ExperimentConfig& c) {
    const unsigned threads = resolve_threads(c.threads);
    if (c.circuit == "cnot-hadamard") {
        const HardLayer xx = build_layer(c, resolve_pulse(c, c.pulse, c.pulse_file), c.noise_strength);
        InterleavedLayout layout = make_cnot_hadamard_circuit(xx, c.cnot_layers, c.hadamards, c.resolved_layout_seed());
        std::vector<std::size_t> depths;
        if (c.depths.empty()) {
            for (std::size_t d = 1; d <= c.cnot_layers; ++d) depths.push_back(d);
        } else {
            depths = c.depths;
        }
        ErrorWalkData out = compute_error_walk(layout.circuit, depths, c.runs, c.seed, twirl_set(c), realization_mode(c), threads, c.fit_skip);
        out.layout = std::move(layout);
        return out;
    }
    const HardLayer layer = build_layer(c, resolve_pulse(c, c.pulse, c.pulse_file), c.noise_strength);
    const auto depths = c.resolved_depths();
    return compute_error_walk(make_chain(layer, depths.back()), depths, c.runs, c.seed, twirl_set(c), realization_mode(c), threads,
                              c.fit_skip);
}

// ---------------------------------------------------------------------------
// Single-layer fidelity and channel conditions.

struct ConditionResult {
    Estimate fidelity;  // state fidelity for the configured input
    PTM ptm;            // error channel U_ideal^dag U_noisy averaged over samples
    PtmDiagnostics diagnostics;
    std::size_t samples = 0;
};

inline ConditionResult evaluate_condition(const Circuit& c, const RcPolicy& policy, const CVec& input) {
    const CMat ideal = c.noiseless_unitary();
    const CVec target = ideal * input;
    const auto unitaries = rc_sample_unitaries(c, policy);
    std::vector<double> fid(unitaries.size());
    std::vector<CMat> errors(unitaries.size());
    for (std::size_t s = 0; s < unitaries.size(); ++s) {
        fid[s] = state_fidelity(CVec(unitaries[s] * input), target);
        errors[s] = ideal.adjoint() * unitaries[s];
    }
    ConditionResult r;
    r.fidelity = batch_mean(fid, policy.batches);
    if (rc_is_exact(c, policy)) r.fidelity.standard_error = 0;
    r.ptm = exact_ptm<double>(std::span<const CMat>(errors), policy.threads);
    r.diagnostics = ptm_diagnostics(r.ptm);
    r.samples = unitaries.size();
    return r;
}

inline RcPolicy bare_policy(const ExperimentConfig& c) {
    RcPolicy p;
    p.shots = c.shots;
    p.seed = c.seed;
    p.realization_mode = realization_mode(c);
    p.threads = resolve_threads(c.threads);
    return p;
}

inline RcPolicy rc_policy(const ExperimentConfig& c) {
    RcPolicy p = bare_policy(c);
    p.twirl_set = twirl_set(c);
    p.enumerate = c.enumerate;
    return p;
}

struct FidelityRow {
    double delta = 0;
    ConditionResult bare;
    ConditionResult rc;
    std::optional<ConditionResult> bare_robust;
    std::optional<ConditionResult> rc_robust;
};

struct FidelitySweepData {
    std::vector<FidelityRow> rows;
    std::optional<PulseShape> robust_pulse;
};

inline FidelitySweepData compute_fidelity_sweep(const ExperimentConfig& c) {
    FidelitySweepData out;
    const PulseShape pulse = resolve_pulse(c, c.pulse, c.pulse_file);
    if (c.robust_pulse != "none" && c.gate != "iswap") out.robust_pulse = resolve_pulse(c, c.robust_pulse, c.robust_pulse_file);
    const CVec input = product_state(c.state);
    for (double delta : c.noise_strengths) {
        FidelityRow row;
        row.delta = delta;
        const Circuit trivial = gate_circuit(c, build_layer(c, pulse, delta));
        row.bare = evaluate_condition(trivial, bare_policy(c), input);
        row.rc = evaluate_condition(trivial, rc_policy(c), input);
        if (out.robust_pulse) {
            const Circuit robust = gate_circuit(c, build_layer(c, *out.robust_pulse, delta));
            row.bare_robust = evaluate_condition(robust, bare_policy(c), input);
            row.rc_robust = evaluate_condition(robust, rc_policy(c), input);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

struct PtmData {
    ConditionResult bare_trivial;
    ConditionResult rc_trivial;
    ConditionResult bare_robust;
    ConditionResult rc_robust;
    double rc_off_diagonal_bound = 0;
    bool robust_closer_to_one = false;  // see diagonal_closer_to_one
};

inline PtmData compute_ptm(const ExperimentConfig& c) {
    if (c.robust_pulse == "none") throw ConfigError("config key 'robust_pulse': the ptm experiment needs a robust pulse");
    const PulseShape pulse = resolve_pulse(c, c.pulse, c.pulse_file);
    const PulseShape robust = resolve_pulse(c, c.robust_pulse, c.robust_pulse_file);
    const CVec input = product_state(c.state);
    const Circuit trivial = gate_circuit(c, build_layer(c, pulse, c.noise_strength));
    const Circuit rob = gate_circuit(c, build_layer(c, robust, c.noise_strength));
    PtmData d{evaluate_condition(trivial, bare_policy(c), input), evaluate_condition(trivial, rc_policy(c), input),
              evaluate_condition(rob, bare_policy(c), input), evaluate_condition(rob, rc_policy(c), input)};
    d.rc_off_diagonal_bound = rc_is_exact(trivial, rc_policy(c)) ? 1e-12 : 3 / std::sqrt(static_cast<double>(d.rc_trivial.samples));
    d.robust_closer_to_one = diagonal_closer_to_one(d.rc_robust.diagnostics, d.rc_trivial.diagnostics);
    return d;
}

// ---------------------------------------------------------------------------
// Filter function and second moments.

struct FilterFunctionData {
    HardLayer layer;
    FilterFunction filter;
    SecondMoment moments;
    std::vector<NumericalCheck> checks;
};

/// <|R1|^2> by Monte Carlo over synthesized realizations of the layer noise.
inline ErrorVector monte_carlo_second_moment(const HardLayer& layer, std::size_t shots, std::uint64_t seed, unsigned threads) {
    std::vector<Eigen::VectorXd> sq(shots);
    parallel_for(shots, threads, [&](std::size_t s) {
        const NoiseRealization r = synthesize_realization(layer.schedule(), derive_seed(seed, {kNoiseStream, s}));
        sq[s] = first_order_error(layer.curves(), r).components().array().square().matrix();
    });
    ErrorVector out(layer.num_qubits());
    out.components() = pairwise_sum<Eigen::VectorXd>(sq) / static_cast<double>(shots);
    return out;
}

inline FilterFunctionData compute_filter_function(const ExperimentConfig& c) {
    const HardLayer layer = build_layer(c, resolve_pulse(c, c.pulse, c.pulse_file), c.noise_strength);
    const auto& curves = layer.curves();
    const TimeGrid& grid = layer.schedule().grid();
    const auto omega = symmetric_omega_grid(grid.duration(), c.omega_points, c.omega_cutoff_periods);
    std::vector<std::vector<double>> means;
    for (const auto& n : layer.schedule().noise()) means.emplace_back(grid.size(), process_mean(n.process));
    SpectralQuadrature quad;
    quad.omega_points = c.omega_points;
    quad.cutoff_periods = c.omega_cutoff_periods;
    FilterFunctionData d{layer, filter_function(curves.front(), omega),
                         second_moment(curves, NoiseSpectra::of(layer.schedule()), means, quad), {}};

    const double T = grid.duration();
    const double fluct = d.moments.fluctuation.components().sum();
    if (c.process == "quasi-static") {
        const ErrorVector unit = first_order_error(curves.front(), std::vector<double>(grid.size(), 1.0));
        const double direct = c.noise_std * c.noise_std * unit.squared_norm();
        d.checks.push_back(relative_check("delta spectrum vs direct quadrature variance", fluct, direct, 1e-9,
                                          1e-15 * std::max(c.noise_std * c.noise_std, 1e-300) * T * T));
    } else if (c.process == "white") {
        const double direct = white_noise_time_moment(curves.front(), c.white_level).components().sum();
        d.checks.push_back(relative_check("white-noise Parseval (frequency vs time route)", fluct, direct, 1e-6,
                                          1e-15 * std::max(c.white_level, 1e-300) * T));
    } else {
        const ErrorVector mc = monte_carlo_second_moment(layer, c.mc_shots, c.seed, resolve_threads(c.threads));
        const double total = d.moments.total.components().sum();
        d.checks.push_back(relative_check("OU Monte Carlo vs spectral second moment", mc.components().sum(), total, 0.05,
                                          1e-15 * std::max(c.ou_sigma * c.ou_sigma, 1e-300) * T * T));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Artifact writers.

struct RunOutput {
    std::vector<std::filesystem::path> files;
    std::vector<NumericalCheck> checks;
};

namespace detail {

class ArtifactWriter {
   public:
    explicit ArtifactWriter(const ExperimentConfig& c) : c_(c), hash_(config_hash(c)), dir_(c.output_dir) {}

    void csv(const std::string& name, const std::string& body) {
        write_text_file(dir_ / name, csv_header(c_.experiment, hash_, c_.seed) + body);
        files_.push_back(dir_ / name);
    }
    void json(const std::string& name, const nlohmann::json& results) {
        nlohmann::json j{{"experiment", c_.experiment},
                         {"config_hash", hash_},
                         {"seed", c_.seed},
                         {"seeds", {{"master", c_.seed}, {"layout", c_.resolved_layout_seed()}}},
                         {"config", to_json(c_)},
                         {"results", results}};
        write_text_file(dir_ / name, j.dump(2) + "\n");
        files_.push_back(dir_ / name);
    }
    std::vector<std::filesystem::path> files() const { return files_; }

   private:
    const ExperimentConfig& c_;
    std::string hash_;
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
};

inline nlohmann::json optional_fit(const std::optional<ScalingFit>& f) { return f ? to_json(*f) : nlohmann::json(nullptr); }

inline std::string ptm_csv(const PTM& p) {
    std::ostringstream os;
    write_ptm_csv(os, p);
    return os.str();
}

}  // namespace detail

inline RunOutput run_error_walk(const ExperimentConfig& c) {
    const ErrorWalkData d = compute_error_walk(c);
    detail::ArtifactWriter w(c);
    std::ostringstream os;
    os << "depth,bare,twirled,rms,mean_sq,mean_sq_se,expected_sq\n";
    for (std::size_t k = 0; k < d.depths.size(); ++k) {
        os << d.depths[k] << "," << fmt(d.bare[k]) << "," << fmt(d.twirled[k]) << "," << fmt(d.rms[k]) << "," << fmt(d.mean_sq[k].value)
           << "," << fmt(d.mean_sq[k].standard_error) << "," << fmt(d.expected_sq[k]) << "\n";
    }
    w.csv("distances.csv", os.str());
    std::ostringstream bare, twirled;
    write_trajectory_csv(bare, d.bare_trajectory, c.top_k);
    write_trajectory_csv(twirled, d.twirled_trajectory, c.top_k);
    w.csv("trajectory_bare.csv", bare.str());
    w.csv("trajectory_twirled.csv", twirled.str());
    if (d.layout) {
        w.json("layout.json", {{"cnot_layers", c.cnot_layers},
                               {"hadamard_slots", d.layout->hadamard_slots},
                               {"hadamard_qubits", d.layout->hadamard_qubits},
                               {"layout_seed", d.layout->seed}});
    }
    w.json("scaling.json", {{"bare", detail::optional_fit(d.bare_fit)},
                            {"twirled_rms", detail::optional_fit(d.rms_fit)},
                            {"final_mean_sq", to_json(d.mean_sq.back())},
                            {"final_expected_sq", d.expected_sq.back()}});
    return {w.files(), {}};
}

inline RunOutput run_fidelity_sweep(const ExperimentConfig& c) {
    const FidelitySweepData d = compute_fidelity_sweep(c);
    detail::ArtifactWriter w(c);
    const bool robust = d.robust_pulse.has_value();
    std::ostringstream os;
    os << "delta,bare,bare_se,rc,rc_se";
    if (robust) os << ",rc_robust,rc_robust_se,bare_robust,bare_robust_se";
    os << ",favg_bare,favg_rc";
    if (robust) os << ",favg_rc_robust,favg_bare_robust";
    os << "\n";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : d.rows) {
        os << fmt(r.delta) << "," << fmt(r.bare.fidelity.value) << "," << fmt(r.bare.fidelity.standard_error) << ","
           << fmt(r.rc.fidelity.value) << "," << fmt(r.rc.fidelity.standard_error);
        if (robust) {
            os << "," << fmt(r.rc_robust->fidelity.value) << "," << fmt(r.rc_robust->fidelity.standard_error) << ","
               << fmt(r.bare_robust->fidelity.value) << "," << fmt(r.bare_robust->fidelity.standard_error);
        }
        os << "," << fmt(r.bare.diagnostics.average_fidelity) << "," << fmt(r.rc.diagnostics.average_fidelity);
        if (robust) os << "," << fmt(r.rc_robust->diagnostics.average_fidelity) << "," << fmt(r.bare_robust->diagnostics.average_fidelity);
        os << "\n";
        nlohmann::json row{{"delta", r.delta}, {"bare", to_json(r.bare.fidelity)}, {"rc", to_json(r.rc.fidelity)}};
        if (robust) {
            row["rc_robust"] = to_json(r.rc_robust->fidelity);
            row["bare_robust"] = to_json(r.bare_robust->fidelity);
        }
        rows.push_back(row);
    }
    w.csv("fidelity.csv", os.str());
    if (robust) {
        std::ostringstream p;
        write_pulse(p, *d.robust_pulse);
        w.csv("robust_pulse.csv", p.str());
    }
    w.json("fidelity.json", {{"state", c.state}, {"rows", rows}});
    return {w.files(), {}};
}

inline RunOutput run_ptm(const ExperimentConfig& c) {
    const PtmData d = compute_ptm(c);
    detail::ArtifactWriter w(c);
    w.csv("ptm_bare_trivial.csv", detail::ptm_csv(d.bare_trivial.ptm));
    w.csv("ptm_rc_trivial.csv", detail::ptm_csv(d.rc_trivial.ptm));
    w.csv("ptm_bare_robust.csv", detail::ptm_csv(d.bare_robust.ptm));
    w.csv("ptm_rc_robust.csv", detail::ptm_csv(d.rc_robust.ptm));
    RunOutput out;
    out.checks.push_back({"RC trivial-pulse max off-diagonal", d.rc_trivial.diagnostics.max_off_diagonal, 0,
                          d.rc_trivial.diagnostics.max_off_diagonal, d.rc_off_diagonal_bound,
                          d.rc_trivial.diagnostics.max_off_diagonal <= d.rc_off_diagonal_bound});
    out.checks.push_back({"RC robust-pulse max off-diagonal", d.rc_robust.diagnostics.max_off_diagonal, 0,
                          d.rc_robust.diagnostics.max_off_diagonal, d.rc_off_diagonal_bound,
                          d.rc_robust.diagnostics.max_off_diagonal <= d.rc_off_diagonal_bound});
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& k : out.checks) checks.push_back(to_json(k));
    w.json("ptm_diagnostics.json", {{"bare_trivial", to_json(d.bare_trivial.diagnostics)},
                                    {"rc_trivial", to_json(d.rc_trivial.diagnostics)},
                                    {"bare_robust", to_json(d.bare_robust.diagnostics)},
                                    {"rc_robust", to_json(d.rc_robust.diagnostics)},
                                    {"robust_diagonal_closer_to_one", d.robust_closer_to_one},
                                    {"checks", checks}});
    out.files = w.files();
    return out;
}

inline RunOutput run_filter_function(const ExperimentConfig& c) {
    const FilterFunctionData d = compute_filter_function(c);
    detail::ArtifactWriter w(c);
    std::ostringstream os;
    write_filter_function_csv(os, d.filter);
    w.csv("filter_function.csv", os.str());
    std::ostringstream curve;
    write_curve_csv(curve, d.layer.curves().front());
    w.csv("error_curve.csv", curve.str());
    nlohmann::json axes = nlohmann::json::array();
    const auto& m = d.moments;
    for (std::size_t p = 0; p < m.total.size(); ++p) {
        const auto i = static_cast<Eigen::Index>(p);
        if (m.total.components()(i) == 0 && m.mean.components()(i) == 0) continue;
        axes.push_back({{"axis", m.total.axis(p).label()},
                        {"mean", m.mean.components()(i)},
                        {"mean_term", m.mean_term.components()(i)},
                        {"fluctuation", m.fluctuation.components()(i)},
                        {"total", m.total.components()(i)}});
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& k : d.checks) checks.push_back(to_json(k));
    w.json("moments.json", {{"axes", axes},
                            {"mean_term", m.mean_term.components().sum()},
                            {"fluctuation", m.fluctuation.components().sum()},
                            {"total", m.total.components().sum()},
                            {"truncation_estimate", m.truncation_estimate},
                            {"checks", checks}});
    return {w.files(), d.checks};
}

inline RunOutput run_pulse_opt(const ExperimentConfig& c) {
    const PulseProblem problem = pulse_problem(c);
    const PulseResult r = optimize_robust_pulse(problem);
    detail::ArtifactWriter w(c);
    std::ostringstream os;
    write_pulse(os, r.pulse);
    w.csv("pulse.csv", os.str());
    nlohmann::json robust = nlohmann::json::array();
    for (const auto& op : problem.robust_to) {
        std::string label;
        for (const auto& t : op.terms()) label += (label.empty() ? "" : "+") + t.pauli.label();
        robust.push_back(label);
    }
    w.json("pulse_opt.json", {{"robust_to", robust},
                              {"coefficients", r.coefficients},
                              {"baseline_error", r.baseline_error},
                              {"final_error", r.final_error},
                              {"reduction", r.reduction},
                              {"gate_error", r.gate_error},
                              {"evaluations", r.evaluations},
                              {"success", r.success},
                              {"message", r.message}});
    RunOutput out{w.files(), {}};
    out.checks.push_back({"pulse optimization", r.final_error, r.baseline_error, r.gate_error, 1e-6, r.success});
    return out;
}

/// Runs the configured experiment and returns the written files. Failed
/// numerical self-checks raise NumericalCheckError after all files are written.
inline RunOutput run_experiment(const ExperimentConfig& c) {
    RunOutput out;
    if (c.experiment == "error-walk") out = run_error_walk(c);
    else if (c.experiment == "fidelity-sweep") out = run_fidelity_sweep(c);
    else if (c.experiment == "ptm") out = run_ptm(c);
    else if (c.experiment == "filter-function") out = run_filter_function(c);
    else if (c.experiment == "pulse-opt") out = run_pulse_opt(c);
    else throw ConfigError("config key 'experiment': '" + c.experiment + "' is not a known experiment");
    for (const auto& k : out.checks) {
        if (!k.passed) throw NumericalCheckError("check failed: " + k.name + " (error " + fmt(k.error) + ", tolerance " + fmt(k.tolerance) + ")");
    }
    return out;
}

}  // namespace noisegeo
