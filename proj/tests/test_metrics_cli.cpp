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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "noisegeo/noisegeo.hpp"
#include "oracles.hpp"

using namespace noisegeo;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

HardLayer xx_layer(double delta, NoiseProcess p = QuasiStatic{}) {
    if (auto* q = std::get_if<QuasiStatic>(&p)) q->mean = delta;
    return make_xx_layer(PulseShape::cosine(TimeGrid(1.0, 256), 1.0), {cnot_layer_noise(p)});
}

HardLayer iswap_layer(double dg, double spread = 0) { return make_iswap_layer(1.0, 64, {iswap_layer_noise(QuasiStatic{dg, spread})}); }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("noisegeo_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + NOISEGEO_CLI + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Fidelities.

TEST(Metrics, StateFidelityExamples) {
    const Circuit cnot = make_cnot_composite(xx_layer(0.0));
    const CMat u = simulate_exact_unitary(cnot, mean_realizations(cnot));
    // Control on the leftmost qubit: |01> is fixed and |11> -> |10>.
    EXPECT_NEAR(state_fidelity(CVec(u * basis_state("01")), basis_state("01")), 1.0, 1e-12);
    EXPECT_NEAR(state_fidelity(CVec(u * basis_state("11")), basis_state("10")), 1.0, 1e-12);
    CVec bell = CVec::Zero(4);
    bell(0) = bell(3) = 1 / std::sqrt(2.0);
    EXPECT_NEAR(state_fidelity(CVec(u * product_state("+0")), bell), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(state_fidelity(CMat(CMat::Identity(4, 4) / 4.0), basis_state("10")), 0.25);
    EXPECT_THROW(state_fidelity(CVec(2.0 * basis_state("00")), basis_state("00")), std::invalid_argument);
    EXPECT_THROW(state_fidelity(basis_state("00"), basis_state("0")), std::invalid_argument);
}

TEST(Metrics, FidelityStaysInUnitInterval) {
    oracle::Gen gen(43);
    for (int k = 0; k < 200; ++k) {
        const double f = state_fidelity(CVec(gen.state(4)), CVec(gen.state(4)));
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
    }
}

TEST(Metrics, MeanEstimators) {
    std::vector<double> v;
    for (int k = 0; k < 100; ++k) v.push_back(k % 2 ? 1.0 : 3.0);
    const Estimate s = sample_mean(v);
    EXPECT_DOUBLE_EQ(s.value, 2.0);
    EXPECT_NEAR(s.standard_error, std::sqrt(100.0 / 99 / 100), 1e-12);
    const Estimate b = batch_mean(v, 10);
    EXPECT_DOUBLE_EQ(b.value, 2.0);
    EXPECT_EQ(b.standard_error, 0.0);  // every batch has the same mean
    EXPECT_THROW(sample_mean(std::vector<double>{}), std::invalid_argument);
}

TEST(Metrics, IdentityTwirlSetEqualsBare) {
    const Circuit c = make_chain(iswap_layer(0.0, 0.02), 3);
    RcPolicy bare;
    bare.shots = 64;
    bare.seed = 4;
    RcPolicy id = bare;
    id.twirl_set = {PauliString::parse("II")};
    const CVec in = basis_state("01"), target = c.noiseless_unitary() * in;
    EXPECT_EQ(rc_average_fidelity(c, bare, in, target).fidelity.value, rc_average_fidelity(c, id, in, target).fidelity.value);
}

TEST(Metrics, NoiselessFidelityIsOneWithOrWithoutTwirls) {
    const Circuit c = make_cnot_composite(xx_layer(0.0));
    RcPolicy p;
    p.twirl_set = all_paulis(2);
    p.enumerate = true;
    const CVec in = basis_state("01");
    const auto r = rc_average_fidelity(c, p, in, CVec(c.noiseless_unitary() * in));
    EXPECT_NEAR(r.fidelity.value, 1.0, 1e-12);
    EXPECT_EQ(r.fidelity.standard_error, 0.0);
    EXPECT_EQ(r.fidelity.samples, 16u);
}

TEST(Metrics, RcAtLeastBareOnIswapSweep) {
    for (double dg : {0.005, 0.01, 0.02, 0.04, 0.08}) {
        const Circuit c = make_chain(iswap_layer(dg), 1);
        RcPolicy bare, rc;
        rc.twirl_set = all_paulis(2);
        rc.enumerate = true;
        const CVec in = basis_state("01"), target = c.noiseless_unitary() * in;
        EXPECT_GE(rc_average_fidelity(c, rc, in, target).fidelity.value + 1e-15, rc_average_fidelity(c, bare, in, target).fidelity.value) << dg;
    }
}

TEST(Metrics, EnumeratedAverageIsBitStable) {
    const Circuit c = make_cnot_composite(xx_layer(0.03));
    RcPolicy p;
    p.twirl_set = all_paulis(2);
    p.enumerate = true;
    p.threads = 1;
    const CVec in = basis_state("01"), target = c.noiseless_unitary() * in;
    const auto a = rc_average_fidelity(c, p, in, target);
    p.threads = 4;
    const auto b = rc_average_fidelity(c, p, in, target);
    EXPECT_EQ(a.fidelity.value, b.fidelity.value);
    EXPECT_EQ(a.average_state, b.average_state);
}

TEST(Metrics, SampledAverageIndependentOfThreads) {
    const Circuit c = make_chain(iswap_layer(0.0, 0.02), 4);
    RcPolicy p;
    p.twirl_set = all_paulis(2);
    p.shots = 200;
    p.seed = 99;
    const CVec in = basis_state("01"), target = c.noiseless_unitary() * in;
    p.threads = 1;
    const auto a = rc_average_fidelity(c, p, in, target);
    p.threads = 3;
    const auto b = rc_average_fidelity(c, p, in, target);
    EXPECT_EQ(a.fidelity.value, b.fidelity.value);
    EXPECT_EQ(a.fidelity.standard_error, b.fidelity.standard_error);
    EXPECT_GT(a.fidelity.standard_error, 0.0);
}

TEST(Metrics, ScalingFitExamples) {
    ScalingSeries lin, sq;
    for (double x : oracle::logspace(1, 100, 10)) {
        lin.x.push_back(x);
        lin.y.push_back(3 * x);
        sq.x.push_back(x);
        sq.y.push_back(2 * std::sqrt(x));
    }
    const ScalingFit a = fit_scaling_exponent(lin), b = fit_scaling_exponent(sq);
    EXPECT_NEAR(a.exponent, 1.0, 1e-12);
    EXPECT_NEAR(a.prefactor, 3.0, 1e-10);
    EXPECT_LT(a.ci_high - a.ci_low, 0.02);
    EXPECT_NEAR(b.exponent, 0.5, 1e-12);
    EXPECT_LT(b.ci_high - b.ci_low, 0.02);

    ScalingSeries bad = lin;
    bad.y[3] = 0;
    EXPECT_THROW(fit_scaling_exponent(bad), std::invalid_argument);
    ScalingSeries narrow{{1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6}, {}};
    EXPECT_THROW(fit_scaling_exponent(narrow), std::invalid_argument);
    EXPECT_THROW(fit_scaling_exponent(lin, 5), std::invalid_argument);
}

TEST(Metrics, ScalingFitRecoversNoisyPowerLaw) {
    oracle::Gen gen(47);
    ScalingSeries s;
    for (double x : oracle::logspace(4, 256, 30)) {
        s.x.push_back(x);
        s.y.push_back(0.7 * std::pow(x, 0.5) * std::exp(0.02 * gen.normal()));
    }
    const ScalingFit f = fit_scaling_exponent(s);
    EXPECT_LT(f.ci_low, 0.5);
    EXPECT_GT(f.ci_high, 0.5);
}

// ---------------------------------------------------------------------------
// Error walks.

TEST(ErrorWalk, CommutingChainStatistics) {
    const HardLayer l = iswap_layer(0.01);
    const Circuit c = make_chain(l, 64);
    std::vector<std::size_t> depths;
    for (std::size_t d = 4; d <= 64; d += 4) depths.push_back(d);
    const ErrorWalkData w = compute_error_walk(c, depths, 400, 7, all_paulis(2), RealizationMode::kSharedPerRun, 2, 0);
    const double step = std::sqrt(3.0) * 0.01 * kPi / 4;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        EXPECT_NEAR(w.bare[i], static_cast<double>(depths[i]) * step, 1e-13);
        EXPECT_NEAR(w.expected_sq[i], static_cast<double>(depths[i]) * step * step, 1e-15);
        EXPECT_LE(std::abs(w.mean_sq[i].value - w.expected_sq[i]), 4 * w.mean_sq[i].standard_error);
    }
    ASSERT_TRUE(w.bare_fit && w.rms_fit);
    EXPECT_NEAR(w.bare_fit->exponent, 1.0, 1e-10);
    EXPECT_NEAR(w.rms_fit->exponent, 0.5, 0.1);
}

TEST(ErrorWalk, ZeroNoiseGivesZeroDistances) {
    const Circuit c = make_chain(iswap_layer(0.0), 8);
    const ErrorWalkData w = compute_error_walk(c, {1, 2, 4, 8}, 10, 1, all_paulis(2), RealizationMode::kSharedPerRun, 1, 0);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(w.bare[i], 0.0);
        EXPECT_EQ(w.rms[i], 0.0);
    }
    EXPECT_FALSE(w.rms_fit.has_value());
}

// ---------------------------------------------------------------------------
// Configuration.

TEST(Config, DefaultsAndOverrides) {
    const ExperimentConfig c = parse_config(nlohmann::json::object(), "fidelity-sweep");
    EXPECT_EQ(c.experiment, "fidelity-sweep");
    EXPECT_EQ(c.gate, "cnot");
    const ExperimentConfig walk = parse_config(nlohmann::json::object(), "error-walk");
    EXPECT_EQ(walk.gate, "iswap");
    EXPECT_EQ(walk.resolved_depths().front(), 4u);
    EXPECT_EQ(walk.resolved_depths().back(), 256u);
    const ExperimentConfig x = parse_config({{"gate", "x-rotation"}, {"experiment", "filter-function"}});
    EXPECT_EQ(x.state, "0");
}

TEST(Config, ValidationErrorsNameTheKey) {
    auto message = [](const nlohmann::json& j, const std::string& exp = "ptm") {
        try {
            parse_config(j, exp);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message({{"nosie_strength", 0.1}}).find("nosie_strength"), std::string::npos);
    EXPECT_NE(message({{"shots", "many"}}).find("shots"), std::string::npos);
    EXPECT_NE(message({{"shots", 0}}).find("shots"), std::string::npos);
    EXPECT_NE(message({{"intervals", -4}}).find("intervals"), std::string::npos);
    EXPECT_NE(message({{"gate", "toffoli"}}).find("gate"), std::string::npos);
    EXPECT_NE(message({{"process", "pink"}}).find("process"), std::string::npos);
    EXPECT_NE(message({{"experiment", "error-walk"}}).find("experiment"), std::string::npos);
    EXPECT_NE(message({{"twirl_set", {"XX", "Q"}}}).find("twirl_set"), std::string::npos);
    EXPECT_NE(message({{"state", "2"}}).find("state"), std::string::npos);
    EXPECT_NE(message({{"pulse", "file"}}).find("pulse_file"), std::string::npos);
    EXPECT_THROW(parse_config(nlohmann::json::array()), ConfigError);
    EXPECT_THROW(parse_config(nlohmann::json::object()), ConfigError);
}

TEST(Config, SyntaxErrorsReportLineAndColumn) {
    try {
        parse_config_text("{\n  \"seed\": 3,\n  \"shots\": ,\n}", "ptm");
        FAIL() << "expected a parse error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Config, HashIgnoresThreadsAndOutputButTracksResults) {
    const ExperimentConfig a = parse_config({{"seed", 1}, {"threads", 1}, {"output_dir", "a"}}, "ptm");
    const ExperimentConfig b = parse_config({{"seed", 1}, {"threads", 8}, {"output_dir", "b"}}, "ptm");
    const ExperimentConfig c = parse_config({{"seed", 2}}, "ptm");
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(c));
    const nlohmann::json echo = to_json(a);
    EXPECT_EQ(echo.at("seed"), 1);
    EXPECT_FALSE(echo.contains("threads"));
    EXPECT_EQ(parse_config(echo, "ptm").seed, 1u);
    EXPECT_EQ(config_hash(parse_config(echo, "ptm")), config_hash(a));
}

TEST(Config, MissingPulseFileIsConfigError) {
    ExperimentConfig c = parse_config({{"pulse", "file"}, {"pulse_file", "/nonexistent/pulse.csv"}}, "fidelity-sweep");
    EXPECT_THROW(resolve_pulse(c, c.pulse, c.pulse_file), ConfigError);
}

// ---------------------------------------------------------------------------
// Experiments.

TEST(Experiments, FidelitySweepZeroRowAndOrdering) {
    ExperimentConfig c = parse_config({{"noise_strengths", {0.0, 0.01, 0.04}}, {"intervals", 256}, {"robust_pulse", "optimized"}}, "fidelity-sweep");
    const FidelitySweepData d = compute_fidelity_sweep(c);
    ASSERT_EQ(d.rows.size(), 3u);
    EXPECT_NEAR(d.rows[0].bare.fidelity.value, 1.0, 1e-12);
    EXPECT_NEAR(d.rows[0].rc.fidelity.value, 1.0, 1e-12);
    EXPECT_NEAR(d.rows[0].rc_robust->fidelity.value, 1.0, 1e-12);
    for (const auto& r : d.rows) {
        // The noiseless row agrees only to roundoff, about 1e-15.
        EXPECT_GE(r.rc.fidelity.value + 1e-12, r.bare.fidelity.value);
        EXPECT_GE(r.rc_robust->fidelity.value + 1e-12, r.rc.fidelity.value);
    }
}

TEST(Experiments, ZeroNoisePtmsAreIdentity) {
    ExperimentConfig c = parse_config({{"noise_strength", 0.0}, {"intervals", 256}}, "ptm");
    const PtmData d = compute_ptm(c);
    for (const auto* r : {&d.bare_trivial, &d.rc_trivial, &d.bare_robust, &d.rc_robust}) {
        EXPECT_LT((r->ptm.entries - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Experiments, PtmConditions) {
    ExperimentConfig c = parse_config({{"noise_strength", 0.02}, {"intervals", 256}}, "ptm");
    const PtmData d = compute_ptm(c);
    EXPECT_LE(d.rc_trivial.diagnostics.max_off_diagonal, d.rc_off_diagonal_bound);
    EXPECT_LE(d.rc_robust.diagnostics.max_off_diagonal, d.rc_off_diagonal_bound);
    EXPECT_GE(d.bare_trivial.diagnostics.max_off_diagonal, 1e-3);
    EXPECT_TRUE(d.robust_closer_to_one);
}

TEST(Experiments, ClosedCurveHasNoFluctuation) {
    ExperimentConfig c = parse_config({{"gate", "x-rotation"}, {"pulse", "constant"}, {"noise_strength", 0.0}, {"noise_std", 0.01},
                                       {"omega_points", 1024}},
                                      "filter-function");
    const FilterFunctionData d = compute_filter_function(c);
    EXPECT_LT(d.moments.fluctuation.components().sum(), 1e-20);
    for (const auto& k : d.checks) EXPECT_TRUE(k.passed) << k.name;
}

TEST(Experiments, RunWritesHeaderedArtifacts) {
    const fs::path dir = scratch("artifacts");
    ExperimentConfig c = parse_config({{"noise_strengths", {0.0, 0.02}}, {"intervals", 128}, {"robust_pulse", "none"}, {"seed", 11},
                                       {"output_dir", dir.string()}},
                                      "fidelity-sweep");
    const RunOutput out = run_experiment(c);
    ASSERT_FALSE(out.files.empty());
    const std::string csv = slurp(dir / "fidelity.csv");
    EXPECT_NE(csv.find("# config_hash: " + config_hash(c)), std::string::npos);
    EXPECT_NE(csv.find("# seed: 11"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "fidelity.json"));
    EXPECT_EQ(j.at("config_hash"), config_hash(c));
    EXPECT_EQ(j.at("config").at("seed"), 11);
}

// ---------------------------------------------------------------------------
// Command-line runner.

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli_codes");
    EXPECT_EQ(run_cli("no-such-experiment"), 2);
    EXPECT_EQ(run_cli("ptm --config " + (dir / "missing.json").string()), 2);
    std::ofstream(dir / "broken.json") << "{ \"seed\": }";
    EXPECT_EQ(run_cli("ptm --config " + (dir / "broken.json").string()), 2);
    EXPECT_EQ(run_cli("ptm --config " + write_config(dir, {{"shots", -1}}).string()), 2);
    // Heisenberg noise commutes with the iSWAP drive: no robust pulse exists.
    EXPECT_EQ(run_cli("pulse-opt --out " + dir.string() + " --config " +
                      write_config(dir, {{"gate", "iswap"}, {"duration", kPi / 4}, {"intervals", 128}}).string()),
              3);
    EXPECT_EQ(run_cli("filter-function --out " + dir.string() + " --config " +
                      write_config(dir, {{"process", "white"}, {"intervals", 128}, {"omega_points", 1024}}).string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "moments.json"));
}

TEST(Cli, OutputsAreByteIdenticalAcrossThreadCounts) {
    const fs::path a = scratch("cli_a"), b = scratch("cli_b"), cfgdir = scratch("cli_cfg");
    const fs::path cfg = write_config(cfgdir, {{"gate", "iswap"}, {"duration", kPi / 4}, {"intervals", 64}, {"max_depth", 32},
                                               {"runs", 40}, {"seed", 2024}});
    ASSERT_EQ(run_cli("error-walk --threads 1 --out " + a.string() + " --config " + cfg.string()), 0);
    ASSERT_EQ(run_cli("error-walk --threads 4 --out " + b.string() + " --config " + cfg.string()), 0);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
        ++compared;
    }
    EXPECT_GE(compared, 4u);
}
