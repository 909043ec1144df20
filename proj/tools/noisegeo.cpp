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

// Command-line experiment runner.
//
//   noisegeo <subcommand> [--config FILE] [--out DIR] [--seed N] [--threads N]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical check failure,
// 1 anything else.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "noisegeo/experiments.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

int run(const std::string& experiment, const Options& o) {
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw noisegeo::ConfigError("config: cannot open " + o.config);
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw noisegeo::ConfigError(o.config + ": " + e.what());
        }
    }
    if (o.seed) j["seed"] = *o.seed;
    if (o.threads) j["threads"] = *o.threads;
    if (o.out) j["output_dir"] = *o.out;
    const noisegeo::ExperimentConfig cfg = noisegeo::parse_config(j, experiment);
    std::cerr << "noisegeo " << experiment << ": config hash " << noisegeo::config_hash(cfg) << ", seed " << cfg.seed << "\n";
    const noisegeo::RunOutput result = noisegeo::run_experiment(cfg);
    for (const auto& k : result.checks) {
        std::cerr << "  check " << (k.passed ? "ok  " : "FAIL") << " " << k.name << ": error " << noisegeo::fmt(k.error)
                  << " (tolerance " << noisegeo::fmt(k.tolerance) << ")\n";
    }
    for (const auto& f : result.files) std::cout << f.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noisegeo: error geometry, twirling and filter-function experiments"};
    app.require_subcommand(1);
    Options o;
    std::string chosen;
    for (const auto& name : noisegeo::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", o.config, "flat JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (overrides output_dir)");
        sub->add_option("--seed", o.seed, "master seed (overrides seed)");
        sub->add_option("--threads", o.threads, "worker threads, 0 = hardware concurrency; outputs do not depend on it")
            ->check(CLI::NonNegativeNumber);
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return run(chosen, o);
    } catch (const noisegeo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const noisegeo::NumericalCheckError& e) {
        std::cerr << "numerical check failed: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
