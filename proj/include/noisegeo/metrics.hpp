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
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "noisegeo/circuit.hpp"
#include "noisegeo/parallel.hpp"
#include "noisegeo/twirl.hpp"

namespace noisegeo {

inline constexpr double kNormTolerance = 1e-9;

/// |<target|psi>|^2.
inline double state_fidelity(const CVec& psi, const CVec& target) {
    if (psi.size() != target.size()) throw std::invalid_argument("state_fidelity: dimension mismatch");
    if (std::abs(psi.norm() - 1) > kNormTolerance || std::abs(target.norm() - 1) > kNormTolerance) {
        throw std::invalid_argument("state_fidelity: states must be normalized");
    }
    return std::clamp(std::norm(target.dot(psi)), 0.0, 1.0);
}

/// <target|rho|target>.
inline double state_fidelity(const CMat& rho, const CVec& target) {
    if (rho.rows() != target.size() || rho.cols() != target.size()) throw std::invalid_argument("state_fidelity: dimension mismatch");
    if (std::abs(rho.trace().real() - 1) > kNormTolerance) throw std::invalid_argument("state_fidelity: density matrix trace is not 1");
    if (std::abs(target.norm() - 1) > kNormTolerance) throw std::invalid_argument("state_fidelity: target must be normalized");
    return std::clamp((target.adjoint() * rho * target)(0, 0).real(), 0.0, 1.0);
}

struct Estimate {
    double value = 0;
    double standard_error = 0;
    std::size_t samples = 0;
};

/// Mean with a batch-means standard error; samples are split into `batches`
/// contiguous blocks in index order.
inline Estimate batch_mean(std::span<const double> samples, std::size_t batches = 10) {
    if (samples.empty()) throw std::invalid_argument("batch_mean: no samples");
    Estimate e;
    e.samples = samples.size();
    e.value = pairwise_sum<double>(samples) / static_cast<double>(samples.size());
    const std::size_t b = std::min(batches, samples.size());
    if (b < 2) return e;
    std::vector<double> means;
    for (std::size_t k = 0; k < b; ++k) {
        const std::size_t lo = k * samples.size() / b, hi = (k + 1) * samples.size() / b;
        means.push_back(pairwise_sum<double>(samples.subspan(lo, hi - lo)) / static_cast<double>(hi - lo));
    }
    double var = 0;
    for (double m : means) var += (m - e.value) * (m - e.value);
    var /= static_cast<double>(b - 1);
    e.standard_error = std::sqrt(var / static_cast<double>(b));
    return e;
}

/// Mean with the plain i.i.d. standard error.
inline Estimate sample_mean(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("sample_mean: no samples");
    Estimate e;
    e.samples = samples.size();
    e.value = pairwise_sum<double>(samples) / static_cast<double>(samples.size());
    if (samples.size() < 2) return e;
    double var = 0;
    for (double v : samples) var += (v - e.value) * (v - e.value);
    var /= static_cast<double>(samples.size() - 1);
    e.standard_error = std::sqrt(var / static_cast<double>(samples.size()));
    return e;
}

// ---------------------------------------------------------------------------
// Randomized-compiling fidelity.

struct RcPolicy {
    std::vector<PauliString> twirl_set;  // empty: no twirling
    bool enumerate = false;              // all assignments instead of sampling
    std::size_t shots = 1;               // sampled assignments, or realizations per assignment when enumerating
    std::uint64_t seed = 0;
    RealizationMode realization_mode = RealizationMode::kSharedPerRun;
    unsigned threads = 1;
    std::size_t batches = 10;
};

struct RcResult {
    Estimate fidelity;
    CMat average_state;
};

namespace detail {

inline bool circuit_noise_is_deterministic(const Circuit& c) {
    for (const HardLayer* h : c.hard_layers()) {
        for (const auto& n : h->schedule().noise()) {
            if (!is_deterministic(n.process)) return false;
        }
    }
    return true;
}

}  // namespace detail

/// Noisy circuit unitaries, one per (assignment, realization) sample of the
/// policy, in sample order. Deterministic noise is propagated once per
/// distinct layer through the cache.
inline std::vector<CMat> rc_sample_unitaries(const Circuit& c, const RcPolicy& policy, NoisyUnitaryCache* cache = nullptr) {
    if (policy.shots < 1) throw std::invalid_argument("rc: shots must be >= 1");
    const bool deterministic = detail::circuit_noise_is_deterministic(c);
    const bool twirl = !policy.twirl_set.empty();

    std::vector<TwirlAssignment> enumerated;
    if (twirl && policy.enumerate) enumerated = enumerate_twirl_assignments(c, policy.twirl_set);
    std::size_t samples = policy.shots;
    if (!twirl && deterministic) samples = 1;
    if (twirl && policy.enumerate) samples = enumerated.size() * (deterministic ? 1 : policy.shots);

    NoisyUnitaryCache local;
    NoisyUnitaryCache* use_cache = deterministic ? (cache ? cache : &local) : nullptr;
    const std::vector<NoiseRealization> fixed = deterministic ? mean_realizations(c) : std::vector<NoiseRealization>{};

    std::vector<CMat> out(samples);
    parallel_for(samples, policy.threads, [&](std::size_t s) {
        std::uint64_t noise_run = s;
        const Circuit* run = &c;
        Circuit twirled;
        if (twirl) {
            if (policy.enumerate) {
                twirled = apply_twirls(c, enumerated[s % enumerated.size()]);
                noise_run = s / enumerated.size();
            } else {
                twirled = apply_twirls(c, sample_twirls(c, policy.seed, s, policy.twirl_set));
            }
            run = &twirled;
        }
        const auto noise = deterministic ? fixed : draw_realizations(c, policy.seed, noise_run, policy.realization_mode);
        out[s] = simulate_exact_unitary(*run, noise, use_cache);
    });
    return out;
}

/// True when the policy's estimate has no sampling noise.
inline bool rc_is_exact(const Circuit& c, const RcPolicy& policy) {
    return detail::circuit_noise_is_deterministic(c) && (policy.twirl_set.empty() || policy.enumerate);
}

/// Fidelity of the output density matrix averaged over (assignment,
/// realization) samples. Exact averages report a zero standard error.
inline RcResult rc_average_fidelity(const Circuit& c, const RcPolicy& policy, const CVec& initial, const CVec& target,
                                    NoisyUnitaryCache* cache = nullptr) {
    if (initial.size() != static_cast<Eigen::Index>(c.dim())) throw std::invalid_argument("rc_average_fidelity: state dimension mismatch");
    const auto unitaries = rc_sample_unitaries(c, policy, cache);
    std::vector<double> fid(unitaries.size());
    std::vector<CMat> rho(unitaries.size());
    for (std::size_t s = 0; s < unitaries.size(); ++s) {
        const CVec psi = unitaries[s] * initial;
        fid[s] = state_fidelity(psi, target);
        rho[s] = psi * psi.adjoint();
    }
    RcResult r;
    r.fidelity = batch_mean(fid, policy.batches);
    if (rc_is_exact(c, policy)) r.fidelity.standard_error = 0;
    r.average_state = pairwise_sum<CMat>(rho) / static_cast<double>(unitaries.size());
    return r;
}

// ---------------------------------------------------------------------------
// Scaling fits.

struct ScalingSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> spread;  // optional ensemble standard deviation per x
};

struct ScalingFit {
    double exponent = 0;
    double prefactor = 0;  // y ~ prefactor * x^exponent
    double standard_error = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::size_t points = 0;
    std::size_t skipped = 0;
};

/// Least-squares slope of log y against log x after dropping the first `skip`
/// points; 95% interval from the residual variance (normal approximation).
inline ScalingFit fit_scaling_exponent(const ScalingSeries& s, std::size_t skip = 0) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("fit_scaling_exponent: x and y differ in length");
    if (s.x.size() < skip + 6) throw std::invalid_argument("fit_scaling_exponent: need at least 6 points after skipping");
    std::vector<double> lx, ly;
    for (std::size_t k = skip; k < s.x.size(); ++k) {
        if (!(s.x[k] > 0) || !(s.y[k] > 0) || !std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) {
            throw std::invalid_argument("fit_scaling_exponent: values must be positive and finite");
        }
        lx.push_back(std::log(s.x[k]));
        ly.push_back(std::log(s.y[k]));
    }
    const auto [mn, mx] = std::minmax_element(lx.begin(), lx.end());
    if (*mx - *mn < std::log(10.0) - 1e-12) throw std::invalid_argument("fit_scaling_exponent: x must span at least one decade");
    const double n = static_cast<double>(lx.size());
    double mxv = 0, myv = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        mxv += lx[k];
        myv += ly[k];
    }
    mxv /= n;
    myv /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mxv) * (lx[k] - mxv);
        sxy += (lx[k] - mxv) * (ly[k] - myv);
    }
    ScalingFit f;
    f.exponent = sxy / sxx;
    const double intercept = myv - f.exponent * mxv;
    f.prefactor = std::exp(intercept);
    double rss = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        const double r = ly[k] - intercept - f.exponent * lx[k];
        rss += r * r;
    }
    f.standard_error = std::sqrt(rss / (n - 2) / sxx);
    f.ci_low = f.exponent - 1.96 * f.standard_error;
    f.ci_high = f.exponent + 1.96 * f.standard_error;
    f.points = lx.size();
    f.skipped = skip;
    return f;
}

}  // namespace noisegeo
