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
#include <complex>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <utility>
#include <ostream>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "noisegeo/geometry.hpp"
#include "noisegeo/parallel.hpp"

namespace noisegeo {

// Two-sided power spectral densities with <eps(t) eps(t')> = int S(w) e^{iw(t-t')} dw.
struct DeltaAtZero {
    double variance = 0;
};
struct WhiteSpectrum {
    double level = 0;
};
struct LorentzianSpectrum {
    double variance = 0;
    double tau_c = 1;
};
struct TabulatedSpectrum {
    std::vector<double> omega;
    std::vector<double> density;
};
using Spectrum = std::variant<DeltaAtZero, WhiteSpectrum, LorentzianSpectrum, TabulatedSpectrum>;

inline Spectrum spectrum_of(const NoiseProcess& p) {
    validate_process(p);
    if (const auto* q = std::get_if<QuasiStatic>(&p)) return DeltaAtZero{q->std * q->std};
    if (const auto* o = std::get_if<OrnsteinUhlenbeck>(&p)) return LorentzianSpectrum{o->sigma * o->sigma, o->tau_c};
    if (const auto* w = std::get_if<WhiteNoise>(&p)) return WhiteSpectrum{w->level};
    const auto& t = std::get<TabulatedPsd>(p);
    return TabulatedSpectrum{t.omega, t.density};
}

inline void validate_spectrum(const Spectrum& s) {
    if (const auto* d = std::get_if<DeltaAtZero>(&s)) {
        if (!(d->variance >= 0)) throw std::invalid_argument("spectrum: negative variance");
    } else if (const auto* w = std::get_if<WhiteSpectrum>(&s)) {
        if (!(w->level >= 0)) throw std::invalid_argument("spectrum: negative white-noise level");
    } else if (const auto* l = std::get_if<LorentzianSpectrum>(&s)) {
        if (!(l->variance >= 0)) throw std::invalid_argument("spectrum: negative variance");
        if (!(l->tau_c > 0)) throw std::invalid_argument("spectrum: correlation time must be positive");
    } else {
        validate_process(TabulatedPsd{std::get<TabulatedSpectrum>(s).omega, std::get<TabulatedSpectrum>(s).density, 0});
    }
}

/// Continuous part of S(w); the delta spectrum has none.
inline double spectral_density(const Spectrum& s, double omega) {
    if (std::holds_alternative<DeltaAtZero>(s)) return 0;
    if (const auto* w = std::get_if<WhiteSpectrum>(&s)) return w->level;
    if (const auto* l = std::get_if<LorentzianSpectrum>(&s)) {
        return l->variance * l->tau_c / (std::numbers::pi * (1 + omega * omega * l->tau_c * l->tau_c));
    }
    const auto& t = std::get<TabulatedSpectrum>(s);
    if (omega < t.omega.front() || omega > t.omega.back()) return 0;
    auto it = std::upper_bound(t.omega.begin(), t.omega.end(), omega);
    if (it == t.omega.end()) return t.density.back();
    const auto k = static_cast<std::size_t>(it - t.omega.begin());
    const double u = (omega - t.omega[k - 1]) / (t.omega[k] - t.omega[k - 1]);
    return (1 - u) * t.density[k - 1] + u * t.density[k];
}

/// Per-source spectra plus optional cross-spectra. Sources are independent
/// unless a pair is declared correlated, and a declared pair must carry a
/// cross-spectrum.
struct NoiseSpectra {
    struct Cross {
        std::size_t i = 0;
        std::size_t k = 0;
        std::optional<Spectrum> spectrum;
    };
    std::vector<Spectrum> auto_spectra;
    std::vector<Cross> cross;

    static NoiseSpectra of(const HamiltonianSchedule& s) {
        NoiseSpectra out;
        for (const auto& n : s.noise()) out.auto_spectra.push_back(spectrum_of(n.process));
        return out;
    }

    void validate(std::size_t sources) const {
        if (auto_spectra.size() != sources) throw std::invalid_argument("spectra: one spectrum per noise source required");
        for (const auto& s : auto_spectra) validate_spectrum(s);
        for (const auto& c : cross) {
            if (c.i >= sources || c.k >= sources || c.i == c.k) throw std::invalid_argument("spectra: bad correlated pair");
            if (!c.spectrum) {
                throw std::invalid_argument("spectra: missing cross-spectrum for correlated sources " + std::to_string(c.i) +
                                            " and " + std::to_string(c.k));
            }
            validate_spectrum(*c.spectrum);
        }
    }
};

// ---------------------------------------------------------------------------
// Realization synthesis.

namespace detail {

inline std::vector<double> synthesize_row(const NoiseProcess& p, const TimeGrid& g, std::uint64_t seed) {
    validate_process(p);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double mean = process_mean(p);
    std::vector<double> row(g.size(), mean);
    if (is_deterministic(p)) return row;

    if (const auto* q = std::get_if<QuasiStatic>(&p)) {
        std::fill(row.begin(), row.end(), mean + q->std * normal(rng));
    } else if (const auto* o = std::get_if<OrnsteinUhlenbeck>(&p)) {
        // Exact AR(1) discretization, stationary start.
        const double rho = std::exp(-g.dt() / o->tau_c);
        const double kick = o->sigma * std::sqrt(1 - rho * rho);
        double x = o->sigma * normal(rng);
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k > 0) x = rho * x + kick * normal(rng);
            row[k] = mean + x;
        }
    } else if (const auto* w = std::get_if<WhiteNoise>(&p)) {
        const double scale = std::sqrt(2 * std::numbers::pi * w->level / g.dt());
        for (double& v : row) v = mean + scale * normal(rng);
    } else {
        // Random-phase superposition on the positive half of the table; each
        // component carries variance 2 S(w_k) dw_k.
        const auto& t = std::get<TabulatedPsd>(p);
        for (std::size_t k = 0; k < t.omega.size(); ++k) {
            if (t.omega[k] < 0) continue;
            const double lo = k > 0 ? std::max(0.0, 0.5 * (t.omega[k - 1] + t.omega[k])) : t.omega[k];
            const double hi = k + 1 < t.omega.size() ? 0.5 * (t.omega[k] + t.omega[k + 1]) : t.omega[k];
            const double weight = 2.0 * t.density[k] * (hi - lo);
            const double a = normal(rng), b = normal(rng);
            if (weight <= 0) continue;
            const double amp = std::sqrt(weight);
            for (std::size_t j = 0; j < row.size(); ++j) {
                const double ph = t.omega[k] * g.time(j);
                row[j] += amp * (a * std::cos(ph) + b * std::sin(ph));
            }
        }
    }
    return row;
}

}  // namespace detail

/// One realization per noise term of `s`; each term draws from its own
/// derived stream so results do not depend on the number of terms drawn before.
inline NoiseRealization synthesize_realization(const HamiltonianSchedule& s, std::uint64_t seed) {
    NoiseRealization r;
    r.seed = seed;
    for (std::size_t i = 0; i < s.noise().size(); ++i) {
        r.samples.push_back(detail::synthesize_row(s.noise()[i].process, s.grid(), derive_seed(seed, {kNoiseStream, i})));
    }
    return r;
}

/// Realization of a single process on `grid`; mirrors synthesize_realization for one term.
inline std::vector<double> synthesize_samples(const NoiseProcess& p, const TimeGrid& grid, std::uint64_t seed) {
    return detail::synthesize_row(p, grid, seed);
}

/// The mean profile as a realization: every term at its process mean.
inline NoiseRealization mean_realization(const HamiltonianSchedule& s) {
    std::vector<double> means;
    for (const auto& n : s.noise()) means.push_back(process_mean(n.process));
    return NoiseRealization::constant(s, means);
}

// ---------------------------------------------------------------------------
// Filter functions.

/// F_j(w) = int_0^T C(s) r'_j(s) e^{iws} ds on each axis.
///
/// The integrand C r'_j is taken piecewise linear between grid samples and
/// integrated exactly against e^{iws}. At w = 0 this is the trapezoidal rule,
/// and int |F|^2 dw equals 2 pi int (C r'_j)^2 dt for the same interpolant.
struct FilterFunction {
    int num_qubits = 0;
    std::vector<double> omega;
    Eigen::MatrixXcd values;  // omega.size() x (4^m - 1)

    std::vector<std::size_t> active_axes(double tol = 1e-12) const {
        std::vector<std::size_t> out;
        for (Eigen::Index p = 0; p < values.cols(); ++p) {
            if (values.col(p).cwiseAbs().maxCoeff() > tol) out.push_back(static_cast<std::size_t>(p));
        }
        return out;
    }
};

namespace detail {

// Weights (alpha, beta) with int_0^h f(u) e^{iwu} du = alpha f(0) + beta f(h)
// for linear f.
inline std::pair<std::complex<double>, std::complex<double>> linear_fourier_weights(double w, double h) {
    using C = std::complex<double>;
    const double x = w * h;
    C i0, i1;  // int_0^h e^{iwu} du and (1/h) int_0^h u e^{iwu} du
    if (std::abs(x) < 0.25) {
        // h^{p+1} sum_n (ix)^n / (n! (n + p + 1)) for p = 0, 1.
        C term = 1.0, s0 = 0.0, s1 = 0.0;
        for (int k = 0; k < 20; ++k) {
            s0 += term / double(k + 1);
            s1 += term / double(k + 2);
            term *= C(0, x) / double(k + 1);
        }
        i0 = h * s0;
        i1 = h * s1;
    } else {
        const C e = std::polar(1.0, x);
        i0 = (e - 1.0) / C(0, w);
        i1 = (h * e / C(0, w) + (e - 1.0) / (w * w)) / h;
    }
    return {i0 - i1, i1};
}

}  // namespace detail

inline FilterFunction filter_function(const ErrorCurve& c, std::span<const double> omega) {
    const std::size_t n = c.grid.size();
    const double dt = c.grid.dt();
    std::vector<Eigen::Index> axes;
    for (auto p : c.active_axes(0.0)) axes.push_back(static_cast<Eigen::Index>(p));
    Eigen::MatrixXd f(static_cast<Eigen::Index>(n), c.derivative.cols());
    for (std::size_t k = 0; k < n; ++k) {
        f.row(static_cast<Eigen::Index>(k)) = c.amplitude[k] * c.derivative.row(static_cast<Eigen::Index>(k));
    }
    FilterFunction out{c.num_qubits, {omega.begin(), omega.end()},
                       Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(omega.size()), c.derivative.cols())};
    std::vector<std::complex<double>> phase(n);
    for (std::size_t q = 0; q < omega.size(); ++q) {
        const auto [alpha, beta] = detail::linear_fourier_weights(omega[q], dt);
        for (std::size_t k = 0; k < n; ++k) phase[k] = std::polar(1.0, omega[q] * c.grid.time(k));
        for (Eigen::Index p : axes) {
            // Interval k contributes e^{iw t_k} (alpha f_k + beta f_{k+1}).
            std::complex<double> left = 0, right = 0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left += f(static_cast<Eigen::Index>(k), p) * phase[k];
                right += f(static_cast<Eigen::Index>(k + 1), p) * phase[k];
            }
            out.values(static_cast<Eigen::Index>(q), p) = alpha * left + beta * right;
        }
    }
    return out;
}

/// Symmetric grid of `points` samples on |w| <= cutoff_periods * 2 pi / T.
inline std::vector<double> symmetric_omega_grid(double duration, std::size_t points = 4096, double cutoff_periods = 64) {
    if (points < 3) throw std::invalid_argument("omega grid needs at least 3 points");
    const double w = cutoff_periods * 2 * std::numbers::pi / duration;
    std::vector<double> out(points);
    for (std::size_t k = 0; k < points; ++k) out[k] = -w + 2 * w * static_cast<double>(k) / static_cast<double>(points - 1);
    return out;
}

inline void write_filter_function_csv(std::ostream& out, const FilterFunction& f) {
    const auto axes = f.active_axes();
    out << "omega";
    for (auto p : axes) {
        const auto label = PauliString(f.num_qubits, p + 1).label();
        out << ",Re_" << label << ",Im_" << label;
    }
    out << "\n";
    char buf[40];
    for (std::size_t q = 0; q < f.omega.size(); ++q) {
        std::snprintf(buf, sizeof buf, "%.17g", f.omega[q]);
        out << buf;
        for (auto p : axes) {
            const auto v = f.values(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p));
            std::snprintf(buf, sizeof buf, "%.17g", v.real());
            out << "," << buf;
            std::snprintf(buf, sizeof buf, "%.17g", v.imag());
            out << "," << buf;
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Second moments of the first-order error.

struct SpectralQuadrature {
    std::size_t omega_points = 4096;
    double cutoff_periods = 64;
    bool tail_correction = true;
    bool monitor_truncation = true;
};

struct SecondMoment {
    ErrorVector mean;               // <R_j>
    ErrorVector mean_term;          // <R_j>^2
    ErrorVector fluctuation;        // sum_ik int S_ik F*_ij F_kj dw
    ErrorVector total;              // mean_term + fluctuation
    double truncation_estimate = 0; // |fluctuation(doubled grid) - fluctuation| summed over axes
};

namespace detail {

// pi/2 - Si(x) for large x via the auxiliary functions f and g.
inline double si_complement(double x) {
    const double x2 = x * x;
    const double f = (1 - 2 / x2 + 24 / (x2 * x2) - 720 / (x2 * x2 * x2)) / x;
    const double g = (1 - 6 / x2 + 120 / (x2 * x2)) / x2;
    return f * std::cos(x) + g * std::sin(x);
}

// int_{|w|>W} S(w) F_a*(w) F_b(w) dw from the endpoint asymptotics
// F(w) ~ B(w) / (iw), B = f(T) e^{iwT} - f(0).
inline double spectral_tail(const Spectrum& s, double fa0, double faT, double fb0, double fbT, double T, double W) {
    const double steady = faT * fbT + fa0 * fb0;
    const double beat = faT * fb0 + fa0 * fbT;
    if (const auto* w = std::get_if<WhiteSpectrum>(&s)) {
        const double int_inv2 = 1 / W;
        const double int_cos = std::cos(T * W) / W - T * si_complement(T * W);
        return 2 * w->level * (steady * int_inv2 - beat * int_cos);
    }
    if (const auto* l = std::get_if<LorentzianSpectrum>(&s)) {
        // S ~ variance / (pi tau w^2); keep the non-oscillating 1/w^4 piece.
        const double c = l->variance / (std::numbers::pi * l->tau_c);
        return 2 * c * steady / (3 * W * W * W);
    }
    return 0;
}

struct CrossTerm {
    std::size_t i, k;
    const Spectrum* spectrum;
};

inline double fluctuation_on_axis(const std::vector<ErrorCurve>& curves, const std::vector<CrossTerm>& terms,
                                  const std::vector<FilterFunction>& ff, const std::vector<FilterFunction>& ff0,
                                  const std::vector<double>& omega, Eigen::Index axis, bool tail) {
    const double T = curves.front().grid.duration();
    const double dw = omega[1] - omega[0];
    double total = 0;
    for (const auto& t : terms) {
        const auto& s = *t.spectrum;
        if (const auto* d = std::get_if<DeltaAtZero>(&s)) {
            total += d->variance * (std::conj(ff0[t.i].values(0, axis)) * ff0[t.k].values(0, axis)).real();
            continue;
        }
        double acc = 0;
        const std::size_t n = omega.size();
        for (std::size_t q = 0; q < n; ++q) {
            const double w = (q == 0 || q + 1 == n) ? 0.5 : 1.0;
            const auto qi = static_cast<Eigen::Index>(q);
            acc += w * spectral_density(s, omega[q]) * (std::conj(ff[t.i].values(qi, axis)) * ff[t.k].values(qi, axis)).real();
        }
        total += acc * dw;
        if (tail) {
            const auto& ci = curves[t.i];
            const auto& ck = curves[t.k];
            const Eigen::Index last = static_cast<Eigen::Index>(ci.grid.size() - 1);
            total += spectral_tail(s, ci.amplitude.front() * ci.derivative(0, axis), ci.amplitude.back() * ci.derivative(last, axis),
                                   ck.amplitude.front() * ck.derivative(0, axis), ck.amplitude.back() * ck.derivative(last, axis),
                                   T, omega.back());
        }
    }
    return total;
}

inline ErrorVector fluctuation_moments(const std::vector<ErrorCurve>& curves, const NoiseSpectra& spectra, std::size_t points,
                                       double cutoff_periods, bool tail) {
    const int m = curves.front().num_qubits;
    std::vector<CrossTerm> terms;
    for (std::size_t i = 0; i < curves.size(); ++i) terms.push_back({i, i, &spectra.auto_spectra[i]});
    for (const auto& c : spectra.cross) {
        terms.push_back({c.i, c.k, &*c.spectrum});
        terms.push_back({c.k, c.i, &*c.spectrum});
    }
    const double T = curves.front().grid.duration();
    std::vector<double> omega = symmetric_omega_grid(T, points, cutoff_periods);
    const std::vector<double> zero{0.0};
    std::vector<FilterFunction> ff, ff0;
    for (const auto& c : curves) {
        ff.push_back(filter_function(c, omega));
        ff0.push_back(filter_function(c, zero));
    }
    ErrorVector out(m);
    for (Eigen::Index p = 0; p < out.components().size(); ++p) {
        // Tabulated spectra use their own grid; fold them in through a dedicated pass.
        std::vector<CrossTerm> smooth, tabulated;
        for (const auto& t : terms) (std::holds_alternative<TabulatedSpectrum>(*t.spectrum) ? tabulated : smooth).push_back(t);
        double v = fluctuation_on_axis(curves, smooth, ff, ff0, omega, p, tail);
        for (const auto& t : tabulated) {
            const auto& tab = std::get<TabulatedSpectrum>(*t.spectrum);
            const FilterFunction fi = filter_function(curves[t.i], tab.omega);
            const FilterFunction fk = t.i == t.k ? fi : filter_function(curves[t.k], tab.omega);
            double acc = 0;
            for (std::size_t q = 0; q + 1 < tab.omega.size(); ++q) {
                const auto a = static_cast<Eigen::Index>(q), b = a + 1;
                const double ga = tab.density[q] * (std::conj(fi.values(a, p)) * fk.values(a, p)).real();
                const double gb = tab.density[q + 1] * (std::conj(fi.values(b, p)) * fk.values(b, p)).real();
                acc += 0.5 * (ga + gb) * (tab.omega[q + 1] - tab.omega[q]);
            }
            v += acc;
        }
        out.components()(p) = v;
    }
    return out;
}

}  // namespace detail

/// <(R_j^{(1)})^2> = (sum_i <R_ij>)^2 + sum_ik int S_ik(w) F*_ij(w) F_kj(w) dw.
///
/// `means` holds one mean profile per source on the curve grid; an empty
/// vector means zero-mean noise.
inline SecondMoment second_moment(const std::vector<ErrorCurve>& curves, const NoiseSpectra& spectra,
                                  const std::vector<std::vector<double>>& means = {}, const SpectralQuadrature& quad = {}) {
    if (curves.empty()) throw std::invalid_argument("second_moment: no error curves");
    spectra.validate(curves.size());
    if (!means.empty() && means.size() != curves.size()) throw std::invalid_argument("second_moment: one mean profile per source");
    const int m = curves.front().num_qubits;
    for (const auto& c : curves) {
        if (!(c.grid == curves.front().grid)) throw std::invalid_argument("second_moment: curves on different grids");
    }

    SecondMoment out{ErrorVector(m), ErrorVector(m), ErrorVector(m), ErrorVector(m), 0};
    for (std::size_t i = 0; i < means.size(); ++i) out.mean += first_order_error(curves[i], means[i]);
    out.mean_term.components() = out.mean.components().array().square().matrix();

    out.fluctuation = detail::fluctuation_moments(curves, spectra, quad.omega_points, quad.cutoff_periods, quad.tail_correction);
    if (quad.monitor_truncation) {
        const ErrorVector doubled = detail::fluctuation_moments(curves, spectra, 2 * quad.omega_points - 1,
                                                                2 * quad.cutoff_periods, quad.tail_correction);
        out.truncation_estimate = (doubled.components() - out.fluctuation.components()).cwiseAbs().sum();
    }
    out.total = out.mean_term + out.fluctuation;
    return out;
}

/// Time-domain route for white noise: 2 pi S0 int (C r'_j)^2 dt per axis for a
/// single source, with C r'_j piecewise linear as in filter_function.
inline ErrorVector white_noise_time_moment(const ErrorCurve& c, double level) {
    ErrorVector out(c.num_qubits);
    const std::size_t n = c.grid.size();
    for (Eigen::Index p = 0; p < c.derivative.cols(); ++p) {
        double acc = 0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double a = c.amplitude[k] * c.derivative(static_cast<Eigen::Index>(k), p);
            const double b = c.amplitude[k + 1] * c.derivative(static_cast<Eigen::Index>(k + 1), p);
            acc += (a * a + a * b + b * b) / 3;
        }
        out.components()(p) = 2 * std::numbers::pi * level * acc * c.grid.dt();
    }
    return out;
}

}  // namespace noisegeo
