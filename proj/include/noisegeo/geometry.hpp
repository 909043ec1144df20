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

#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "noisegeo/error_vector.hpp"
#include "noisegeo/linalg.hpp"
#include "noisegeo/schedule.hpp"

namespace noisegeo {

/// Toggling-frame error curve of one noise term.
///
/// derivative(k, p) = r'_p(t_k) = (1/D) Tr(sigma_{p+1} U0^dag(t_k) dH U0(t_k)),
/// cumulative(k, p) = r_p(t_k) = int_0^{t_k} r'_p. The noise amplitude profile
/// C(t_k) is kept separately so that r' stays a pure frame quantity.
struct ErrorCurve {
    int num_qubits = 0;
    std::size_t noise_index = 0;
    TimeGrid grid;
    Eigen::MatrixXd derivative;
    Eigen::MatrixXd cumulative;
    std::vector<double> amplitude;

    std::size_t num_axes() const { return static_cast<std::size_t>(derivative.cols()); }

    /// Axis positions whose derivative is not identically zero.
    std::vector<std::size_t> active_axes(double tol = 1e-12) const {
        std::vector<std::size_t> out;
        for (Eigen::Index p = 0; p < derivative.cols(); ++p) {
            if (derivative.col(p).cwiseAbs().maxCoeff() > tol) out.push_back(static_cast<std::size_t>(p));
        }
        return out;
    }
};

inline ErrorCurve toggling_frame_curve(const HamiltonianSchedule& s, std::size_t noise_index, const std::vector<CMat>& u0) {
    if (noise_index >= s.noise().size()) throw std::invalid_argument("toggling_frame_curve: noise index out of range");
    if (u0.size() != s.grid().size()) throw std::invalid_argument("toggling_frame_curve: propagator grid mismatch");
    const CMat dh = s.noise()[noise_index].op.matrix();
    const std::size_t n = s.grid().size();
    const auto axes = static_cast<Eigen::Index>(num_paulis(s.num_qubits()) - 1);
    ErrorCurve c{s.num_qubits(), noise_index, s.grid(), Eigen::MatrixXd(n, axes), Eigen::MatrixXd(n, axes),
                 s.noise_amplitude(noise_index)};
    for (std::size_t k = 0; k < n; ++k) {
        const CMat toggled = u0[k].adjoint() * dh * u0[k];
        CVec coeffs = expand_in_pauli_basis<double>(toggled);
        for (Eigen::Index p = 0; p < axes; ++p) c.derivative(static_cast<Eigen::Index>(k), p) = coeffs(p + 1).real();
    }
    const double dt = s.grid().dt();
    c.cumulative.row(0).setZero();
    for (std::size_t k = 1; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        c.cumulative.row(i) = c.cumulative.row(i - 1) + 0.5 * dt * (c.derivative.row(i - 1) + c.derivative.row(i));
    }
    return c;
}

inline std::vector<ErrorCurve> toggling_frame_curves(const HamiltonianSchedule& s, const std::vector<CMat>& u0) {
    std::vector<ErrorCurve> out;
    for (std::size_t i = 0; i < s.noise().size(); ++i) out.push_back(toggling_frame_curve(s, i, u0));
    return out;
}

inline std::vector<ErrorCurve> toggling_frame_curves(const HamiltonianSchedule& s) {
    return toggling_frame_curves(s, propagate_noiseless(s));
}

namespace detail {

inline void check_noise_samples(const ErrorCurve& c, std::span<const double> eps) {
    if (eps.size() != c.grid.size()) throw std::invalid_argument("noise realization grid does not match the error curve grid");
}

/// Phi-dot_p(t_k) = sum_i C_i eps_i r'_{i,p}, one column per axis.
inline Eigen::MatrixXd phase_rate(const std::vector<ErrorCurve>& curves, const NoiseRealization& noise) {
    if (curves.empty()) throw std::invalid_argument("no error curves");
    if (noise.samples.size() != curves.size()) throw std::invalid_argument("realization does not cover every noise term");
    const auto& g = curves.front().grid;
    Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), curves.front().derivative.cols());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        if (!(c.grid == g)) throw std::invalid_argument("error curves are not on a common grid");
        check_noise_samples(c, noise.samples[i]);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double w = c.amplitude[k] * noise.samples[i][k];
            if (w != 0) rate.row(static_cast<Eigen::Index>(k)) += w * c.derivative.row(static_cast<Eigen::Index>(k));
        }
    }
    return rate;
}

inline double trapezoid_col(const Eigen::MatrixXd& m, Eigen::Index col, double dt) {
    const Eigen::Index n = m.rows();
    double s = 0.5 * (m(0, col) + m(n - 1, col));
    for (Eigen::Index k = 1; k + 1 < n; ++k) s += m(k, col);
    return s * dt;
}

}  // namespace detail

/// R_p = int_0^T C(s) eps(s) r'_p(s) ds for one noise term (trapezoidal).
inline ErrorVector first_order_error(const ErrorCurve& c, std::span<const double> eps) {
    detail::check_noise_samples(c, eps);
    ErrorVector r(c.num_qubits);
    const double dt = c.grid.dt();
    const std::size_t n = c.grid.size();
    for (Eigen::Index p = 0; p < c.derivative.cols(); ++p) {
        double s = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
            s += w * c.amplitude[k] * eps[k] * c.derivative(static_cast<Eigen::Index>(k), p);
        }
        r.components()(p) = s * dt;
    }
    return r;
}

inline ErrorVector first_order_error(const std::vector<ErrorCurve>& curves, const NoiseRealization& noise) {
    if (curves.empty()) throw std::invalid_argument("first_order_error: no error curves");
    if (noise.samples.size() != curves.size()) throw std::invalid_argument("realization does not cover every noise term");
    ErrorVector r(curves.front().num_qubits);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        if (!(curves[i].grid == curves.front().grid)) throw std::invalid_argument("error curves are not on a common grid");
        r += first_order_error(curves[i], noise.samples[i]);
    }
    return r;
}

/// Second Magnus order expressed as an error-space vector.
///
/// -1/2 int_0^T [Phi-dot(s), Phi(s)] ds = -i R2 . sigma. For anticommuting axes
/// sigma_a sigma_b = i^k sigma_c gives [sigma_a, sigma_b] = 2 i^k sigma_c, so
/// R2_c = sum_{a,b} (+1 if k == 1 else -1) int Phi-dot_a Phi_b ds. Phi is the
/// running trapezoid of Phi-dot and the outer integral is again trapezoidal.
inline ErrorVector second_order_error(const std::vector<ErrorCurve>& curves, const NoiseRealization& noise) {
    const Eigen::MatrixXd rate = detail::phase_rate(curves, noise);
    const int m = curves.front().num_qubits;
    const double dt = curves.front().grid.dt();
    const Eigen::Index n = rate.rows();

    std::vector<Eigen::Index> active;
    for (Eigen::Index p = 0; p < rate.cols(); ++p) {
        if (rate.col(p).cwiseAbs().maxCoeff() > 0) active.push_back(p);
    }
    Eigen::MatrixXd phase = Eigen::MatrixXd::Zero(n, rate.cols());
    for (Eigen::Index k = 1; k < n; ++k) phase.row(k) = phase.row(k - 1) + 0.5 * dt * (rate.row(k - 1) + rate.row(k));

    ErrorVector r2(m);
    Eigen::MatrixXd product(n, 1);
    for (Eigen::Index a : active) {
        for (Eigen::Index b : active) {
            PauliString pa(m, static_cast<std::size_t>(a + 1));
            PauliString pb(m, static_cast<std::size_t>(b + 1));
            if (commutes(pa, pb)) continue;
            const PauliProduct prod = pauli_mul(pa, pb);
            product.col(0) = rate.col(a).cwiseProduct(phase.col(b));
            const double integral = detail::trapezoid_col(product, 0, dt);
            const double sign = prod.phase_power == 1 ? 1.0 : -1.0;
            r2.components()(static_cast<Eigen::Index>(prod.product.index() - 1)) += sign * integral;
        }
    }
    return r2;
}

inline MagnusOrders magnus_orders(const std::vector<ErrorCurve>& curves, const NoiseRealization& noise, bool second = true) {
    MagnusOrders o{first_order_error(curves, noise), ErrorVector(curves.front().num_qubits), std::nullopt};
    if (second) o.r2 = second_order_error(curves, noise);
    return o;
}

/// U_eps = exp(-i (R1 + R2 [+ R3]) . sigma).
inline CMat error_unitary(const MagnusOrders& o) {
    ErrorVector total = o.r1 + o.r2;
    if (o.r3) total += *o.r3;
    return expm_hermitian(total.to_operator(), 1.0);
}

/// U0(T)^dag U(T) from the refined reference propagation; the ground truth
/// that the perturbative orders approximate.
inline CMat exact_error_unitary(const HamiltonianSchedule& s, const NoiseRealization& noise, int substeps = kReferenceSubsteps) {
    return reference_noiseless_unitary(s, substeps).adjoint() * propagate_noisy(s, noise, substeps);
}

/// CSV with a time column and one column per active axis of the curve.
inline void write_curve_csv(std::ostream& out, const ErrorCurve& c, bool cumulative = true) {
    const auto axes = c.active_axes();
    out << "t";
    for (auto p : axes) out << "," << PauliString(c.num_qubits, p + 1).label();
    out << "\n";
    const Eigen::MatrixXd& data = cumulative ? c.cumulative : c.derivative;
    char buf[40];
    for (std::size_t k = 0; k < c.grid.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", c.grid.time(k));
        out << buf;
        for (auto p : axes) {
            std::snprintf(buf, sizeof buf, "%.17g", data(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p)));
            out << "," << buf;
        }
        out << "\n";
    }
}

}  // namespace noisegeo
