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
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "noisegeo/error_vector.hpp"
#include "noisegeo/parallel.hpp"
#include "noisegeo/pauli.hpp"

namespace noisegeo {

/// Pauli transfer matrix: entries(j, k) = (1/D) Tr(sigma_j E(sigma_k)).
template <class Real = double>
struct BasicPTM {
    int num_qubits = 0;
    RMatrix<Real> entries;

    static BasicPTM identity(int m) {
        const auto n = static_cast<Eigen::Index>(num_paulis(m));
        return {m, RMatrix<Real>::Identity(n, n)};
    }
    std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
    Real operator()(std::size_t j, std::size_t k) const {
        return entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    }
};

using PTM = BasicPTM<double>;

/// exp(-i h) for Hermitian h in any scalar precision supported by Eigen.
template <class Real>
CMatrix<Real> expm_hermitian_generic(const CMatrix<Real>& h) {
    using std::cos;
    using std::sin;
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("expm_hermitian_generic: eigendecomposition failed");
    const auto& w = es.eigenvalues();
    CVector<Real> ph(w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) ph(k) = std::complex<Real>(cos(w(k)), -sin(w(k)));
    const CMatrix<Real>& v = es.eigenvectors();
    return v * ph.asDiagonal() * v.adjoint();
}

/// exp(-i R . sigma).
template <class Real>
CMatrix<Real> error_rotation(const BasicErrorVector<Real>& r) {
    return expm_hermitian_generic<Real>(r.to_operator());
}

/// Bare coherent channel P -> U P U^dag.
template <class Real>
BasicPTM<Real> exact_ptm(const CMatrix<Real>& u) {
    const int m = qubits_for_dim(u.rows());
    const auto n = static_cast<Eigen::Index>(num_paulis(m));
    BasicPTM<Real> out{m, RMatrix<Real>(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const CMatrix<Real> p = pauli_matrix<Real>(PauliString(m, static_cast<std::size_t>(k)));
        const CVector<Real> c = expand_in_pauli_basis<Real>(CMatrix<Real>(u * p * u.adjoint()));
        for (Eigen::Index j = 0; j < n; ++j) out.entries(j, k) = c(j).real();
    }
    return out;
}

/// Equal-weight average of the coherent channels of an ensemble; summation is
/// a pairwise tree in ensemble order, so the result does not depend on `threads`.
template <class Real>
BasicPTM<Real> exact_ptm(std::span<const CMatrix<Real>> ensemble, unsigned threads = 1) {
    if (ensemble.empty()) throw std::invalid_argument("exact_ptm: empty ensemble");
    std::vector<RMatrix<Real>> parts(ensemble.size());
    parallel_for(ensemble.size(), threads, [&](std::size_t i) { parts[i] = exact_ptm<Real>(ensemble[i]).entries; });
    const int m = qubits_for_dim(ensemble.front().rows());
    RMatrix<Real> sum = pairwise_sum<RMatrix<Real>>(parts);
    return {m, sum / Real(ensemble.size())};
}

/// Twirl average of a single error unitary: mean over T of T^dag U T.
template <class Real>
BasicPTM<Real> twirled_ptm(const CMatrix<Real>& u, const std::vector<PauliString>& twirl_set, unsigned threads = 1) {
    if (twirl_set.empty()) throw std::invalid_argument("twirled_ptm: empty twirl set");
    std::vector<CMatrix<Real>> dressed;
    for (const auto& t : twirl_set) {
        const CMatrix<Real> p = pauli_matrix<Real>(t);
        dressed.push_back(p.adjoint() * u * p);
    }
    return exact_ptm<Real>(std::span<const CMatrix<Real>>(dressed), threads);
}

template <class Real>
BasicPTM<Real> twirled_ptm(const CMatrix<Real>& u) {
    return twirled_ptm<Real>(u, all_paulis(qubits_for_dim(u.rows())));
}

struct PtmDiagnostics {
    double max_off_diagonal = 0;
    std::vector<double> diagonal;
    double average_fidelity = 0;
};

/// F_avg = (Tr(PTM) + D) / (D^2 + D) for trace-preserving channels.
template <class Real>
PtmDiagnostics ptm_diagnostics(const BasicPTM<Real>& p) {
    PtmDiagnostics d;
    const Eigen::Index n = p.entries.rows();
    double trace = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double v = static_cast<double>(p.entries(j, k));
            if (j == k) {
                d.diagonal.push_back(v);
                trace += v;
            } else {
                d.max_off_diagonal = std::max(d.max_off_diagonal, std::abs(v));
            }
        }
    }
    const double dim = static_cast<double>(hilbert_dim(p.num_qubits));
    d.average_fidelity = (trace + dim) / (dim * dim + dim);
    return d;
}

/// True when every diagonal entry of `candidate` is at least as close to 1 as
/// the matching entry of `reference` and at least one is strictly closer.
/// Entries within `tie` of each other count as equal; axes that commute with
/// all error terms sit at 1 up to propagation roundoff in both channels.
inline bool diagonal_closer_to_one(const PtmDiagnostics& candidate, const PtmDiagnostics& reference, double tie = 1e-12) {
    if (candidate.diagonal.size() != reference.diagonal.size()) throw std::invalid_argument("diagonal_closer_to_one: size mismatch");
    bool strict = false;
    for (std::size_t k = 0; k < candidate.diagonal.size(); ++k) {
        const double c = std::abs(1 - candidate.diagonal[k]), r = std::abs(1 - reference.diagonal[k]);
        if (c > r + tie) return false;
        strict = strict || c < r - tie;
    }
    return strict;
}

// ---------------------------------------------------------------------------
// Perturbative twirled diagonal.

/// Per-axis twirled diagonal coefficient split by perturbative order.
template <class Real = double>
struct BasicChannelExpansion {
    int num_qubits = 0;
    int through_order = 2;
    RVector<Real> order2;
    RVector<Real> order3;
    RVector<Real> order4;
    RVector<Real> diagonal;  // 1 + included orders; entry 0 is the identity axis

    Real coefficient(const PauliString& p) const { return diagonal(static_cast<Eigen::Index>(p.index())); }
};

using ChannelExpansion = BasicChannelExpansion<double>;

/// Diagonal of the twirled channel through order 2, 3 or 4 in the noise.
///
/// With R[n] the n-th order error in the 1/n! convention (R[2] = 2 r2,
/// R[3] = 6 r3 for stored orders), axis P receives
///   -2 sum_i R1_i (R1_i + R[2]_i)
///   + sum_i (2/3) R1_i (R1_i^3 - R[3]_i) - R[2]_i^2 / 2
///   + sum_{i != j, [s_i, s_j] = 0} 2 (R1_i R1_j)^2
/// where every sum runs over axes anticommuting with P and the pair sum is over
/// ordered pairs. No other cross terms are included.
template <class Real>
BasicChannelExpansion<Real> analytic_twirled_diagonal(const BasicMagnusOrders<Real>& o, int through_order) {
    if (through_order < 2 || through_order > 4) throw std::invalid_argument("analytic_twirled_diagonal: order must be 2, 3 or 4");
    const int m = o.num_qubits();
    const auto n = static_cast<Eigen::Index>(num_paulis(m));
    BasicChannelExpansion<Real> e{m, through_order, RVector<Real>::Zero(n), RVector<Real>::Zero(n), RVector<Real>::Zero(n),
                                  RVector<Real>::Ones(n)};
    const RVector<Real>& r1 = o.r1.components();
    const RVector<Real> big2 = Real(2) * o.r2.components();
    const RVector<Real> big3 = o.r3 ? RVector<Real>(Real(6) * o.r3->components()) : RVector<Real>::Zero(r1.size());
    const Eigen::Index axes = r1.size();

    for (Eigen::Index pi = 1; pi < n; ++pi) {
        const PauliString p(m, static_cast<std::size_t>(pi));
        std::vector<Eigen::Index> anti;
        for (Eigen::Index i = 0; i < axes; ++i) {
            if (!commutes(p, PauliString(m, static_cast<std::size_t>(i + 1)))) anti.push_back(i);
        }
        Real s2 = 0, s3 = 0, s4 = 0;
        for (Eigen::Index i : anti) {
            s2 += -Real(2) * r1(i) * r1(i);
            s3 += -Real(2) * r1(i) * big2(i);
            s4 += Real(2) * r1(i) * (r1(i) * r1(i) * r1(i) - big3(i)) / Real(3) - big2(i) * big2(i) / Real(2);
        }
        for (Eigen::Index i : anti) {
            for (Eigen::Index j : anti) {
                if (i == j) continue;
                if (!commutes(PauliString(m, static_cast<std::size_t>(i + 1)), PauliString(m, static_cast<std::size_t>(j + 1)))) continue;
                const Real q = r1(i) * r1(j);
                s4 += Real(2) * q * q;
            }
        }
        e.order2(pi) = s2;
        e.order3(pi) = s3;
        e.order4(pi) = s4;
        Real d = Real(1) + s2;
        if (through_order >= 3) d += s3;
        if (through_order >= 4) d += s4;
        e.diagonal(pi) = d;
    }
    return e;
}

/// Order-2 twirled diagonal from ensemble second moments <R1_j^2>, for
/// stochastic noise where single-realization products are not meaningful.
inline ChannelExpansion analytic_twirled_diagonal_from_moments(const ErrorVector& second_moments) {
    const int m = second_moments.num_qubits();
    const auto n = static_cast<Eigen::Index>(num_paulis(m));
    ChannelExpansion e{m, 2, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
    for (Eigen::Index pi = 1; pi < n; ++pi) {
        const PauliString p(m, static_cast<std::size_t>(pi));
        double s2 = 0;
        for (std::size_t i = 0; i < second_moments.size(); ++i) {
            if (!commutes(p, second_moments.axis(i))) s2 -= 2 * second_moments.components()(static_cast<Eigen::Index>(i));
        }
        e.order2(pi) = s2;
        e.diagonal(pi) = 1 + s2;
    }
    return e;
}

// ---------------------------------------------------------------------------
// Export.

inline void write_ptm_csv(std::ostream& out, const PTM& p) {
    const auto labels = all_paulis(p.num_qubits);
    out << "row";
    for (const auto& l : labels) out << "," << l.label();
    out << "\n";
    char buf[40];
    for (Eigen::Index j = 0; j < p.entries.rows(); ++j) {
        out << labels[static_cast<std::size_t>(j)].label();
        for (Eigen::Index k = 0; k < p.entries.cols(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", p.entries(j, k));
            out << "," << buf;
        }
        out << "\n";
    }
}

inline nlohmann::json ptm_to_json(const PTM& p) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : all_paulis(p.num_qubits)) labels.push_back(l.label());
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index j = 0; j < p.entries.rows(); ++j) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < p.entries.cols(); ++k) row.push_back(p.entries(j, k));
        rows.push_back(row);
    }
    return {{"num_qubits", p.num_qubits}, {"labels", labels}, {"entries", rows}};
}

inline nlohmann::json to_json(const PtmDiagnostics& d) {
    return {{"max_off_diagonal", d.max_off_diagonal}, {"diagonal", d.diagonal}, {"average_fidelity", d.average_fidelity}};
}

}  // namespace noisegeo
