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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "noisegeo/pauli.hpp"

namespace noisegeo {

template <class Real>
CMatrix<Real> kron(const CMatrix<Real>& a, const CMatrix<Real>& b) {
    CMatrix<Real> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline bool is_hermitian(const CMat& h, double tol = 1e-12) {
    return h.rows() == h.cols() && (h - h.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, h.cwiseAbs().maxCoeff());
}

inline bool is_unitary(const CMat& u, double tol = 1e-12) {
    if (u.rows() != u.cols()) return false;
    return (u.adjoint() * u - CMat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

/// exp(-i h t) for Hermitian h, by eigendecomposition.
inline CMat expm_hermitian(const CMat& h, double t = 1.0) {
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("expm_hermitian: eigendecomposition failed");
    const Eigen::VectorXd& w = es.eigenvalues();
    Eigen::VectorXcd phases(w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::polar(1.0, -w(k) * t);
    const CMat& v = es.eigenvectors();
    return v * phases.asDiagonal() * v.adjoint();
}

/// Largest entrywise deviation between a and b after removing the best global phase.
inline double phase_aligned_max_diff(const CMat& a, const CMat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("phase_aligned_max_diff: shape mismatch");
    std::complex<double> overlap = (b.adjoint() * a).trace();
    std::complex<double> phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : std::complex<double>(1, 0);
    return (a - phase * b).cwiseAbs().maxCoeff();
}

inline bool equal_up_to_global_phase(const CMat& a, const CMat& b, double tol) {
    return phase_aligned_max_diff(a, b) <= tol;
}

inline double operator_norm(const CMat& a) {
    Eigen::JacobiSVD<CMat> svd(a);
    return svd.singularValues()(0);
}

}  // namespace noisegeo
