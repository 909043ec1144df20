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
#include <optional>
#include <stdexcept>

#include "noisegeo/pauli.hpp"

namespace noisegeo {

/// A point of the (4^m - 1)-dimensional error space: the real coefficients of
/// a traceless Hermitian operator on the non-identity Pauli axes. Component
/// position p holds the axis with Pauli index p + 1.
template <class Real = double>
class BasicErrorVector {
   public:
    BasicErrorVector() = default;

    explicit BasicErrorVector(int num_qubits)
        : num_qubits_(num_qubits), components_(RVector<Real>::Zero(static_cast<Eigen::Index>(num_paulis(num_qubits) - 1))) {}

    BasicErrorVector(int num_qubits, RVector<Real> components) : num_qubits_(num_qubits), components_(std::move(components)) {
        if (static_cast<std::size_t>(components_.size()) != num_paulis(num_qubits) - 1) {
            throw std::invalid_argument("ErrorVector: expected 4^m - 1 components");
        }
    }

    /// Real parts of the non-identity Pauli coefficients of `op`.
    static BasicErrorVector from_operator(const CMatrix<Real>& op) {
        const int m = qubits_for_dim(op.rows());
        CVector<Real> c = expand_in_pauli_basis<Real>(op);
        BasicErrorVector out(m);
        for (Eigen::Index p = 1; p < c.size(); ++p) out.components_(p - 1) = c(p).real();
        return out;
    }

    int num_qubits() const { return num_qubits_; }
    std::size_t size() const { return static_cast<std::size_t>(components_.size()); }

    const RVector<Real>& components() const { return components_; }
    RVector<Real>& components() { return components_; }

    Real operator[](const PauliString& axis) const { return components_(position(axis)); }
    Real& operator[](const PauliString& axis) { return components_(position(axis)); }

    Real norm() const {
        using std::sqrt;
        return sqrt(components_.squaredNorm());
    }
    Real squared_norm() const { return components_.squaredNorm(); }

    /// sum_j R_j sigma_j.
    CMatrix<Real> to_operator() const {
        CVector<Real> c = CVector<Real>::Zero(static_cast<Eigen::Index>(num_paulis(num_qubits_)));
        for (Eigen::Index p = 0; p < components_.size(); ++p) c(p + 1) = components_(p);
        return from_pauli_coefficients<Real>(c, num_qubits_);
    }

    PauliString axis(std::size_t position) const { return PauliString(num_qubits_, position + 1); }

    BasicErrorVector& operator+=(const BasicErrorVector& o) {
        check(o);
        components_ += o.components_;
        return *this;
    }
    BasicErrorVector& operator-=(const BasicErrorVector& o) {
        check(o);
        components_ -= o.components_;
        return *this;
    }
    BasicErrorVector& operator*=(Real s) {
        components_ *= s;
        return *this;
    }
    friend BasicErrorVector operator+(BasicErrorVector a, const BasicErrorVector& b) { return a += b; }
    friend BasicErrorVector operator-(BasicErrorVector a, const BasicErrorVector& b) { return a -= b; }
    friend BasicErrorVector operator*(Real s, BasicErrorVector a) { return a *= s; }
    friend BasicErrorVector operator-(BasicErrorVector a) { return a *= Real(-1); }

   private:
    Eigen::Index position(const PauliString& axis) const {
        if (axis.num_qubits() != num_qubits_) throw std::invalid_argument("ErrorVector: axis qubit count mismatch");
        if (axis.is_identity()) throw std::invalid_argument("ErrorVector: the identity is not an error axis");
        return static_cast<Eigen::Index>(axis.index() - 1);
    }
    void check(const BasicErrorVector& o) const {
        if (o.num_qubits_ != num_qubits_) throw std::invalid_argument("ErrorVector: qubit count mismatch");
    }

    int num_qubits_ = 0;
    RVector<Real> components_;
};

using ErrorVector = BasicErrorVector<double>;

/// Per-gate Magnus error vectors, stored so that U_eps = exp(-i (r1 + r2 [+ r3]) . sigma).
template <class Real = double>
struct BasicMagnusOrders {
    BasicErrorVector<Real> r1;
    BasicErrorVector<Real> r2;
    std::optional<BasicErrorVector<Real>> r3;

    int num_qubits() const { return r1.num_qubits(); }
};

using MagnusOrders = BasicMagnusOrders<double>;

}  // namespace noisegeo
