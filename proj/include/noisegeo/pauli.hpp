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

#include <bit>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace noisegeo {

template <class Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <class Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <class Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

using CMat = CMatrix<double>;
using CVec = CVector<double>;
using RVec = RVector<double>;

inline constexpr int kMaxQubits = 4;

inline std::size_t num_paulis(int num_qubits) { return std::size_t{1} << (2 * num_qubits); }
inline std::size_t hilbert_dim(int num_qubits) { return std::size_t{1} << num_qubits; }

/// A generalized Pauli operator on m qubits.
///
/// Symbols are encoded I=0, X=1, Y=2, Z=3 and the index is the base-4 number
/// formed by the label with the leftmost qubit most significant, so "XZ" has
/// index 1*4 + 3 = 7. The same leftmost-most-significant rule is used for
/// computational basis states: qubit 0 is the high bit of a basis index and
/// the leftmost tensor factor of every matrix.
class PauliString {
   public:
    PauliString() = default;

    PauliString(int num_qubits, std::size_t index) : num_qubits_(num_qubits), index_(index) {
        if (num_qubits < 1 || num_qubits > kMaxQubits) {
            throw std::invalid_argument("PauliString: qubit count must be in [1, 4]");
        }
        if (index >= num_paulis(num_qubits)) {
            throw std::invalid_argument("PauliString: index out of range");
        }
    }

    static PauliString parse(std::string_view label) {
        if (label.empty() || label.size() > static_cast<std::size_t>(kMaxQubits)) {
            throw std::invalid_argument("PauliString: bad label length '" + std::string(label) + "'");
        }
        std::size_t index = 0;
        for (char c : label) {
            int s;
            switch (c) {
                case 'I': s = 0; break;
                case 'X': s = 1; break;
                case 'Y': s = 2; break;
                case 'Z': s = 3; break;
                default:
                    throw std::invalid_argument("PauliString: bad symbol in '" + std::string(label) + "'");
            }
            index = index * 4 + static_cast<std::size_t>(s);
        }
        return PauliString(static_cast<int>(label.size()), index);
    }

    static PauliString identity(int num_qubits) { return PauliString(num_qubits, 0); }

    int num_qubits() const { return num_qubits_; }
    std::size_t index() const { return index_; }
    bool is_identity() const { return index_ == 0; }

    /// Symbol (0..3) acting on `qubit`, qubit 0 being leftmost.
    int symbol(int qubit) const {
        return static_cast<int>((index_ >> (2 * (num_qubits_ - 1 - qubit))) & 3u);
    }

    std::string label() const {
        static constexpr char kSymbols[] = {'I', 'X', 'Y', 'Z'};
        std::string out(static_cast<std::size_t>(num_qubits_), 'I');
        for (int q = 0; q < num_qubits_; ++q) {
            out[static_cast<std::size_t>(q)] = kSymbols[symbol(q)];
        }
        return out;
    }

    /// Basis-index bits flipped by this operator (X or Y sites).
    std::size_t x_mask() const {
        std::size_t mask = 0;
        for (int q = 0; q < num_qubits_; ++q) {
            int s = symbol(q);
            if (s == 1 || s == 2) mask |= std::size_t{1} << (num_qubits_ - 1 - q);
        }
        return mask;
    }

    /// Basis-index bits that pick up a sign (Y or Z sites).
    std::size_t z_mask() const {
        std::size_t mask = 0;
        for (int q = 0; q < num_qubits_; ++q) {
            int s = symbol(q);
            if (s == 2 || s == 3) mask |= std::size_t{1} << (num_qubits_ - 1 - q);
        }
        return mask;
    }

    int y_count() const {
        int n = 0;
        for (int q = 0; q < num_qubits_; ++q) n += symbol(q) == 2;
        return n;
    }

    friend bool operator==(const PauliString&, const PauliString&) = default;
    friend auto operator<=>(const PauliString&, const PauliString&) = default;

   private:
    int num_qubits_ = 0;
    std::size_t index_ = 0;
};

/// All 4^m Pauli strings in index order.
inline std::vector<PauliString> all_paulis(int num_qubits) {
    std::vector<PauliString> out;
    out.reserve(num_paulis(num_qubits));
    for (std::size_t k = 0; k < num_paulis(num_qubits); ++k) out.emplace_back(num_qubits, k);
    return out;
}

namespace detail {

inline std::complex<double> i_power(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

/// Entry of pauli_matrix(p) in column `col`; the row is col ^ x_mask.
template <class Real>
std::complex<Real> column_phase(const PauliString& p, std::size_t col) {
    int k = p.y_count() + 2 * (std::popcount(col & p.z_mask()) & 1);
    auto z = i_power(k);
    return {Real(z.real()), Real(z.imag())};
}

inline void require_same_qubits(const PauliString& a, const PauliString& b) {
    if (a.num_qubits() != b.num_qubits()) {
        throw std::invalid_argument("Pauli operation on mismatched qubit counts: " + a.label() + " vs " +
                                    b.label());
    }
}

}  // namespace detail

template <class Real = double>
CMatrix<Real> pauli_matrix(const PauliString& p) {
    const std::size_t d = hilbert_dim(p.num_qubits());
    CMatrix<Real> m = CMatrix<Real>::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const std::size_t x = p.x_mask();
    for (std::size_t col = 0; col < d; ++col) {
        m(static_cast<Eigen::Index>(col ^ x), static_cast<Eigen::Index>(col)) = detail::column_phase<Real>(p, col);
    }
    return m;
}

/// Result of multiplying two Pauli strings: a·b = i^phase_power · product.
struct PauliProduct {
    int phase_power = 0;
    PauliString product;

    std::complex<double> phase() const { return detail::i_power(phase_power); }
};

inline PauliProduct pauli_mul(const PauliString& a, const PauliString& b) {
    detail::require_same_qubits(a, b);
    int power = 0;
    for (int q = 0; q < a.num_qubits(); ++q) {
        int s = a.symbol(q);
        int t = b.symbol(q);
        if (s == 0 || t == 0 || s == t) continue;
        // X->Y->Z->X is the cyclic order giving +i.
        power += ((t - s + 3) % 3 == 1) ? 1 : 3;
    }
    return {power % 4, PauliString(a.num_qubits(), a.index() ^ b.index())};
}

inline bool commutes(const PauliString& a, const PauliString& b) {
    detail::require_same_qubits(a, b);
    int clashes = 0;
    for (int q = 0; q < a.num_qubits(); ++q) {
        int s = a.symbol(q);
        int t = b.symbol(q);
        clashes += (s != 0 && t != 0 && s != t);
    }
    return clashes % 2 == 0;
}

inline int qubits_for_dim(Eigen::Index dim) {
    int m = 0;
    while ((Eigen::Index{1} << m) < dim) ++m;
    if ((Eigen::Index{1} << m) != dim || m < 1 || m > kMaxQubits) {
        throw std::invalid_argument("matrix dimension is not 2^m for 1 <= m <= 4");
    }
    return m;
}

/// Coefficients c_j = (1/D) Tr(sigma_j M), so that M = sum_j c_j sigma_j.
template <class Real>
CVector<Real> expand_in_pauli_basis(const CMatrix<Real>& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("expand_in_pauli_basis: matrix is not square");
    const int n = qubits_for_dim(m.rows());
    const std::size_t d = hilbert_dim(n);
    CVector<Real> coeffs(static_cast<Eigen::Index>(num_paulis(n)));
    for (std::size_t j = 0; j < num_paulis(n); ++j) {
        PauliString p(n, j);
        const std::size_t x = p.x_mask();
        std::complex<Real> acc(0);
        for (std::size_t col = 0; col < d; ++col) {
            // sigma(col ^ x, col) * M(col, col ^ x)
            acc += detail::column_phase<Real>(p, col) *
                   m(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col ^ x));
        }
        coeffs(static_cast<Eigen::Index>(j)) = acc / Real(static_cast<double>(d));
    }
    return coeffs;
}

template <class Real>
CMatrix<Real> from_pauli_coefficients(const CVector<Real>& coeffs, int num_qubits) {
    if (static_cast<std::size_t>(coeffs.size()) != num_paulis(num_qubits)) {
        throw std::invalid_argument("from_pauli_coefficients: wrong coefficient count");
    }
    const std::size_t d = hilbert_dim(num_qubits);
    CMatrix<Real> m = CMatrix<Real>::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < num_paulis(num_qubits); ++j) {
        const auto c = coeffs(static_cast<Eigen::Index>(j));
        if (c == std::complex<Real>(0)) continue;
        PauliString p(num_qubits, j);
        const std::size_t x = p.x_mask();
        for (std::size_t col = 0; col < d; ++col) {
            m(static_cast<Eigen::Index>(col ^ x), static_cast<Eigen::Index>(col)) +=
                c * detail::column_phase<Real>(p, col);
        }
    }
    return m;
}

/// A real linear combination of Pauli strings, e.g. IZ - ZI + 0.5 ZZ.
struct PauliTerm {
    PauliString pauli;
    double coefficient = 1.0;
};

class PauliSum {
   public:
    PauliSum() = default;
    explicit PauliSum(std::vector<PauliTerm> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw std::invalid_argument("PauliSum: no terms");
        for (const auto& t : terms_) detail::require_same_qubits(t.pauli, terms_.front().pauli);
    }
    static PauliSum single(const PauliString& p, double coefficient = 1.0) { return PauliSum({{p, coefficient}}); }

    int num_qubits() const { return terms_.empty() ? 0 : terms_.front().pauli.num_qubits(); }
    const std::vector<PauliTerm>& terms() const { return terms_; }

    CMat matrix() const {
        CVec c = CVec::Zero(static_cast<Eigen::Index>(num_paulis(num_qubits())));
        for (const auto& t : terms_) c(static_cast<Eigen::Index>(t.pauli.index())) += t.coefficient;
        return from_pauli_coefficients<double>(c, num_qubits());
    }

    std::string to_string() const {
        std::string out;
        for (const auto& t : terms_) {
            if (!out.empty()) out += " + ";
            out += std::to_string(t.coefficient) + "*" + t.pauli.label();
        }
        return out;
    }

   private:
    std::vector<PauliTerm> terms_;
};

}  // namespace noisegeo
