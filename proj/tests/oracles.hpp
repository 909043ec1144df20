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

// Reference implementations that share no code with the library: dense
// Kronecker Pauli matrices, Pade matrix exponentials, brute-force propagation
// and trace-formula PTMs. Plus hand-rolled random generators for property
// tests.

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using C = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat single(char s) {
    Mat m(2, 2);
    switch (s) {
        case 'I': m << 1, 0, 0, 1; break;
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << 0, C(0, -1), C(0, 1), 0; break;
        case 'Z': m << 1, 0, 0, -1; break;
        default: throw std::invalid_argument("oracle::single");
    }
    return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Leftmost symbol acts on the most significant tensor factor.
inline Mat pauli(const std::string& label) {
    Mat m = Mat::Identity(1, 1);
    for (char s : label) m = kron(m, single(s));
    return m;
}

inline std::string label_of(std::size_t index, int m) {
    static const char sym[] = {'I', 'X', 'Y', 'Z'};
    std::string s(static_cast<std::size_t>(m), 'I');
    for (int q = m - 1; q >= 0; --q) {
        s[static_cast<std::size_t>(q)] = sym[index % 4];
        index /= 4;
    }
    return s;
}

inline std::vector<Mat> basis(int m) {
    std::vector<Mat> out;
    for (std::size_t k = 0; k < (std::size_t{1} << (2 * m)); ++k) out.push_back(pauli(label_of(k, m)));
    return out;
}

/// exp(A) by Pade scaling-and-squaring.
inline Mat expm(const Mat& a) { return a.exp(); }

/// exp(-i t h).
inline Mat evolve(const Mat& h, double t) { return expm(C(0, -t) * h); }

/// Time-ordered exp(-i int H) by midpoint products with `steps` slices.
inline Mat propagate(const std::function<Mat(double)>& h, double duration, std::size_t steps) {
    const double dt = duration / static_cast<double>(steps);
    Mat u = Mat::Identity(h(0).rows(), h(0).cols());
    for (std::size_t k = 0; k < steps; ++k) u = evolve(h((static_cast<double>(k) + 0.5) * dt), dt) * u;
    return u;
}

inline Vec pauli_coefficients(const Mat& m) {
    const int n = static_cast<int>(std::lround(std::log2(static_cast<double>(m.rows()))));
    const auto b = basis(n);
    Vec c(static_cast<Eigen::Index>(b.size()));
    for (std::size_t j = 0; j < b.size(); ++j) c(static_cast<Eigen::Index>(j)) = (b[j] * m).trace() / static_cast<double>(m.rows());
    return c;
}

/// PTM(j, k) = (1/D) Tr(s_j U s_k U^dag), averaged over `us`.
inline Eigen::MatrixXd ptm(const std::vector<Mat>& us) {
    const int n = static_cast<int>(std::lround(std::log2(static_cast<double>(us.front().rows()))));
    const auto b = basis(n);
    const auto size = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size, size);
    for (const auto& u : us)
        for (Eigen::Index j = 0; j < size; ++j)
            for (Eigen::Index k = 0; k < size; ++k)
                out(j, k) += (b[static_cast<std::size_t>(j)] * u * b[static_cast<std::size_t>(k)] * u.adjoint()).trace().real() /
                             static_cast<double>(u.rows());
    return out / static_cast<double>(us.size());
}

inline double max_abs(const Mat& a) { return a.cwiseAbs().maxCoeff(); }

/// Max entry difference after removing the global phase that best aligns b to a.
inline double phase_free_diff(const Mat& a, const Mat& b) {
    const C overlap = (b.adjoint() * a).trace();
    const C phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : C(1);
    return max_abs(a - phase * b);
}

class Gen {
   public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double normal() { return normal_(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    std::string pauli_label(int m) { return label_of(index(std::size_t{1} << (2 * m)), m); }

    Mat hermitian(Eigen::Index d, double scale = 1.0) {
        Mat a(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) a(i, j) = C(normal(), normal());
        return scale * 0.5 * (a + a.adjoint());
    }
    Mat unitary(Eigen::Index d) {
        Mat a(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) a(i, j) = C(normal(), normal());
        Eigen::HouseholderQR<Mat> qr(a);
        return qr.householderQ();
    }
    Vec state(Eigen::Index d) {
        Vec v(d);
        for (Eigen::Index i = 0; i < d; ++i) v(i) = C(normal(), normal());
        return v.normalized();
    }
    Eigen::VectorXd vector(Eigen::Index n, double scale = 1.0) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal();
        return v;
    }

   private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
        sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    }
    return sxy / sxx;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    std::vector<double> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(n - 1)));
    return out;
}

}  // namespace oracle
