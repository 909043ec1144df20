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

#include <cmath>
#include <numbers>
#include <sstream>

#include "noisegeo/noisegeo.hpp"
#include "oracles.hpp"

using namespace noisegeo;
using oracle::C;

namespace {

PauliString P(const char* s) { return PauliString::parse(s); }

}  // namespace

// ---------------------------------------------------------------------------
// Pauli algebra.

TEST(Pauli, LabelIndexRoundTripThreeQubits) {
    for (int m = 1; m <= 3; ++m) {
        for (std::size_t k = 0; k < num_paulis(m); ++k) {
            const PauliString p(m, k);
            EXPECT_EQ(p.label(), oracle::label_of(k, m));
            EXPECT_EQ(PauliString::parse(p.label()).index(), k);
        }
    }
    EXPECT_EQ(P("ZI").index(), 12u);
    EXPECT_EQ(P("IZ").index(), 3u);
}

TEST(Pauli, MatricesMatchKroneckerOracle) {
    for (int m = 1; m <= 3; ++m) {
        for (const auto& p : all_paulis(m)) {
            const CMat a = pauli_matrix<double>(p);
            EXPECT_EQ(oracle::max_abs(a - oracle::pauli(p.label())), 0.0) << p.label();
            EXPECT_TRUE(is_unitary(a));
            EXPECT_TRUE(is_hermitian(a));
            if (!p.is_identity()) EXPECT_EQ(std::abs(a.trace()), 0.0);
        }
    }
}

TEST(Pauli, OrthogonalityUpToThreeQubits) {
    for (int m = 1; m <= 3; ++m) {
        const auto ps = all_paulis(m);
        const double d = static_cast<double>(hilbert_dim(m));
        for (const auto& a : ps) {
            const CMat ma = pauli_matrix<double>(a);
            for (const auto& b : ps) {
                const C ip = (ma * pauli_matrix<double>(b)).trace() / d;
                EXPECT_EQ(ip, C(a.index() == b.index() ? 1.0 : 0.0));
            }
        }
    }
}

TEST(Pauli, ProductExamples) {
    auto r = pauli_mul(P("XI"), P("ZI"));
    EXPECT_EQ(r.phase(), C(0, -1));
    EXPECT_EQ(r.product.label(), "YI");
    r = pauli_mul(P("XY"), P("XY"));
    EXPECT_EQ(r.phase(), C(1, 0));
    EXPECT_EQ(r.product.label(), "II");
    r = pauli_mul(P("XX"), P("ZZ"));
    EXPECT_EQ(r.phase(), C(-1, 0));
    EXPECT_EQ(r.product.label(), "YY");
}

TEST(Pauli, ProductMatchesMatricesForAllTwoQubitPairs) {
    for (const auto& a : all_paulis(2)) {
        for (const auto& b : all_paulis(2)) {
            const auto r = pauli_mul(a, b);
            const oracle::Mat lhs = oracle::pauli(a.label()) * oracle::pauli(b.label());
            EXPECT_LT(oracle::max_abs(lhs - r.phase() * oracle::pauli(r.product.label())), 1e-15);
        }
    }
}

TEST(Pauli, ProductIsAssociativeWithPhases) {
    oracle::Gen gen(101);
    for (int trial = 0; trial < 300; ++trial) {
        const int m = 1 + static_cast<int>(gen.index(3));
        const auto a = P(gen.pauli_label(m).c_str()), b = P(gen.pauli_label(m).c_str()), c = P(gen.pauli_label(m).c_str());
        const auto ab = pauli_mul(a, b), ab_c = pauli_mul(ab.product, c);
        const auto bc = pauli_mul(b, c), a_bc = pauli_mul(a, bc.product);
        EXPECT_EQ(ab_c.product.index(), a_bc.product.index());
        EXPECT_EQ((ab.phase_power + ab_c.phase_power) % 4, (bc.phase_power + a_bc.phase_power) % 4);
    }
}

TEST(Pauli, CommutationExamplesAndMatrixAgreement) {
    EXPECT_TRUE(commutes(P("XX"), P("ZZ")));
    EXPECT_FALSE(commutes(P("XI"), P("ZI")));
    for (const auto& p : all_paulis(2)) EXPECT_TRUE(commutes(P("II"), p));
    for (int m = 1; m <= 2; ++m) {
        for (const auto& a : all_paulis(m)) {
            for (const auto& b : all_paulis(m)) {
                const oracle::Mat ma = oracle::pauli(a.label()), mb = oracle::pauli(b.label());
                EXPECT_EQ(commutes(a, b), oracle::max_abs(ma * mb - mb * ma) == 0.0) << a.label() << " " << b.label();
            }
        }
    }
}

TEST(Pauli, MismatchedQubitCountsThrow) {
    EXPECT_THROW(pauli_mul(P("X"), P("XX")), std::invalid_argument);
    EXPECT_THROW(commutes(P("X"), P("XX")), std::invalid_argument);
}

TEST(Pauli, ExpansionExamples) {
    const CMat m = 0.3 * pauli_op("ZI") + 0.1 * pauli_op("IZ");
    const CVec c = expand_in_pauli_basis<double>(m);
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const double expected = j == 12 ? 0.3 : j == 3 ? 0.1 : 0.0;
        EXPECT_NEAR(std::abs(c(j) - expected), 0.0, 1e-16);
    }
    const CVec id = expand_in_pauli_basis<double>(CMat::Identity(4, 4));
    EXPECT_EQ(id(0), C(1));
    EXPECT_EQ(id.tail(15).norm(), 0.0);

    const CVec e = expand_in_pauli_basis<double>(oracle::evolve(oracle::pauli("ZI"), 0.2));
    EXPECT_NEAR(std::abs(e(0) - std::cos(0.2)), 0, 1e-15);
    EXPECT_NEAR(std::abs(e(12) - C(0, -std::sin(0.2))), 0, 1e-15);
}

TEST(Pauli, ExpansionReconstructsRandomMatrices) {
    oracle::Gen gen(7);
    for (int m = 1; m <= 3; ++m) {
        const auto d = static_cast<Eigen::Index>(hilbert_dim(m));
        for (int trial = 0; trial < 10; ++trial) {
            const CMat h = gen.hermitian(d);
            const CMat u = gen.unitary(d);
            const CVec ch = expand_in_pauli_basis<double>(h);
            EXPECT_LT(ch.imag().cwiseAbs().maxCoeff(), 1e-14);
            EXPECT_LT(oracle::max_abs(from_pauli_coefficients<double>(ch, m) - h), 1e-13);
            EXPECT_LT((expand_in_pauli_basis<double>(u) - oracle::pauli_coefficients(u)).norm(), 1e-13);
        }
    }
}

TEST(Pauli, PauliSumMatrix) {
    const PauliSum s({{P("IZ"), 1.0}, {P("ZI"), -1.0}, {P("ZZ"), 0.5}});
    const oracle::Mat expected = oracle::pauli("IZ") - oracle::pauli("ZI") + 0.5 * oracle::pauli("ZZ");
    EXPECT_EQ(oracle::max_abs(s.matrix() - expected), 0.0);
}

// ---------------------------------------------------------------------------
// Schedules and gates.

TEST(Schedule, ZeroHamiltonianGivesIdentity) {
    const TimeGrid g(1.0, 64);
    const HamiltonianSchedule s(2, g, {{PulseShape::constant(g, 0.0), pauli_op("XX"), "XX"}});
    for (const CMat& u : propagate_noiseless(s)) EXPECT_LT(oracle::max_abs(u - CMat::Identity(4, 4)), 1e-15);
}

TEST(Schedule, FullRotationIsMinusIdentity) {
    const double omega = 3.0;
    const TimeGrid g(2 * std::numbers::pi / omega, 128);
    const HamiltonianSchedule s(1, g, {{PulseShape::constant(g, omega), 0.5 * pauli_op("X"), "X"}});
    const auto frames = propagate_noiseless(s);
    EXPECT_LT(oracle::max_abs(frames.back() + CMat::Identity(2, 2)), 1e-13);
    for (const auto& u : frames) EXPECT_TRUE(is_unitary(u, 1e-12));
}

TEST(Schedule, IswapMatchesExpmOracle) {
    for (double g : {0.5, 1.0, 2.0}) {
        const HamiltonianSchedule s = make_iswap(g, 256);
        const oracle::Mat expected = oracle::evolve(g * (oracle::pauli("XX") + oracle::pauli("YY")), std::numbers::pi / (4 * g));
        EXPECT_LT(oracle::max_abs(propagate_noiseless(s).back() - expected), 1e-10);
    }
    // exp(-i pi/4 (XX+YY)) sends |01> to -i|10>.
    const CVec out = iswap_target() * basis_state("01");
    EXPECT_LT(std::abs(out(2) - C(0, -1)), 1e-15);
}

TEST(Schedule, CosineXXPulseReachesTarget) {
    const TimeGrid g(1.7, 512);
    const HamiltonianSchedule s = make_xx_halfpi(PulseShape::cosine(g, 123.0));
    EXPECT_NEAR(s.controls().front().pulse.area(), std::numbers::pi / 2, 1e-10);
    EXPECT_LT(oracle::phase_free_diff(oracle::evolve(oracle::pauli("XX"), std::numbers::pi / 4), propagate_noiseless(s).back()), 1e-8);
}

TEST(Schedule, SingleQubitCliffordEmbedding) {
    const oracle::Mat h = oracle::expm(oracle::Mat::Zero(2, 2));  // identity
    oracle::Mat had(2, 2);
    had << 1, 1, 1, -1;
    had /= std::sqrt(2.0);
    EXPECT_LT(oracle::max_abs(single_qubit_clifford("H", 0, 2) - oracle::kron(had, h)), 1e-15);
    EXPECT_LT(oracle::max_abs(single_qubit_clifford("H", 1, 2) - oracle::kron(h, had)), 1e-15);
    EXPECT_THROW(single_qubit_gate("T"), std::invalid_argument);
}

TEST(Schedule, CnotCompositeEqualsCnot) {
    const TimeGrid g(1.0, 512);
    const HardLayer xx = make_xx_layer(PulseShape::cosine(g, 1.0), {});
    const Circuit c = make_cnot_composite(xx);
    oracle::Mat cnot = oracle::Mat::Zero(4, 4);
    cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1;
    EXPECT_LT(oracle::phase_free_diff(cnot, c.noiseless_unitary()), 1e-8);
    // |01> is a fixed point of CNOT with the leftmost control.
    EXPECT_LT((c.noiseless_unitary() * basis_state("01")).cwiseAbs()(1) - 1, 1e-12);
}

TEST(Schedule, MidpointStepperIsSecondOrder) {
    // Two non-commuting controls force the general stepping path.
    auto build = [](std::size_t n) {
        const TimeGrid g(2.0, n);
        return HamiltonianSchedule(
            1, g,
            {{PulseShape::from_function(g, [](double t) { return 1.3 + std::sin(2 * t); }), 0.5 * pauli_op("X"), "X"},
             {PulseShape::from_function(g, [](double t) { return 0.7 * std::cos(3 * t); }), 0.5 * pauli_op("Z"), "Z"}});
    };
    const oracle::Mat exact = oracle::propagate(
        [](double t) {
            return oracle::Mat((1.3 + std::sin(2 * t)) * 0.5 * oracle::pauli("X") + 0.7 * std::cos(3 * t) * 0.5 * oracle::pauli("Z"));
        },
        2.0, 40000);
    std::vector<double> dts, errs;
    for (std::size_t n : {32, 64, 128, 256, 512}) {
        dts.push_back(2.0 / static_cast<double>(n));
        errs.push_back(oracle::max_abs(propagate_noiseless(build(n)).back() - exact));
    }
    EXPECT_GE(oracle::loglog_slope(dts, errs), 1.9);
}

TEST(Schedule, RejectsInvalidInputs) {
    const TimeGrid g(1.0, 32);
    CMat bad = pauli_op("X");
    bad(0, 1) = C(0, 1);
    EXPECT_THROW(HamiltonianSchedule(1, g, {{PulseShape::constant(g, 1.0), bad, "bad"}}), std::invalid_argument);
    EXPECT_THROW(TimeGrid(1.0, 10), std::invalid_argument);
    EXPECT_THROW(HamiltonianSchedule(1, g, {}, {{PauliSum::single(P("Z")), Additive{}, QuasiStatic{0, -1}}}), std::invalid_argument);
}

TEST(Schedule, PulseFileRoundTrip) {
    const TimeGrid g(2.5, 255);
    const PulseShape p = PulseShape::cosine(g, 1.0);
    std::stringstream ss;
    ss << "# time, amplitude\n";
    write_pulse(ss, p);
    const PulseShape q = parse_pulse(ss);
    ASSERT_EQ(q.size(), 256u);
    EXPECT_NEAR(q.grid().duration(), 2.5, 1e-15);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_EQ(q[k], p[k]);
}

TEST(Schedule, PulseFileErrors) {
    std::stringstream jitter;
    for (int k = 0; k < 32; ++k) jitter << k * 0.1 + (k == 7 ? 1e-4 : 0.0) << " 1.0\n";
    EXPECT_THROW(parse_pulse(jitter), std::invalid_argument);
    std::stringstream few;
    for (int k = 0; k < 10; ++k) few << k << " 1\n";
    EXPECT_THROW(parse_pulse(few), std::invalid_argument);
    std::stringstream text;
    for (int k = 0; k < 20; ++k) text << k << (k == 5 ? " abc\n" : " 1\n");
    try {
        parse_pulse(text, "pulse.txt");
        FAIL() << "expected a parse error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("pulse.txt:6"), std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// Robust pulse search.

TEST(PulseOptimizer, XPiRotationBecomesRobustToDephasing) {
    const TimeGrid g(1.0, 256);
    PulseProblem p{1, g, 0.5 * pauli_op("X"), std::numbers::pi, oracle::evolve(0.5 * oracle::pauli("X"), std::numbers::pi),
                   {PauliSum::single(P("Z"))}, 4, 3};
    const PulseResult r = optimize_robust_pulse(p);
    ASSERT_TRUE(r.success) << r.message;
    EXPECT_LE(r.gate_error, 1e-6);
    EXPECT_GE(r.reduction, 100.0);
    // Independent check through the geometry module.
    const HamiltonianSchedule s = make_x_rotation(r.pulse, std::numbers::pi, {{PauliSum::single(P("Z")), Additive{}, QuasiStatic{}}});
    const ErrorVector e = first_order_error(toggling_frame_curves(s), NoiseRealization::constant(s, {1.0}));
    EXPECT_LT(std::abs(e[P("Z")]), 1e-4 * g.duration());
    EXPECT_LT(e.norm(), 1e-4 * g.duration());
}

TEST(PulseOptimizer, XXPulseRobustToLocalDephasing) {
    const PulseResult r = optimize_robust_pulse(xx_halfpi_problem(TimeGrid(1.0, 256), 4, 0));
    ASSERT_TRUE(r.success) << r.message;
    const HardLayer layer = make_xx_layer(r.pulse, {{PauliSum::single(P("IZ")), Additive{}, QuasiStatic{1.0, 0}},
                                                    {PauliSum::single(P("ZI")), Additive{}, QuasiStatic{1.0, 0}}});
    for (const auto& c : layer.curves()) {
        EXPECT_LT(first_order_error(c, std::vector<double>(c.grid.size(), 1.0)).norm(), 1e-3);
    }
}

TEST(PulseOptimizer, CommutingNoiseIsReportedUncorrectable) {
    ExperimentConfig c;
    c.gate = "iswap";
    c.duration = std::numbers::pi / 4;
    c.intervals = 128;
    const PulseResult r = optimize_robust_pulse(pulse_problem(c));
    EXPECT_FALSE(r.success);
    EXPECT_NE(r.message.find("uncorrectable"), std::string::npos);
}

TEST(PulseOptimizer, TwoPiRotationRobustness) {
    // The resonant (constant) 2 pi drive already closes its error curve.
    const TimeGrid g(1.0, 256);
    const HamiltonianSchedule flat =
        make_x_rotation(PulseShape::constant(g, 1.0), 2 * std::numbers::pi, {{PauliSum::single(P("Z")), Additive{}, QuasiStatic{}}});
    EXPECT_LT(first_order_error(toggling_frame_curves(flat), NoiseRealization::constant(flat, {1.0})).norm(), 1e-10);
    // The raised-cosine 2 pi drive does not; the optimizer must repair it.
    const HamiltonianSchedule raised =
        make_x_rotation(PulseShape::cosine(g, 1.0), 2 * std::numbers::pi, {{PauliSum::single(P("Z")), Additive{}, QuasiStatic{}}});
    EXPECT_GT(first_order_error(toggling_frame_curves(raised), NoiseRealization::constant(raised, {1.0})).norm(), 0.1);
    PulseProblem p{1, g, 0.5 * pauli_op("X"), 2 * std::numbers::pi, -CMat::Identity(2, 2), {PauliSum::single(P("Z"))}, 4, 0};
    const PulseResult r = optimize_robust_pulse(p);
    EXPECT_TRUE(r.success) << r.message;
}
