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

// Library walkthrough: one noisy XX(pi/2) layer, its error vector, the CNOT
// composite with and without twirling, and a short iSWAP error walk.

#include <cstdio>
#include <numbers>

#include "noisegeo/noisegeo.hpp"

using namespace noisegeo;

int main() {
    const double delta = 0.02;
    const TimeGrid grid(1.0, 512);
    const HardLayer xx = make_xx_layer(PulseShape::cosine(grid, 1.0), {cnot_layer_noise(QuasiStatic{delta, 0.0})});

    const ErrorVector r = layer_local_error(xx, mean_realization(xx.schedule()));
    std::printf("XX(pi/2) layer, delta = %.3g\n  first-order error (|R| = %.4g):\n", delta, r.norm());
    for (std::size_t p = 0; p < r.size(); ++p) {
        const double v = r.components()(static_cast<Eigen::Index>(p));
        if (std::abs(v) > 1e-12) std::printf("    %s  %+.6e\n", r.axis(p).label().c_str(), v);
    }

    const Circuit cnot = make_cnot_composite(xx);
    const CVec input = basis_state("01");
    RcPolicy bare;
    RcPolicy rc;
    rc.twirl_set = default_twirl_set(2);
    rc.enumerate = true;
    const double fb = rc_average_fidelity(cnot, bare, input, cnot.noiseless_unitary() * input).fidelity.value;
    const double fr = rc_average_fidelity(cnot, rc, input, cnot.noiseless_unitary() * input).fidelity.value;
    std::printf("CNOT composite on |01>: bare infidelity %.4e, twirled %.4e\n", 1 - fb, 1 - fr);

    const HardLayer iswap = make_iswap_layer(std::numbers::pi / 4, 256, {iswap_layer_noise(QuasiStatic{0.01, 0.0})});
    const Circuit chain = make_chain(iswap, 64);
    const ErrorWalkData walk = compute_error_walk(chain, {4, 8, 16, 32, 64}, 100, 7, default_twirl_set(2),
                                                  RealizationMode::kSharedPerRun, resolve_threads(0), 0);
    std::printf("iSWAP error walk (100 twirled runs)\n  depth   bare        rms\n");
    for (std::size_t k = 0; k < walk.depths.size(); ++k) {
        std::printf("  %5zu   %.4e  %.4e\n", walk.depths[k], walk.bare[k], walk.rms[k]);
    }
    return 0;
}
