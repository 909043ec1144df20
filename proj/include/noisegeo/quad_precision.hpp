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

// Optional quad-precision scalar for the templated channel and error-vector
// code. Requires GNU extensions (-std=gnu++20) and libquadmath.

#include <boost/multiprecision/float128.hpp>

#include <Eigen/Core>
#include <limits>

namespace noisegeo {
using quad = boost::multiprecision::float128;
}

namespace Eigen {

template <>
struct NumTraits<noisegeo::quad> : GenericNumTraits<noisegeo::quad> {
    using Real = noisegeo::quad;
    using NonInteger = noisegeo::quad;
    using Literal = noisegeo::quad;
    using Nested = noisegeo::quad;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 1,
        AddCost = 4,
        MulCost = 4,
    };
    static Real epsilon() { return std::numeric_limits<Real>::epsilon(); }
    static Real dummy_precision() { return 1e3 * epsilon(); }
    static Real highest() { return (std::numeric_limits<Real>::max)(); }
    static Real lowest() { return std::numeric_limits<Real>::lowest(); }
    static int digits10() { return std::numeric_limits<Real>::digits10; }
    static Real infinity() { return std::numeric_limits<Real>::infinity(); }
    static Real quiet_NaN() { return std::numeric_limits<Real>::quiet_NaN(); }
};

}  // namespace Eigen
