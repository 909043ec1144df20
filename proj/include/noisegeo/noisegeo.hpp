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

// Everything except the optional quad-precision scalar (quad_precision.hpp).

#include "noisegeo/pauli.hpp"
#include "noisegeo/linalg.hpp"
#include "noisegeo/parallel.hpp"
#include "noisegeo/schedule.hpp"
#include "noisegeo/error_vector.hpp"
#include "noisegeo/geometry.hpp"
#include "noisegeo/spectra.hpp"
#include "noisegeo/circuit.hpp"
#include "noisegeo/twirl.hpp"
#include "noisegeo/channel.hpp"
#include "noisegeo/metrics.hpp"
#include "noisegeo/pulse_optimizer.hpp"
#include "noisegeo/io.hpp"
#include "noisegeo/experiments.hpp"
