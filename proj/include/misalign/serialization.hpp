// Copyright 2026 The misalign-tomo Authors
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

// JSON documents for plans, statistics, reconstructions, witness specs and
// optimizer results. Numbers are written with full round-trip precision.

#pragma once

#include <string>

#include <json.hpp>

#include "misalign/misalignment.hpp"
#include "misalign/tomography.hpp"
#include "misalign/witness.hpp"
#include "misalign/worstcase.hpp"

namespace misalign {

using Json = nlohmann::json;

/// {n_parties, mode: "local"|"correlated", intended: [[[x,y,z],...],...], actual: ...}
Json plan_to_json(const MeasurementPlan& plan);
/// Directions whose norm is within 1e-6 of one are renormalized; anything
/// else is rejected with std::invalid_argument.
MeasurementPlan plan_from_json(const Json& j);

/// {settings_shape: [...], joint_settings: [[k_0, ..., k_{n-1}], ...], probabilities: [[...], ...]}
Json statistics_to_json(const OutcomeStatistics& stats);
OutcomeStatistics statistics_from_json(const Json& j);

/// {method, converged, iterations, residual, dim, rho: [[re, im, re, im, ...] per row]}
Json reconstruction_to_json(const ReconstructionResult& r);

/// {n, terms: [{coeff, settings}], projector_terms: [{coeff, settings, outcomes}],
///  identity_coeff, intended (optional; the Pauli axes x, y, z per party otherwise)}
Json witness_to_json(const WitnessSpec& spec);
WitnessSpec witness_from_json(const Json& j);

Json optimization_to_json(const OptimizationResult& r);

/// Shortest decimal with 15 significant digits ("%.15g"), '.' separator.
std::string format_decimal(double v);

}  // namespace misalign
