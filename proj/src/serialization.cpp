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

#include "misalign/serialization.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace misalign {

namespace {

Json direction_to_json(const BlochVector& v) { return Json::array({v.x(), v.y(), v.z()}); }

BlochVector direction_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("direction must be an array of three numbers");
  BlochVector v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  const double norm = v.norm();
  if (!(std::abs(norm - 1.0) <= 1e-6)) throw std::invalid_argument("direction is not a unit vector");
  return v / norm;
}

Json table_to_json(const MeasurementPlan::DirectionTable& t) {
  Json out = Json::array();
  for (const auto& party : t) {
    Json row = Json::array();
    for (const auto& v : party) row.push_back(direction_to_json(v));
    out.push_back(std::move(row));
  }
  return out;
}

MeasurementPlan::DirectionTable table_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("direction table must be an array");
  MeasurementPlan::DirectionTable t;
  for (const auto& party : j) {
    if (!party.is_array()) throw std::invalid_argument("direction table rows must be arrays");
    std::vector<BlochVector> row;
    for (const auto& v : party) row.push_back(direction_from_json(v));
    t.push_back(std::move(row));
  }
  return t;
}

std::vector<int> int_array(const Json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(v.get<int>());
  return out;
}

}  // namespace

std::string format_decimal(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v == 0.0 ? 0.0 : v, std::chars_format::general, 15);
  return std::string(buf, res.ptr);
}

Json plan_to_json(const MeasurementPlan& plan) {
  return {{"n_parties", plan.n_parties()},
          {"mode", plan.mode() == PlanMode::Local ? "local" : "correlated"},
          {"intended", table_to_json(plan.intended_table())},
          {"actual", table_to_json(plan.actual_table())}};
}

MeasurementPlan plan_from_json(const Json& j) {
  try {
    const int n = j.at("n_parties").get<int>();
    const std::string mode = j.value("mode", std::string("local"));
    auto intended = table_from_json(j.at("intended"));
    auto actual = table_from_json(j.at("actual"));
    if (static_cast<int>(intended.size()) != n) throw std::invalid_argument("n_parties does not match the intended table");
    if (mode == "local") return MeasurementPlan(std::move(intended), std::move(actual));
    if (mode == "correlated") return MeasurementPlan::correlated(std::move(intended), std::move(actual));
    throw std::invalid_argument("plan mode must be \"local\" or \"correlated\"");
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed plan: ") + e.what());
  }
}

Json statistics_to_json(const OutcomeStatistics& stats) {
  Json joints = Json::array();
  Json probs = Json::array();
  const auto& shape = stats.settings_shape();
  for (int s = 0; s < stats.n_joint_settings(); ++s) {
    std::vector<int> tuple(shape.size());
    int rest = s;
    for (int j = static_cast<int>(shape.size()) - 1; j >= 0; --j) {
      tuple[j] = rest % shape[j];
      rest /= shape[j];
    }
    joints.push_back(tuple);
    Json row = Json::array();
    for (int o = 0; o < stats.n_outcomes(); ++o) row.push_back(stats.probability(s, o));
    probs.push_back(std::move(row));
  }
  return {{"settings_shape", shape}, {"joint_settings", joints}, {"probabilities", probs}};
}

OutcomeStatistics statistics_from_json(const Json& j) {
  try {
    const std::vector<int> shape = int_array(j.at("settings_shape"), "settings_shape");
    const Json& probs = j.at("probabilities");
    if (!probs.is_array() || probs.empty()) throw std::invalid_argument("probabilities must be a non-empty array");
    const Eigen::Index cols = static_cast<Eigen::Index>(probs[0].size());
    Eigen::MatrixXd table(static_cast<Eigen::Index>(probs.size()), cols);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      if (static_cast<Eigen::Index>(probs[r].size()) != cols) throw std::invalid_argument("ragged probability table");
      for (Eigen::Index c = 0; c < cols; ++c) table(r, c) = probs[r][c].get<double>();
    }
    return OutcomeStatistics(shape, std::move(table));
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed statistics: ") + e.what());
  }
}

Json reconstruction_to_json(const ReconstructionResult& r) {
  const CMatrix& m = r.rho.matrix();
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      row.push_back(m(i, k).real());
      row.push_back(m(i, k).imag());
    }
    rows.push_back(std::move(row));
  }
  return {{"method", r.method == ReconstructionMethod::LinearInversion ? "linear-inversion" : "maximum-likelihood"},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"dim", m.rows()},
          {"rho", rows}};
}

Json witness_to_json(const WitnessSpec& spec) {
  Json terms = Json::array();
  for (const auto& t : spec.terms()) terms.push_back({{"coeff", t.coeff}, {"settings", t.settings}});
  Json projectors = Json::array();
  for (const auto& t : spec.projector_terms())
    projectors.push_back({{"coeff", t.coeff}, {"settings", t.settings}, {"outcomes", t.outcomes}});
  return {{"n", spec.n_parties()},
          {"terms", terms},
          {"projector_terms", projectors},
          {"identity_coeff", spec.identity_coeff()},
          {"intended", table_to_json(spec.intended())}};
}

WitnessSpec witness_from_json(const Json& j) {
  try {
    const int n = j.at("n").get<int>();
    if (n < 1 || n > 12) throw std::invalid_argument("witness n must lie in 1..12");
    MeasurementPlan::DirectionTable intended;
    if (j.contains("intended")) {
      intended = table_from_json(j.at("intended"));
    } else {
      intended.assign(n, {BlochVector::UnitX(), BlochVector::UnitY(), BlochVector::UnitZ()});
    }
    if (static_cast<int>(intended.size()) != n) throw std::invalid_argument("witness n does not match intended");
    std::vector<WitnessTerm> terms;
    for (const auto& t : j.at("terms")) terms.push_back({t.at("coeff").get<double>(), int_array(t.at("settings"), "settings")});
    std::vector<ProjectorTerm> projectors;
    if (j.contains("projector_terms"))
      for (const auto& t : j.at("projector_terms"))
        projectors.push_back({t.at("coeff").get<double>(), int_array(t.at("settings"), "settings"),
                              int_array(t.at("outcomes"), "outcomes")});
    return WitnessSpec(std::move(intended), std::move(terms), std::move(projectors), j.value("identity_coeff", 0.0));
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed witness: ") + e.what());
  }
}

Json optimization_to_json(const OptimizationResult& r) {
  Json records = Json::array();
  for (const auto& rec : r.records) {
    records.push_back({{"index", rec.index},
                       {"origin", rec.origin},
                       {"ok", rec.ok},
                       {"value", rec.ok ? Json(rec.value) : Json(nullptr)},
                       {"attempts", rec.attempts},
                       {"iterations", rec.iterations},
                       {"status", rec.status},
                       {"note", rec.note}});
  }
  std::vector<double> argmin(r.argmin.data(), r.argmin.data() + r.argmin.size());
  return {{"best_value", r.best_restart >= 0 ? Json(r.best_value) : Json(nullptr)},
          {"best_restart", r.best_restart},
          {"restarts", r.restarts},
          {"failed_restarts", r.failed_restarts},
          {"seed", r.seed},
          {"bipartition_mask", r.bipartition_mask},
          {"argmin", argmin},
          {"records", records}};
}

}  // namespace misalign
