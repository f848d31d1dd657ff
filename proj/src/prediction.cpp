#include "roadlayout/prediction.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace roadlayout {

void validate_prediction(const AttributePrediction& pred,
                         const std::array<BinSpec, kNumContinuous>& specs) {
  for (int i = 0; i < kNumBinary; ++i) {
    double p = pred.binary[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::runtime_error("binary probability " + std::to_string(i) +
                               " outside [0,1]");
    }
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    double total = 0.0;
    for (double w : pred.multiclass[m]) {
      if (!(w >= 0.0)) {
        throw std::runtime_error("negative multiclass probability");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw std::runtime_error("multiclass distribution " + std::to_string(m) +
                               " not normalized");
    }
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    const auto& dist = pred.continuous[m];
    if (static_cast<int>(dist.weights.size()) != specs[m].distribution_size()) {
      throw std::runtime_error("continuous distribution " + std::to_string(m) +
                               " has wrong arity");
    }
    double total = 0.0;
    for (double w : dist.weights) {
      if (!(w >= 0.0) || std::isnan(w)) {
        throw std::runtime_error("invalid continuous bin weight");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw std::runtime_error("continuous distribution " + std::to_string(m) +
                               " not normalized");
    }
  }
}

std::string serialize_prediction(const AttributePrediction& pred,
                                 const AttributeSchema& schema) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["binary"] = pred.binary;
  j["multiclass"] = pred.multiclass;
  nlohmann::ordered_json cont = nlohmann::ordered_json::array();
  for (const auto& dist : pred.continuous) {
    cont.push_back(dist.weights);
  }
  j["continuous"] = std::move(cont);
  (void)schema;
  return j.dump();
}

AttributePrediction deserialize_prediction(
    std::string_view line, const AttributeSchema& schema,
    const std::array<BinSpec, kNumContinuous>& specs) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("prediction record is not valid JSON: ") +
                             e.what());
  }
  if (!j.is_object() || !j.contains("binary") || !j.contains("multiclass") ||
      !j.contains("continuous")) {
    throw std::runtime_error(
        "prediction record needs 'binary', 'multiclass' and 'continuous' fields");
  }
  AttributePrediction pred;
  const auto& bin = j["binary"];
  if (!bin.is_array() || bin.size() != kNumBinary) {
    throw std::runtime_error("field 'binary': expected 14 probabilities");
  }
  for (int i = 0; i < kNumBinary; ++i) {
    pred.binary[i] = bin[i].get<double>();
  }
  const auto& mc = j["multiclass"];
  if (!mc.is_array() || mc.size() != kNumMulticlass) {
    throw std::runtime_error("field 'multiclass': expected 2 distributions");
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    if (!mc[m].is_array() || mc[m].size() != kLaneCountClasses) {
      throw std::runtime_error("field 'multiclass[" + std::to_string(m) +
                               "]': expected 7 probabilities");
    }
    for (int k = 0; k < kLaneCountClasses; ++k) {
      pred.multiclass[m][k] = mc[m][k].get<double>();
    }
  }
  const auto& cont = j["continuous"];
  if (!cont.is_array() || cont.size() != kNumContinuous) {
    throw std::runtime_error("field 'continuous': expected 22 distributions");
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    if (!cont[m].is_array() ||
        static_cast<int>(cont[m].size()) != specs[m].distribution_size()) {
      throw std::runtime_error("field 'continuous[" + std::to_string(m) +
                               "]' (" + schema.continuous[m].name + "): expected " +
                               std::to_string(specs[m].distribution_size()) +
                               " weights");
    }
    pred.continuous[m].weights.resize(specs[m].distribution_size());
    for (int k = 0; k < specs[m].distribution_size(); ++k) {
      pred.continuous[m].weights[k] = cont[m][k].get<double>();
    }
  }
  validate_prediction(pred, specs);
  return pred;
}

SceneParams decode_prediction(const AttributePrediction& pred,
                              const AttributeSchema& schema,
                              const std::array<BinSpec, kNumContinuous>& specs) {
  SceneParams p;
  for (int i = 0; i < kNumBinary; ++i) {
    p.binary[i] = pred.binary[i] > 0.5;
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    int best = 0;
    for (int k = 1; k < kLaneCountClasses; ++k) {
      if (pred.multiclass[m][k] > pred.multiclass[m][best]) best = k;
    }
    p.multiclass[m] = best;
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    p.continuous[m] = decode_expectation(pred.continuous[m], specs[m]);
  }
  (void)schema;
  return p;
}

}  // namespace roadlayout
