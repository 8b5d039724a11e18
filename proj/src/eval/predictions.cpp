#include "eegrob/eval/predictions.hpp"

#include <cmath>
#include <set>
#include <tuple>

#include "eegrob/core/error.hpp"
#include "eegrob/core/io.hpp"

using nlohmann::json;

namespace eegrob {

namespace {

std::string field(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

const json& require(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ValidationError(field(where, key), "missing");
  return *it;
}

int integer(const json& doc, const char* key, const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_number_integer()) throw ValidationError(field(where, key), "expected an integer");
  return v.get<int>();
}

std::string string(const json& doc, const char* key, const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_string()) throw ValidationError(field(where, key), "expected a string");
  return v.get<std::string>();
}

}  // namespace

json to_json(const PredictionRecord& r) {
  json j = {{"trial_id", r.trial_id}, {"fold", r.fold},  {"condition", r.condition},
            {"true", r.true_class},   {"pred", r.pred}, {"confidence", r.confidence}};
  if (r.probs) j["probs"] = *r.probs;
  if (r.model) j["model"] = *r.model;
  return j;
}

PredictionRecord prediction_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ValidationError(where.empty() ? "record" : where, "expected an object");
  PredictionRecord r;
  r.trial_id = string(doc, "trial_id", where);
  r.fold = integer(doc, "fold", where);
  r.condition = string(doc, "condition", where);
  r.true_class = integer(doc, "true", where);
  r.pred = integer(doc, "pred", where);
  const auto& conf = require(doc, "confidence", where);
  if (!conf.is_number()) throw ValidationError(field(where, "confidence"), "expected a number");
  r.confidence = conf.get<double>();
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
    throw ValidationError(field(where, "confidence"), "must lie in [0, 1]");
  }
  if (auto it = doc.find("probs"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError(field(where, "probs"), "expected an array of numbers");
    std::vector<double> probs;
    for (const auto& p : *it) {
      if (!p.is_number()) throw ValidationError(field(where, "probs"), "expected an array of numbers");
      probs.push_back(p.get<double>());
    }
    r.probs = std::move(probs);
  }
  if (auto it = doc.find("model"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError(field(where, "model"), "expected a string");
    r.model = it->get<std::string>();
  }
  return r;
}

std::string to_jsonl(const std::vector<PredictionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::vector<PredictionRecord> parse_predictions_jsonl(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where, std::string("invalid JSON: ") + e.what());
    }
    out.push_back(prediction_from_json(doc, where));
  }
  return out;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  try {
    return parse_predictions_jsonl(read_file(path));
  } catch (const ValidationError& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path) {
  write_file_atomic(path, to_jsonl(records));
}

void check_predictions(const DatasetManifest& manifest, const std::vector<PredictionRecord>& records) {
  const int n_classes = static_cast<int>(manifest.classes.size());
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = "record " + std::to_string(i + 1) + " (" + r.trial_id + ")";
    const auto idx = manifest.trial_index(r.trial_id);
    if (!idx) throw ValidationError(where, "trial_id is not in the manifest");
    const auto& trial = manifest.trials[*idx];
    if (trial.label != r.true_class) {
      throw ValidationError(where + ".true", "manifest label is " + std::to_string(trial.label));
    }
    if (r.pred < 0 || r.pred >= n_classes) {
      throw ValidationError(where + ".pred", "class index must be < " + std::to_string(n_classes));
    }
    if (manifest.fold_of_trial(trial) != r.fold) {
      throw ValidationError(where + ".fold", "manifest places this trial in fold " +
                                                 std::to_string(manifest.fold_of_trial(trial)));
    }
    if (r.probs && r.probs->size() != manifest.classes.size()) {
      throw ValidationError(where + ".probs", "expected one probability per class");
    }
    if (!seen.emplace(r.trial_id, r.condition, r.model.value_or("")).second) {
      throw ValidationError(where, "duplicate prediction for condition " + r.condition);
    }
  }
}

}  // namespace eegrob
