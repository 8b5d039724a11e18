#include "eegrob/core/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "eegrob/core/error.hpp"
#include "eegrob/core/io.hpp"

using nlohmann::json;

namespace eegrob {

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where.empty() ? key : where + "." + key, "missing required field");
  return *it;
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ValidationError(field, "expected a string");
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field, "expected a number");
  return v.get<double>();
}

std::vector<std::string> as_string_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field, "expected an array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_string(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

int parse_fold_key(const std::string& key) {
  int value = 0;
  const auto* end = key.data() + key.size();
  auto [ptr, ec] = std::from_chars(key.data(), end, value);
  if (ec != std::errc{} || ptr != end || value < 0) {
    throw ValidationError("folds." + key, "fold index must be a non-negative integer string");
  }
  return value;
}

}  // namespace

void DatasetManifest::validate() const {
  if (name.empty()) throw ValidationError("name", "must not be empty");
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ValidationError("rate_hz", "must be positive");
  montage.validate();
  if (classes.empty()) throw ValidationError("classes", "at least one class required");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    const std::string where = "trials[" + std::to_string(i) + "]";
    if (t.id.empty()) throw ValidationError(where + ".id", "must not be empty");
    if (!ids.insert(t.id).second) throw ValidationError(where + ".id", "duplicate trial id '" + t.id + "'");
    if (t.label < 0 || static_cast<std::size_t>(t.label) >= classes.size()) {
      throw ValidationError("label < class count", where + " (" + t.id + ") has label " + std::to_string(t.label) +
                                                        " but only " + std::to_string(classes.size()) + " classes");
    }
  }

  if (folds.empty()) return;
  std::map<std::string, int> owner;
  for (const auto& [fold, members] : folds) {
    for (const auto& s : members) {
      auto [it, inserted] = owner.emplace(s, fold);
      if (!inserted) {
        throw ValidationError("folds disjoint", "subject '" + s + "' appears in folds " + std::to_string(it->second) +
                                                    " and " + std::to_string(fold));
      }
    }
  }
  const auto subjects_all = subjects();
  for (const auto& s : subjects_all) {
    if (!owner.count(s)) throw ValidationError("folds cover subjects", "subject '" + s + "' is in no fold");
  }
  for (const auto& [s, fold] : owner) {
    if (!std::binary_search(subjects_all.begin(), subjects_all.end(), s)) {
      throw ValidationError("folds cover subjects",
                            "fold " + std::to_string(fold) + " lists subject '" + s + "' with no trials");
    }
  }
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& [fold, members] : folds) {
    lo = std::min(lo, members.size());
    hi = std::max(hi, members.size());
  }
  if (hi - lo > 1) {
    throw ValidationError("fold sizes balanced",
                          "fold sizes range from " + std::to_string(lo) + " to " + std::to_string(hi));
  }
}

std::vector<std::string> DatasetManifest::subjects() const {
  std::vector<std::string> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.subject);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<int> DatasetManifest::fold_of_subject(const std::string& subject) const {
  for (const auto& [fold, members] : folds) {
    if (std::find(members.begin(), members.end(), subject) != members.end()) return fold;
  }
  return std::nullopt;
}

int DatasetManifest::fold_of_trial(const TrialRecord& trial) const {
  auto f = fold_of_subject(trial.subject);
  if (!f) throw ValidationError("folds", "trial '" + trial.id + "' belongs to subject '" + trial.subject + "' in no fold");
  return *f;
}

std::optional<std::size_t> DatasetManifest::trial_index(const std::string& trial_id) const {
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].id == trial_id) return i;
  }
  return std::nullopt;
}

json manifest_to_json(const DatasetManifest& m) {
  json doc = json::object();
  doc["name"] = m.name;
  doc["rate_hz"] = m.rate_hz;
  doc["channels"] = m.montage.channel_names;
  if (m.montage.positions_2d) {
    json pos = json::array();
    for (const auto& p : *m.montage.positions_2d) pos.push_back({p.x, p.y});
    doc["positions_2d"] = std::move(pos);
  }
  doc["classes"] = m.classes;
  json trials = json::array();
  for (const auto& t : m.trials) trials.push_back({{"id", t.id}, {"subject", t.subject}, {"label", t.label}});
  doc["trials"] = std::move(trials);
  json folds = json::object();
  for (const auto& [fold, members] : m.folds) folds[std::to_string(fold)] = members;
  doc["folds"] = std::move(folds);
  return doc;
}

DatasetManifest manifest_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("manifest", "top level must be a JSON object");
  DatasetManifest m;
  m.name = as_string(require(doc, "name", ""), "name");
  m.rate_hz = as_number(require(doc, "rate_hz", ""), "rate_hz");
  m.montage.channel_names = as_string_list(require(doc, "channels", ""), "channels");
  if (auto it = doc.find("positions_2d"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError("positions_2d", "expected an array of [x, y] pairs");
    std::vector<Point2> pos;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& p = (*it)[i];
      const std::string field = "positions_2d[" + std::to_string(i) + "]";
      if (!p.is_array() || p.size() != 2) throw ValidationError(field, "expected [x, y]");
      pos.push_back({as_number(p[0], field), as_number(p[1], field)});
    }
    m.montage.positions_2d = std::move(pos);
  }
  m.classes = as_string_list(require(doc, "classes", ""), "classes");

  const auto& trials = require(doc, "trials", "");
  if (!trials.is_array()) throw ValidationError("trials", "expected an array");
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const std::string where = "trials[" + std::to_string(i) + "]";
    const auto& t = trials[i];
    if (!t.is_object()) throw ValidationError(where, "expected an object");
    TrialRecord rec;
    rec.id = as_string(require(t, "id", where), where + ".id");
    rec.subject = as_string(require(t, "subject", where), where + ".subject");
    const auto& label = require(t, "label", where);
    if (!label.is_number_integer()) throw ValidationError(where + ".label", "expected an integer class index");
    rec.label = label.get<int>();
    m.trials.push_back(std::move(rec));
  }

  const auto& folds = require(doc, "folds", "");
  if (!folds.is_object()) throw ValidationError("folds", "expected an object of fold index -> subjects");
  for (const auto& [key, members] : folds.items()) {
    m.folds[parse_fold_key(key)] = as_string_list(members, "folds." + key);
  }
  m.validate();
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("manifest", path.string() + " is not valid JSON: " + e.what());
  }
  return manifest_from_json(doc);
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  write_file_atomic(path, manifest_to_json(manifest).dump(2) + "\n");
}

}  // namespace eegrob
