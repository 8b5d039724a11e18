#include "eegrob/attribution/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

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

std::string text(const json& doc, const char* key, const std::string& where) {
  const auto& v = require(doc, key, where);
  if (!v.is_string()) throw ValidationError(field(where, key), "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_text(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(field(where, key), "expected a string");
  return it->get<std::string>();
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Time-mean of |normalized R| per channel.
std::vector<double> channel_profile(const Matrix& raw) {
  const auto norm = normalize_relevance(raw);
  std::vector<double> out(norm.rows());
  for (std::size_t c = 0; c < norm.rows(); ++c) {
    double s = 0.0;
    for (double v : norm.row(c)) s += std::abs(v);
    out[c] = s / static_cast<double>(norm.cols());
  }
  return out;
}

void check_shapes(std::span<const SelectedMap> maps) {
  if (maps.empty()) throw ValidationError("relevance", "no maps selected");
  const auto rows = maps.front().relevance.rows(), cols = maps.front().relevance.cols();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& r = maps[i].relevance;
    if (r.rows() != rows || r.cols() != cols) {
      throw ValidationError("relevance[" + std::to_string(i) + "]",
                            "shape " + std::to_string(r.rows()) + "x" + std::to_string(r.cols()) + " differs from " +
                                std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!r.all_finite()) throw ValidationError("relevance[" + std::to_string(i) + "]", "non-finite values");
  }
}

// Mean over folds of the mean over the given maps' profiles.
std::vector<double> fold_mean(std::span<const SelectedMap> maps, std::span<const std::size_t> which) {
  std::map<int, std::pair<std::vector<double>, std::size_t>> per_fold;
  const auto channels = maps.front().relevance.rows();
  for (std::size_t i : which) {
    auto& [sum, n] = per_fold[maps[i].fold];
    if (sum.empty()) sum.assign(channels, 0.0);
    const auto p = channel_profile(maps[i].relevance);
    for (std::size_t c = 0; c < channels; ++c) sum[c] += p[c];
    ++n;
  }
  std::vector<double> out(channels, 0.0);
  for (const auto& [fold, acc] : per_fold) {
    for (std::size_t c = 0; c < channels; ++c) out[c] += acc.first[c] / static_cast<double>(acc.second);
  }
  for (double& v : out) v /= static_cast<double>(per_fold.size());
  return out;
}

}  // namespace

std::string_view to_string(RelevanceMethod method) {
  switch (method) {
    case RelevanceMethod::attnlrp: return "attnlrp";
    case RelevanceMethod::gxi: return "gxi";
    case RelevanceMethod::gradcam: return "gradcam";
  }
  return "attnlrp";
}

RelevanceMethod relevance_method_from_string(std::string_view s) {
  if (s == "attnlrp") return RelevanceMethod::attnlrp;
  if (s == "gxi") return RelevanceMethod::gxi;
  if (s == "gradcam") return RelevanceMethod::gradcam;
  throw ValidationError("method", "expected attnlrp, gxi or gradcam, got \"" + std::string(s) + "\"");
}

json to_json(const RelevanceRecord& r) {
  json j = {{"trial_id", r.trial_id}, {"fold", r.fold},
            {"true", r.true_class},   {"pred", r.pred},
            {"confidence", r.confidence}, {"tensor_path", r.tensor_path},
            {"method", to_string(r.method)}};
  if (r.condition) j["condition"] = *r.condition;
  if (r.model) j["model"] = *r.model;
  return j;
}

RelevanceRecord relevance_record_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ValidationError(where.empty() ? "record" : where, "expected an object");
  RelevanceRecord r;
  r.trial_id = text(doc, "trial_id", where);
  r.fold = integer(doc, "fold", where);
  r.true_class = integer(doc, "true", where);
  r.pred = integer(doc, "pred", where);
  const auto& conf = require(doc, "confidence", where);
  if (!conf.is_number()) throw ValidationError(field(where, "confidence"), "expected a number");
  r.confidence = conf.get<double>();
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
    throw ValidationError(field(where, "confidence"), "must lie in [0, 1]");
  }
  r.tensor_path = text(doc, "tensor_path", where);
  try {
    r.method = relevance_method_from_string(text(doc, "method", where));
  } catch (const ValidationError& e) {
    throw ValidationError(field(where, "method"), e.what());
  }
  r.condition = optional_text(doc, "condition", where);
  r.model = optional_text(doc, "model", where);
  return r;
}

std::string to_jsonl(const std::vector<RelevanceRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::vector<RelevanceRecord> parse_relevance_jsonl(std::string_view body) {
  std::vector<RelevanceRecord> out;
  std::size_t line_no = 0;
  while (!body.empty()) {
    const auto nl = body.find('\n');
    std::string_view line = body.substr(0, nl);
    body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
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
    out.push_back(relevance_record_from_json(doc, where));
  }
  return out;
}

std::vector<RelevanceRecord> read_relevance_index(const std::filesystem::path& path) {
  try {
    return parse_relevance_jsonl(read_file(path));
  } catch (const ValidationError& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("values", "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::size_t> select_samples(std::span<const RelevanceRecord> records, PercentilePopulation population) {
  std::vector<double> pool;
  for (const auto& r : records) {
    if (population == PercentilePopulation::all || r.pred == r.true_class) pool.push_back(r.confidence);
  }
  const bool any_correct = std::any_of(records.begin(), records.end(),
                                       [](const RelevanceRecord& r) { return r.pred == r.true_class; });
  if (!any_correct) throw ValidationError("records", "no correctly classified records to select from");
  const double cut = percentile(std::move(pool), 0.75);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].pred == records[i].true_class && records[i].confidence > cut) out.push_back(i);
  }
  return out;
}

Matrix normalize_relevance(const Matrix& relevance) {
  std::vector<double> mags(relevance.size());
  std::transform(relevance.values().begin(), relevance.values().end(), mags.begin(),
                 [](double v) { return std::abs(v); });
  const double q99 = mags.empty() ? 0.0 : percentile(std::move(mags), 0.99);
  Matrix out(relevance.rows(), relevance.cols());
  if (q99 == 0.0) return out;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    out.values()[i] = std::clamp(relevance.values()[i] / q99, -1.0, 1.0);
  }
  return out;
}

std::vector<double> aggregate_topo(std::span<const SelectedMap> maps) {
  check_shapes(maps);
  std::vector<std::size_t> all(maps.size());
  std::iota(all.begin(), all.end(), 0);
  return fold_mean(maps, all);
}

std::map<int, std::vector<double>> aggregate_topo_per_class(std::span<const SelectedMap> maps) {
  check_shapes(maps);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < maps.size(); ++i) by_class[maps[i].true_class].push_back(i);
  std::map<int, std::vector<double>> out;
  for (const auto& [k, idx] : by_class) out[k] = fold_mean(maps, idx);
  return out;
}

std::vector<double> aggregate_topo_class_averaged(std::span<const SelectedMap> maps) {
  const auto per_class = aggregate_topo_per_class(maps);
  std::vector<double> out(maps.front().relevance.rows(), 0.0);
  for (const auto& [k, v] : per_class) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += v[c];
  }
  for (double& v : out) v /= static_cast<double>(per_class.size());
  return out;
}

double spearman_channels(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("channels", "maps have different channel counts");
  if (a.size() < 2) throw ValidationError("channels", "need at least two channels");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double mean = (static_cast<double>(a.size()) + 1.0) / 2.0;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) throw ValidationError("map", "constant map, rank correlation is undefined");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace eegrob
