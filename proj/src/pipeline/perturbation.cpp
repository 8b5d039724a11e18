#include "eegrob/pipeline/perturbation.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "eegrob/core/error.hpp"
#include "eegrob/perturb/noise.hpp"

using nlohmann::json;

namespace eegrob {

namespace {

std::string field(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Which optional fields each kind requires (R) or accepts (A).
struct FieldRule {
  char snr_db, p, mode, region_set, task, snr_reference, scope;
};

FieldRule rule(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::white_noise:
    case PerturbationKind::pink_noise: return {'R', 0, 0, 0, 0, 0, 0};
    case PerturbationKind::random_dropout: return {0, 'R', 'A', 0, 0, 0, 'A'};
    case PerturbationKind::region_dropout: return {0, 0, 'A', 'R', 'A', 0, 0};
    case PerturbationKind::region_noise: return {'R', 0, 0, 'R', 'A', 'A', 0};
  }
  return {};
}

template <typename T>
void check_presence(const std::optional<T>& v, char r, const char* name, PerturbationKind kind) {
  if (r == 'R' && !v) throw ValidationError(name, fmt::format("required for kind {}", to_string(kind)));
  if (r == 0 && v) throw ValidationError(name, fmt::format("not used by kind {}", to_string(kind)));
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) {
    throw ValidationError(name, "expected a number, got " + (v.is_string() ? "\"" + v.get<std::string>() + "\"" : v.dump()));
  }
  return v.get<double>();
}

std::string text(const json& v, const std::string& name) {
  if (!v.is_string()) throw ValidationError(name, "expected a string, got " + v.dump());
  return v.get<std::string>();
}

// Re-raises an enum parse error under the full field path.
template <typename F>
auto parse_enum(const json& v, const std::string& name, F&& parse) {
  const auto s = text(v, name);
  try {
    return parse(s);
  } catch (const ValidationError& e) {
    throw ValidationError(name, e.what());
  }
}

}  // namespace

std::string_view to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::white_noise: return "white_noise";
    case PerturbationKind::pink_noise: return "pink_noise";
    case PerturbationKind::random_dropout: return "random_dropout";
    case PerturbationKind::region_dropout: return "region_dropout";
    case PerturbationKind::region_noise: return "region_noise";
  }
  return "white_noise";
}

PerturbationKind perturbation_kind_from_string(std::string_view s) {
  for (auto k : {PerturbationKind::white_noise, PerturbationKind::pink_noise, PerturbationKind::random_dropout,
                 PerturbationKind::region_dropout, PerturbationKind::region_noise}) {
    if (s == to_string(k)) return k;
  }
  throw ValidationError("kind", "expected white_noise, pink_noise, random_dropout, region_dropout or region_noise, got \"" +
                                    std::string(s) + "\"");
}

void PerturbationSpec::validate() const {
  const auto r = rule(kind);
  check_presence(snr_db, r.snr_db, "snr_db", kind);
  check_presence(p, r.p, "p", kind);
  check_presence(mode, r.mode, "mode", kind);
  check_presence(region_set, r.region_set, "region_set", kind);
  check_presence(task, r.task, "task", kind);
  check_presence(snr_reference, r.snr_reference, "snr_reference", kind);
  check_presence(scope, r.scope, "scope", kind);
  if (snr_db && !std::isfinite(*snr_db)) throw ValidationError("snr_db", "must be finite");
  if (p && !(*p >= 0.0 && *p <= 1.0)) throw ValidationError("p", "must lie in [0, 1]");
  if (task && task->empty()) throw ValidationError("task", "must not be empty");
}

json to_json(const PerturbationSpec& s) {
  json j = {{"kind", to_string(s.kind)}, {"seed", s.seed}};
  if (s.snr_db) j["snr_db"] = *s.snr_db;
  if (s.p) j["p"] = *s.p;
  if (s.mode) j["mode"] = to_string(*s.mode);
  if (s.region_set) j["region_set"] = to_string(*s.region_set);
  if (s.task) j["task"] = *s.task;
  if (s.snr_reference) j["snr_reference"] = to_string(*s.snr_reference);
  if (s.scope) j["scope"] = to_string(*s.scope);
  return j;
}

PerturbationSpec perturbation_spec_from_json(const json& doc, const std::string& where,
                                             std::optional<std::uint64_t> default_seed) {
  if (!doc.is_object()) throw ValidationError(where.empty() ? "spec" : where, "expected an object");
  static const std::set<std::string> known{"kind", "seed", "snr_db", "p", "mode", "region_set", "task",
                                           "snr_reference", "scope"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ValidationError(field(where, key), "unknown field");
  }
  PerturbationSpec s;
  const auto kind = doc.find("kind");
  if (kind == doc.end()) throw ValidationError(field(where, "kind"), "missing");
  s.kind = parse_enum(*kind, field(where, "kind"), perturbation_kind_from_string);

  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
      throw ValidationError(field(where, "seed"), "expected a non-negative integer");
    }
    s.seed = it->get<std::uint64_t>();
  } else if (default_seed) {
    s.seed = *default_seed;
  } else {
    throw ValidationError(field(where, "seed"), "missing");
  }
  if (auto it = doc.find("snr_db"); it != doc.end()) s.snr_db = number(*it, field(where, "snr_db"));
  if (auto it = doc.find("p"); it != doc.end()) s.p = number(*it, field(where, "p"));
  if (auto it = doc.find("mode"); it != doc.end()) s.mode = parse_enum(*it, field(where, "mode"), dropout_mode_from_string);
  if (auto it = doc.find("region_set"); it != doc.end()) {
    s.region_set = parse_enum(*it, field(where, "region_set"), region_set_from_string);
  }
  if (auto it = doc.find("task"); it != doc.end()) s.task = text(*it, field(where, "task"));
  if (auto it = doc.find("snr_reference"); it != doc.end()) {
    s.snr_reference = parse_enum(*it, field(where, "snr_reference"), snr_reference_from_string);
  }
  if (auto it = doc.find("scope"); it != doc.end()) s.scope = parse_enum(*it, field(where, "scope"), mask_scope_from_string);
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(field(where, e.field()), std::string(e.what()).substr(e.field().size() + 2));
  }
  return s;
}

std::vector<PerturbationSpec> perturbation_specs_from_json(const json& doc, std::optional<std::uint64_t> default_seed) {
  std::vector<PerturbationSpec> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back(perturbation_spec_from_json(doc[i], "[" + std::to_string(i) + "]", default_seed));
    }
  } else {
    out.push_back(perturbation_spec_from_json(doc, {}, default_seed));
  }
  return out;
}

std::string condition_id(const PerturbationSpec& s) {
  std::string id(to_string(s.kind));
  if (s.region_set) id += "_" + std::string(to_string(*s.region_set));
  if (s.p) id += fmt::format("_p{}", *s.p);
  if (s.snr_db) id += fmt::format("_snr{}", *s.snr_db);
  if (s.mode == DropoutMode::remove) id += "_remove";
  if (s.scope == MaskScope::per_trial) id += "_per_trial";
  return fmt::format("{}_{:08x}", id, fnv1a(to_json(s).dump()) & 0xffffffffULL);
}

TrialTensor apply_perturbation(const TrialTensor& trial, const PerturbationSpec& spec, std::uint64_t trial_index,
                               const PerturbationContext& context) {
  spec.validate();
  const RegionTable& table = context.regions ? *context.regions : builtin_regions();
  auto assignment = [&]() -> const TaskRegionAssignment& {
    const auto& name = spec.task ? spec.task : context.task;
    if (!name) throw ValidationError("task", fmt::format("{} needs a task (spec or run config)", to_string(spec.kind)));
    return table.task(*name);
  };
  switch (spec.kind) {
    case PerturbationKind::white_noise:
    case PerturbationKind::pink_noise: {
      const NoiseSpec ns{spec.kind == PerturbationKind::white_noise ? NoiseKind::white : NoiseKind::pink, *spec.snr_db,
                         spec.seed, context.filter};
      return add_noise(trial, ns, trial_index);
    }
    case PerturbationKind::random_dropout: {
      const DropoutSpec ds{*spec.p, spec.mode.value_or(DropoutMode::zero_pad), spec.seed,
                           spec.scope.value_or(MaskScope::per_dataset)};
      return apply_dropout(trial, random_mask(trial.channels(), ds, context.dataset, trial_index), ds.mode);
    }
    case PerturbationKind::region_dropout:
      return region_dropout(trial, assignment(), *spec.region_set, spec.mode.value_or(DropoutMode::zero_pad), table);
    case PerturbationKind::region_noise: {
      RegionNoiseSpec rs;
      rs.which = *spec.region_set;
      rs.snr_db = *spec.snr_db;
      rs.seed = spec.seed;
      rs.filter = context.filter;
      rs.reference = spec.snr_reference.value_or(SnrReference::region);
      return region_noise(trial, assignment(), rs, trial_index, nullptr, table);
    }
  }
  throw Error("unreachable perturbation kind");
}

}  // namespace eegrob
