#include "eegrob/regions/regions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "eegrob/core/error.hpp"
#include "eegrob/regions_data.hpp"

using nlohmann::json;

namespace eegrob {

namespace {

std::vector<std::string> string_list(const json& doc, const std::string& field) {
  if (!doc.is_array()) throw ValidationError(field, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_string()) throw ValidationError(field + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(doc[i].get<std::string>());
  }
  return out;
}

const json& member(const json& doc, const char* key, const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ValidationError(where + key, "missing");
  return *it;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

void RegionTable::validate() const {
  std::set<std::string> names;
  std::map<std::string, std::set<std::string>> per_family;
  for (const auto& g : groups) {
    if (!names.insert(g.name).second) throw ValidationError("groups", "duplicate group \"" + g.name + "\"");
    require_unique_labels(g.electrodes, "groups." + g.name);
    for (const auto& e : g.electrodes) {
      if (!per_family[g.family].insert(e).second) {
        throw ValidationError("groups." + g.name, "electrode " + e + " appears twice in family " + g.family);
      }
    }
  }
  for (const auto& t : tasks) {
    for (const auto* list : {&t.primary, &t.control}) {
      for (const auto& n : *list) {
        if (!find_group(n) && !is_derivation(n)) {
          throw ValidationError("tasks." + t.task, "unknown region \"" + n + "\"");
        }
      }
    }
    for (const auto& n : t.primary) {
      if (std::find(t.control.begin(), t.control.end(), n) != t.control.end()) {
        throw ValidationError("tasks." + t.task, "region \"" + n + "\" is both primary and control");
      }
    }
  }
}

const RegionGroup* RegionTable::find_group(std::string_view name) const {
  for (const auto& g : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

bool RegionTable::is_derivation(std::string_view name) const {
  return std::find(derivations.begin(), derivations.end(), name) != derivations.end();
}

const TaskRegionAssignment& RegionTable::task(std::string_view name) const {
  for (const auto& t : tasks) {
    if (t.task == name) return t;
  }
  std::vector<std::string> known;
  for (const auto& t : tasks) known.push_back(t.task);
  throw ValidationError("task", "unknown task \"" + std::string(name) + "\" (known: " + join(known) + ")");
}

const RegionTable& builtin_regions() {
  static const RegionTable table = region_table_from_json(json::parse(detail::kRegionsJson));
  return table;
}

json to_json(const RegionTable& table) {
  json groups = json::array();
  for (const auto& g : table.groups) {
    groups.push_back({{"name", g.name}, {"family", g.family}, {"electrodes", g.electrodes}});
  }
  json tasks = json::array();
  for (const auto& t : table.tasks) tasks.push_back({{"task", t.task}, {"primary", t.primary}, {"control", t.control}});
  return {{"version", table.version}, {"groups", groups}, {"derivations", table.derivations}, {"tasks", tasks}};
}

RegionTable region_table_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("regions", "expected an object");
  RegionTable table;
  const auto& version = member(doc, "version", "");
  if (!version.is_number_integer()) throw ValidationError("version", "expected an integer");
  table.version = version.get<int>();
  const auto& groups = member(doc, "groups", "");
  if (!groups.is_array()) throw ValidationError("groups", "expected an array");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string where = "groups[" + std::to_string(i) + "].";
    const auto& g = groups[i];
    if (!g.is_object()) throw ValidationError(where, "expected an object");
    const auto& name = member(g, "name", where);
    const auto& family = member(g, "family", where);
    if (!name.is_string()) throw ValidationError(where + "name", "expected a string");
    if (!family.is_string()) throw ValidationError(where + "family", "expected a string");
    table.groups.push_back(
        {name.get<std::string>(), family.get<std::string>(), string_list(member(g, "electrodes", where), where + "electrodes")});
  }
  if (auto it = doc.find("derivations"); it != doc.end()) table.derivations = string_list(*it, "derivations");
  const auto& tasks = member(doc, "tasks", "");
  if (!tasks.is_array()) throw ValidationError("tasks", "expected an array");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string where = "tasks[" + std::to_string(i) + "].";
    const auto& t = tasks[i];
    const auto& name = member(t, "task", where);
    if (!name.is_string()) throw ValidationError(where + "task", "expected a string");
    table.tasks.push_back({name.get<std::string>(), string_list(member(t, "primary", where), where + "primary"),
                           string_list(member(t, "control", where), where + "control")});
  }
  table.validate();
  return table;
}

std::string_view to_string(RegionSet which) { return which == RegionSet::primary ? "primary" : "control"; }

RegionSet region_set_from_string(std::string_view s) {
  if (s == "primary") return RegionSet::primary;
  if (s == "control") return RegionSet::control;
  throw ValidationError("region_set", "expected \"primary\" or \"control\", got \"" + std::string(s) + "\"");
}

std::string_view to_string(SnrReference ref) { return ref == SnrReference::region ? "region" : "trial"; }

SnrReference snr_reference_from_string(std::string_view s) {
  if (s == "region") return SnrReference::region;
  if (s == "trial") return SnrReference::trial;
  throw ValidationError("snr_reference", "expected \"region\" or \"trial\", got \"" + std::string(s) + "\"");
}

ResolvedRegion resolve_region(std::span<const std::string> channel_names, std::span<const std::string> group_names,
                              const RegionTable& table) {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t c = 0; c < channel_names.size(); ++c) index.emplace(channel_names[c], c);

  std::set<std::size_t> picked;
  ResolvedRegion out;
  for (const auto& name : group_names) {
    std::vector<std::string> electrodes;
    if (const auto* g = table.find_group(name)) {
      electrodes = g->electrodes;
    } else if (table.is_derivation(name)) {
      electrodes = {name};
    } else {
      throw ValidationError("region", "unknown region group \"" + name + "\"");
    }
    for (const auto& e : electrodes) {
      if (auto it = index.find(e); it != index.end()) {
        picked.insert(it->second);
      } else {
        out.skipped.push_back(e);
      }
    }
  }
  if (picked.empty()) {
    throw ValidationError("region", "no electrode of " + join({group_names.begin(), group_names.end()}) +
                                        " is present in the montage");
  }
  out.channels.assign(picked.begin(), picked.end());
  return out;
}

ResolvedRegion resolve_region(const Montage& montage, std::span<const std::string> group_names,
                              const RegionTable& table) {
  return resolve_region(montage.channel_names, group_names, table);
}

const std::vector<std::string>& region_names(const TaskRegionAssignment& assignment, RegionSet which) {
  return which == RegionSet::primary ? assignment.primary : assignment.control;
}

TrialTensor region_dropout(const TrialTensor& trial, const TaskRegionAssignment& assignment, RegionSet which,
                           DropoutMode mode, const RegionTable& table) {
  const auto resolved = resolve_region(trial.channel_names(), region_names(assignment, which), table);
  ChannelMask mask;
  mask.dropped = resolved.channels;
  return apply_dropout(trial, mask, mode);
}

TrialTensor region_noise(const TrialTensor& trial, const TaskRegionAssignment& assignment,
                         const RegionNoiseSpec& spec, std::uint64_t trial_index, PowerStats* stats,
                         const RegionTable& table) {
  const auto resolved = resolve_region(trial.channel_names(), region_names(assignment, spec.which), table);
  const double reference = spec.reference == SnrReference::region ? signal_power(trial.data(), resolved.channels)
                                                                  : signal_power(trial);
  const NoiseSpec noise{NoiseKind::white, spec.snr_db, spec.seed, spec.filter};
  return add_noise_to_rows(trial, resolved.channels, noise, rng::Purpose::region_noise, trial_index, reference, stats);
}

namespace {

// Geometry of one electrode row on the left hemisphere, in degrees: polar
// angle of the midline electrode (from Cz), its azimuth (90 = nose,
// 180 = left ear, 270 = inion), the azimuth where the row meets the 72 degree
// ring (Fpz, Fp1, AF7, F7, FT7, T7, ..., O1, Oz), and the number index that
// sits on that ring.
struct RowGeometry {
  double midline_polar;
  double midline_azimuth;
  double ring_azimuth;
  double ring_level;
};

const std::map<std::string, RowGeometry, std::less<>>& row_geometry() {
  static const std::map<std::string, RowGeometry, std::less<>> rows = {
      {"Fp", {72, 90, 108, 1}},   {"AF", {54, 90, 126, 4}},  {"F", {36, 90, 144, 4}},   {"FC", {18, 90, 162, 4}},
      {"FT", {18, 90, 162, 4}},   {"C", {0, 180, 180, 4}},   {"T", {0, 180, 180, 4}},   {"CP", {18, 270, 198, 4}},
      {"TP", {18, 270, 198, 4}},  {"P", {36, 270, 216, 4}},  {"PO", {54, 270, 234, 4}}, {"O", {72, 270, 252, 1}},
      {"I", {90, 270, 270, 1}},   {"CB", {108, 270, 252, 0}}};
  return rows;
}

std::optional<RowGeometry> row_of(std::string_view prefix) {
  const auto& rows = row_geometry();
  if (auto it = rows.find(prefix); it != rows.end()) return it->second;
  // Half-way rows such as FTT, TTP, TPP: split into two known rows.
  for (std::size_t cut = 1; cut < prefix.size(); ++cut) {
    auto a = rows.find(prefix.substr(0, cut));
    auto b = rows.find(prefix.substr(cut));
    if (a != rows.end() && b != rows.end()) {
      const auto& x = a->second;
      const auto& y = b->second;
      return RowGeometry{(x.midline_polar + y.midline_polar) / 2, (x.midline_azimuth + y.midline_azimuth) / 2,
                         (x.ring_azimuth + y.ring_azimuth) / 2, (x.ring_level + y.ring_level) / 2};
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Point2> standard_position(std::string_view label) {
  if (auto dash = label.find('-'); dash != std::string_view::npos) {
    const auto a = standard_position(label.substr(0, dash));
    const auto b = standard_position(label.substr(dash + 1));
    if (!a || !b) return std::nullopt;
    return Point2{(a->x + b->x) / 2.0, (a->y + b->y) / 2.0};
  }
  std::string_view rest = label;
  if (!rest.empty() && rest.back() == 'h') rest.remove_suffix(1);
  int number = 0;
  std::string_view prefix;
  if (!rest.empty() && rest.back() == 'z') {
    prefix = rest.substr(0, rest.size() - 1);
  } else {
    std::size_t digits = rest.size();
    while (digits > 0 && std::isdigit(static_cast<unsigned char>(rest[digits - 1]))) --digits;
    if (digits == rest.size() || digits == 0) return std::nullopt;
    number = std::stoi(std::string(rest.substr(digits)));
    if (number < 1) return std::nullopt;
    prefix = rest.substr(0, digits);
  }
  const auto row = row_of(prefix);
  if (!row) return std::nullopt;

  // Odd numbers lie on the left, even on the right; 1/2 is the first step.
  const double level = (number + 1) / 2;
  double polar = row->midline_polar, azimuth = row->midline_azimuth;
  if (level > 0 && level <= row->ring_level) {
    const double t = level / row->ring_level;
    polar += t * (72.0 - row->midline_polar);
    azimuth += t * (row->ring_azimuth - row->midline_azimuth);
  } else if (level > row->ring_level) {
    polar = 72.0 + 18.0 * (level - row->ring_level);
    azimuth = row->ring_azimuth;
  }
  constexpr double deg = std::numbers::pi / 180.0;
  // 120 degrees of polar angle maps to the disc edge.
  const double r = polar / 120.0;
  double x = r * std::cos(azimuth * deg);
  const double y = r * std::sin(azimuth * deg);
  if (number % 2 == 0) x = -x;
  if (std::abs(x) < 1e-12) x = 0.0;
  return Point2{x, std::abs(y) < 1e-12 ? 0.0 : y};
}

std::optional<std::vector<Point2>> standard_positions(std::span<const std::string> labels) {
  std::vector<Point2> out;
  for (const auto& l : labels) {
    auto p = standard_position(l);
    if (!p) return std::nullopt;
    out.push_back(*p);
  }
  return out;
}

const std::vector<std::string>& physionet64_channels() {
  static const std::vector<std::string> names = {
      "FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "C5",  "C3",  "C1",  "Cz",  "C2",  "C4",
      "C6",  "CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "Fp1", "Fpz", "Fp2", "AF7", "AF3",
      "AFz", "AF4", "AF8", "F7",  "F5",  "F3",  "F1",  "Fz",  "F2",  "F4",  "F6",  "F8",  "FT7",
      "FT8", "T7",  "T8",  "T9",  "T10", "TP7", "TP8", "P7",  "P5",  "P3",  "P1",  "Pz",  "P2",
      "P4",  "P6",  "P8",  "PO7", "PO3", "POz", "PO4", "PO8", "O1",  "Oz",  "O2",  "Iz"};
  return names;
}

}  // namespace eegrob
