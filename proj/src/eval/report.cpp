#include "eegrob/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

#include <fmt/format.h>

#include "eegrob/core/error.hpp"
#include "eegrob/core/io.hpp"

using nlohmann::json;

namespace eegrob {

namespace {

using CellKey = std::tuple<std::string, std::string, std::string>;

void check_class_counts(const std::vector<ConditionCell>& cells) {
  std::map<std::string, int> classes;
  for (const auto& c : cells) {
    auto [it, inserted] = classes.emplace(c.task, c.n_classes);
    if (!inserted && it->second != c.n_classes) {
      throw ValidationError("cells", "task " + c.task + " mixes " + std::to_string(it->second) + " and " +
                                         std::to_string(c.n_classes) + " classes");
    }
  }
}

std::vector<std::string> task_order(const std::vector<ConditionCell>& cells) {
  std::vector<std::string> tasks;
  for (const auto& c : cells) {
    if (std::find(tasks.begin(), tasks.end(), c.task) == tasks.end()) tasks.push_back(c.task);
  }
  return tasks;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

// ".689" style: three decimals, leading zero dropped.
std::string short_decimal(double v) {
  auto s = fmt::format("{:.3f}", v);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

std::string md_row(const std::vector<std::string>& cols) {
  std::string out = "|";
  for (const auto& c : cols) out += " " + c + " |";
  return out + "\n";
}

std::string md_rule(std::size_t n) {
  std::string out = "|";
  for (std::size_t i = 0; i < n; ++i) out += "---|";
  return out + "\n";
}

struct Ranked {
  std::string model;
  std::optional<double> average;
  std::optional<double> spread;
};

// Descending by average; models without an average go last; ties by name.
void rank(std::vector<Ranked>& rows) {
  std::sort(rows.begin(), rows.end(), [](const Ranked& a, const Ranked& b) {
    if (a.average.has_value() != b.average.has_value()) return a.average.has_value();
    if (a.average && *a.average != *b.average) return *a.average > *b.average;
    return a.model < b.model;
  });
}

std::pair<double, double> mean_and_population_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

EvalCells evaluate(const DatasetManifest& manifest, const std::vector<PredictionRecord>& records,
                   const std::string& clean_condition, const std::string& default_model) {
  manifest.validate();
  check_predictions(manifest, records);
  const int n_classes = static_cast<int>(manifest.classes.size());

  std::map<std::pair<std::string, std::string>, std::map<int, std::pair<std::vector<int>, std::vector<int>>>> groups;
  for (const auto& r : records) {
    auto& fold = groups[{r.model.value_or(default_model), r.condition}][r.fold];
    fold.first.push_back(r.true_class);
    fold.second.push_back(r.pred);
  }
  EvalCells out;
  out.clean_condition = clean_condition;
  for (const auto& [key, folds] : groups) {
    ConditionCell cell{manifest.name, key.first, key.second, n_classes, {}, {}};
    std::vector<double> baccs;
    for (const auto& [fold, tp] : folds) {
      cell.fold_bacc[fold] = balanced_accuracy(tp.first, tp.second, n_classes);
      baccs.push_back(cell.fold_bacc[fold]);
    }
    if (baccs.size() < 2) {
      throw ValidationError("fold", "model " + key.first + " condition " + key.second +
                                        " has predictions for fewer than two folds");
    }
    cell.stats = aggregate_folds(baccs);
    out.cells.push_back(std::move(cell));
  }
  return out;
}

EvalCells merge_cells(const std::vector<EvalCells>& parts) {
  EvalCells out;
  if (parts.empty()) return out;
  out.clean_condition = parts.front().clean_condition;
  std::set<CellKey> seen;
  for (const auto& part : parts) {
    if (part.clean_condition != out.clean_condition) {
      throw ValidationError("clean_condition", "inputs disagree (" + out.clean_condition + " vs " +
                                                   part.clean_condition + ")");
    }
    for (const auto& c : part.cells) {
      if (!seen.emplace(c.task, c.model, c.condition).second) {
        throw ValidationError("cells", "duplicate cell for task " + c.task + ", model " + c.model +
                                           ", condition " + c.condition);
      }
      out.cells.push_back(c);
    }
  }
  check_class_counts(out.cells);
  return out;
}

std::vector<DegradationCell> degradation_cells(const EvalCells& cells) {
  std::map<std::pair<std::string, std::string>, double> clean;
  for (const auto& c : cells.cells) {
    if (c.condition == cells.clean_condition) clean[{c.task, c.model}] = c.stats.mean;
  }
  std::vector<DegradationCell> out;
  for (const auto& c : cells.cells) {
    if (c.condition == cells.clean_condition) continue;
    auto it = clean.find({c.task, c.model});
    if (it == clean.end()) {
      throw ValidationError("cells", "no " + cells.clean_condition + " result for task " + c.task + ", model " +
                                         c.model + " to compare " + c.condition + " against");
    }
    out.push_back({c.task, c.model, c.condition, degradation(it->second, c.stats.mean)});
  }
  return out;
}

json to_json(const EvalCells& cells) {
  json list = json::array();
  for (const auto& c : cells.cells) {
    json folds = json::object();
    for (const auto& [f, b] : c.fold_bacc) folds[std::to_string(f)] = b;
    list.push_back({{"task", c.task},
                    {"model", c.model},
                    {"condition", c.condition},
                    {"n_classes", c.n_classes},
                    {"fold_bacc", folds},
                    {"mean", c.stats.mean},
                    {"std", c.stats.std}});
  }
  return {{"clean_condition", cells.clean_condition}, {"cells", list}};
}

EvalCells eval_cells_from_json(const json& doc) {
  EvalCells out;
  try {
    out.clean_condition = doc.at("clean_condition").get<std::string>();
    for (const auto& c : doc.at("cells")) {
      ConditionCell cell;
      cell.task = c.at("task").get<std::string>();
      cell.model = c.at("model").get<std::string>();
      cell.condition = c.at("condition").get<std::string>();
      cell.n_classes = c.at("n_classes").get<int>();
      std::vector<double> baccs;
      for (const auto& [f, b] : c.at("fold_bacc").items()) {
        cell.fold_bacc[std::stoi(f)] = b.get<double>();
      }
      for (const auto& [f, b] : cell.fold_bacc) baccs.push_back(b);
      cell.stats = aggregate_folds(baccs);
      out.cells.push_back(std::move(cell));
    }
  } catch (const json::exception& e) {
    throw ValidationError("cells", std::string("malformed cells document: ") + e.what());
  }
  check_class_counts(out.cells);
  return out;
}

ReportTables render_report(const EvalCells& cells, const ReportOptions& options) {
  check_class_counts(cells.cells);
  const auto tasks = task_order(cells.cells);
  const auto& excluded = options.exclude_from_average;
  ReportTables out;

  // Clean tables.
  std::map<std::string, std::map<std::string, const ConditionCell*>> clean;  // model -> task -> cell
  std::set<std::string> models;
  for (const auto& c : cells.cells) {
    models.insert(c.model);
    if (c.condition == cells.clean_condition) clean[c.model][c.task] = &c;
  }
  std::vector<Ranked> clean_rows;
  for (const auto& m : models) {
    if (!clean.count(m)) continue;
    std::vector<double> means;
    for (const auto& [task, cell] : clean[m]) {
      if (!excluded.count(task)) means.push_back(cell->stats.mean);
    }
    Ranked row{m, std::nullopt, std::nullopt};
    if (!means.empty()) {
      const auto [mean, spread] = mean_and_population_std(means);
      row.average = mean;
      row.spread = spread;
    }
    clean_rows.push_back(row);
  }
  rank(clean_rows);

  std::string header_csv = "rank,model";
  std::vector<std::string> header_md = {"#", "Model"};
  for (const auto& t : tasks) {
    header_csv += "," + csv_field(t + "_mean") + "," + csv_field(t + "_std");
    header_md.push_back(t);
  }
  header_csv += ",average_mean,average_std\n";
  header_md.push_back("Average");
  out.clean_csv = header_csv;
  out.clean_md = md_row(header_md) + md_rule(header_md.size());
  for (std::size_t i = 0; i < clean_rows.size(); ++i) {
    const auto& row = clean_rows[i];
    std::string csv = std::to_string(i + 1) + "," + csv_field(row.model);
    std::vector<std::string> md = {std::to_string(i + 1), row.model};
    for (const auto& t : tasks) {
      auto it = clean[row.model].find(t);
      if (it == clean[row.model].end()) {
        csv += ",,";
        md.push_back("---");
      } else {
        const auto& s = it->second->stats;
        csv += fmt::format(",{:.6f},{:.6f}", s.mean, s.std);
        md.push_back(short_decimal(s.mean) + "±" + short_decimal(s.std));
      }
    }
    if (row.average) {
      csv += fmt::format(",{:.6f},{:.6f}", *row.average, *row.spread);
      md.push_back(short_decimal(*row.average) + "±" + short_decimal(*row.spread));
    } else {
      csv += ",,";
      md.push_back("---");
    }
    out.clean_csv += csv + "\n";
    out.clean_md += md_row(md);
  }

  // Degradation tables, one per perturbed condition.
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> delta;  // cond -> model -> task
  for (const auto& d : degradation_cells(cells)) delta[d.condition][d.model][d.task] = d.delta_pp;

  out.degradation_csv = "condition,rank,model";
  for (const auto& t : tasks) out.degradation_csv += "," + csv_field(t);
  out.degradation_csv += ",average\n";
  for (const auto& [condition, per_model] : delta) {
    std::vector<Ranked> rows;
    for (const auto& [m, per_task] : per_model) {
      std::vector<double> included;
      for (const auto& [t, v] : per_task) {
        if (!excluded.count(t)) included.push_back(v);
      }
      Ranked row{m, std::nullopt, std::nullopt};
      if (!included.empty()) row.average = mean_and_population_std(included).first;
      rows.push_back(row);
    }
    rank(rows);
    std::vector<std::string> head = {"#", "Model"};
    head.insert(head.end(), tasks.begin(), tasks.end());
    head.push_back("Average");
    out.degradation_md += "### " + condition + "\n\n" + md_row(head) + md_rule(head.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& per_task = per_model.at(rows[i].model);
      std::string csv = csv_field(condition) + "," + std::to_string(i + 1) + "," + csv_field(rows[i].model);
      std::vector<std::string> md = {std::to_string(i + 1), rows[i].model};
      for (const auto& t : tasks) {
        auto it = per_task.find(t);
        csv += it == per_task.end() ? "," : fmt::format(",{:.4f}", it->second);
        md.push_back(it == per_task.end() ? "---" : fmt::format("{:.1f}", it->second));
      }
      csv += rows[i].average ? fmt::format(",{:.4f}", *rows[i].average) : ",";
      md.push_back(rows[i].average ? fmt::format("{:.1f}", *rows[i].average) : "---");
      out.degradation_csv += csv + "\n";
      out.degradation_md += md_row(md);
    }
    out.degradation_md += "\n";
  }
  return out;
}

void emit_report(const EvalCells& cells, const std::filesystem::path& dir, const ReportOptions& options) {
  const auto tables = render_report(cells, options);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "clean.csv", tables.clean_csv);
  write_file_atomic(dir / "clean.md", tables.clean_md);
  write_file_atomic(dir / "degradation.csv", tables.degradation_csv);
  write_file_atomic(dir / "degradation.md", tables.degradation_md);
  write_file_atomic(dir / "cells.json", to_json(cells).dump(2) + "\n");
}

}  // namespace eegrob
