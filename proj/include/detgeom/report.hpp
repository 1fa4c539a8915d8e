// Copyright 2026 The detgeom Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "detgeom/dataset.hpp"
#include "detgeom/errors.hpp"
#include "detgeom/evaluation.hpp"

namespace detgeom {

// Frames per second from a per-image latency, rounded to one decimal.
inline double fps_from_latency(double latency_ms) {
  if (!(latency_ms > 0.0)) throw InvalidArgument("latency must be positive");
  return std::round(10000.0 / latency_ms) / 10.0;
}

// 100 * (value - baseline) / baseline.
inline double percent_change(double baseline, double value) {
  if (baseline == 0.0) throw InvalidArgument("percent change from a zero baseline");
  return 100.0 * (value - baseline) / baseline;
}

struct ModelReportRow {
  std::string name;
  double map_all = 0.0;
  double map_50 = 0.0;
  double average_recall = 0.0;
  double f1 = 0.0;  // harmonic mean of map_all and average_recall
  double latency_ms = 0.0;
  double fps = 0.0;
  // Values as published alongside the inputs, when a metrics file has them.
  std::optional<double> reported_f1;
  std::optional<double> reported_fps;
};

inline ModelReportRow make_report_row(std::string name, double map_all, double map_50,
                                      double average_recall, double latency_ms) {
  ModelReportRow r;
  r.name = std::move(name);
  r.map_all = map_all;
  r.map_50 = map_50;
  r.average_recall = average_recall;
  r.f1 = f1(map_all, average_recall);
  r.latency_ms = latency_ms;
  r.fps = fps_from_latency(latency_ms);
  return r;
}

// Per-class AP for several models: classes[i].ap_all[j] is class i under
// models[j].
struct ClasswiseTable {
  struct Row {
    std::string name;
    std::vector<double> ap_all;
    std::vector<double> ap_50;
  };
  std::vector<std::string> models;
  std::vector<Row> classes;

  std::size_t model_index(const std::string& model) const {
    for (std::size_t j = 0; j < models.size(); ++j) {
      if (models[j] == model) return j;
    }
    throw InvalidArgument("unknown model '" + model + "'");
  }

  // One model column as AP-only class results, ready for aggregate().
  std::vector<ClassResult> class_results(std::size_t model) const {
    std::vector<ClassResult> out;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      ClassResult r;
      r.class_id = static_cast<ClassId>(i);
      r.ap_all = classes[i].ap_all.at(model);
      r.ap_50 = classes[i].ap_50.at(model);
      out.push_back(std::move(r));
    }
    return out;
  }
};

struct ModelComparison {
  std::string name;
  double map_all_pct = 0.0;
  double map_50_pct = 0.0;
  double average_recall_pct = 0.0;
  double f1_pct = 0.0;
  double latency_pct = 0.0;
  double fps = 0.0;
};

struct ClassComparison {
  std::string class_name;
  std::string model;
  double ap_all_pct = 0.0;
  double ap_50_pct = 0.0;
};

struct DerivedStats {
  std::string baseline;
  std::vector<ModelComparison> models;
  std::vector<ClassComparison> classes;
  // Column means of the classwise table, by model.
  std::vector<std::pair<std::string, double>> classwise_map_all;
  std::vector<std::pair<std::string, double>> classwise_map_50;
};

inline DerivedStats derive_report_stats(std::span<const ModelReportRow> rows,
                                        const ClasswiseTable* classwise,
                                        const std::string& baseline) {
  const ModelReportRow* base = nullptr;
  for (const auto& r : rows) {
    if (r.name == baseline) base = &r;
  }
  bool in_classwise = false;
  if (classwise) {
    for (const auto& m : classwise->models) in_classwise = in_classwise || m == baseline;
  }
  if (!base && (!rows.empty() || !in_classwise)) {
    throw InvalidArgument("unknown baseline model '" + baseline + "'");
  }

  DerivedStats out;
  out.baseline = baseline;
  if (base) {
    for (const auto& r : rows) {
      out.models.push_back(ModelComparison{
          r.name, percent_change(base->map_all, r.map_all), percent_change(base->map_50, r.map_50),
          percent_change(base->average_recall, r.average_recall), percent_change(base->f1, r.f1),
          percent_change(base->latency_ms, r.latency_ms), r.fps});
    }
  }
  if (classwise) {
    for (std::size_t j = 0; j < classwise->models.size(); ++j) {
      const auto report = aggregate(classwise->class_results(j));
      out.classwise_map_all.emplace_back(classwise->models[j], report.map_all);
      out.classwise_map_50.emplace_back(classwise->models[j], report.map_50);
    }
    if (in_classwise) {
      const std::size_t b = classwise->model_index(baseline);
      for (const auto& row : classwise->classes) {
        for (std::size_t j = 0; j < classwise->models.size(); ++j) {
          if (j == b) continue;
          out.classes.push_back(ClassComparison{row.name, classwise->models[j],
                                                percent_change(row.ap_all[b], row.ap_all[j]),
                                                percent_change(row.ap_50[b], row.ap_50[j])});
        }
      }
    }
  }
  return out;
}

// Metrics file consumed by the `report` command:
// {"models": [{"name", "map_all", "map_50", "average_recall", "latency_ms",
//              optional "f1", "fps"}],
//  "classwise": {"models": [...], "classes": [{"name", "ap_all": [...], "ap_50": [...]}]}}
struct MetricsFile {
  std::vector<ModelReportRow> models;
  std::optional<ClasswiseTable> classwise;
};

inline MetricsFile parse_metrics(const std::string& text, const std::string& source = "<metrics>") {
  using nlohmann::json;
  const json root = detail::parse_json_text(text, source);
  if (!root.is_object()) throw ParseError(source + ": top level must be an object");
  MetricsFile mf;
  if (root.contains("models")) {
    const json& models = detail::array_field(root, "models", source);
    for (std::size_t i = 0; i < models.size(); ++i) {
      const std::string where = source + ": models[" + std::to_string(i) + "]";
      auto row = make_report_row(detail::string_field(models[i], "name", where),
                                 detail::number_field(models[i], "map_all", where),
                                 detail::number_field(models[i], "map_50", where),
                                 detail::number_field(models[i], "average_recall", where),
                                 detail::number_field(models[i], "latency_ms", where));
      if (models[i].contains("f1")) row.reported_f1 = detail::number_field(models[i], "f1", where);
      if (models[i].contains("fps")) row.reported_fps = detail::number_field(models[i], "fps", where);
      mf.models.push_back(std::move(row));
    }
  }
  if (root.contains("classwise")) {
    const std::string where = source + ": classwise";
    const json& cw = root["classwise"];
    ClasswiseTable table;
    for (const auto& m : detail::array_field(cw, "models", where)) {
      if (!m.is_string()) throw ParseError(where + ".models: expected strings");
      table.models.push_back(m.get<std::string>());
    }
    const json& classes = detail::array_field(cw, "classes", where);
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const std::string cwhere = where + ".classes[" + std::to_string(i) + "]";
      ClasswiseTable::Row row;
      row.name = detail::string_field(classes[i], "name", cwhere);
      for (const char* key : {"ap_all", "ap_50"}) {
        const json& values = detail::array_field(classes[i], key, cwhere);
        if (values.size() != table.models.size()) {
          throw ParseError(cwhere + "." + key + ": expected one value per model");
        }
        auto& dst = std::string(key) == "ap_all" ? row.ap_all : row.ap_50;
        for (const auto& v : values) {
          if (!v.is_number()) throw ParseError(cwhere + "." + key + ": expected numbers");
          dst.push_back(v.get<double>());
        }
      }
      table.classes.push_back(std::move(row));
    }
    mf.classwise = std::move(table);
  }
  if (mf.models.empty() && !mf.classwise) {
    throw ValidationError(source + ": no models or classwise table");
  }
  return mf;
}

inline MetricsFile load_metrics(const std::string& path) {
  return parse_metrics(detail::read_file(path), path);
}

}  // namespace detgeom
