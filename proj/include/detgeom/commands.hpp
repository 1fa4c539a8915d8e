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

// Command implementations behind the `detgeom` CLI. Each returns the text to
// print so it can be exercised without a process boundary.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "detgeom/augmentation.hpp"
#include "detgeom/dataset.hpp"
#include "detgeom/errors.hpp"
#include "detgeom/evaluation.hpp"
#include "detgeom/proposals.hpp"
#include "detgeom/regression_lab.hpp"
#include "detgeom/report.hpp"
#include "detgeom/split.hpp"

namespace detgeom {

enum class OutputFormat { kTable, kCsv, kJson };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "table") return OutputFormat::kTable;
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "json") return OutputFormat::kJson;
  throw InvalidArgument("unknown format '" + std::string(s) + "' (expected table, csv or json)");
}

// Exit status for an exception escaping a command.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const IoError*>(&e)) return 2;
  return 1;
}

namespace detail {

inline std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, std::string_view what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad " + std::string(what) + " '" + s + "'");
  }
  if (used != s.size()) throw InvalidArgument("bad " + std::string(what) + " '" + s + "'");
  return v;
}

inline std::string metric(double v) { return fmt::format("{:.4f}", v); }
inline std::string metric(const std::optional<double>& v) { return v ? metric(*v) : "-"; }
inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
inline std::string full(double v) { return fmt::format("{:.17g}", v); }
inline std::string full(const std::optional<double>& v) { return v ? full(*v) : ""; }

}  // namespace detail

// "lo:hi:step" (inclusive range) or a comma-separated list. Values are
// rounded to 1e-10 so 0.5:0.95:0.05 yields exactly the decimal thresholds.
inline std::vector<double> parse_iou_thresholds(std::string_view text) {
  std::vector<double> out;
  const auto parts = detail::split_list(text, ':');
  if (parts.size() == 3) {
    const double lo = detail::parse_number(parts[0], "IoU threshold");
    const double hi = detail::parse_number(parts[1], "IoU threshold");
    const double step = detail::parse_number(parts[2], "IoU step");
    if (!(step > 0.0) || hi < lo) throw InvalidArgument("bad IoU threshold range");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e10) / 1e10);
  } else if (parts.size() == 1) {
    for (const auto& p : detail::split_list(text, ',')) {
      out.push_back(detail::parse_number(p, "IoU threshold"));
    }
  } else {
    throw InvalidArgument("IoU thresholds must be 'lo:hi:step' or a comma-separated list");
  }
  return out;
}

struct EvaluateOptions {
  std::string gt_path;
  std::string pred_path;
  EvalConfig config;
  OutputFormat format = OutputFormat::kTable;
};

struct EvaluateOutput {
  EvalReport report;
  std::string rendered;
  nlohmann::json machine;  // full precision
};

inline nlohmann::json eval_report_json(const EvalReport& report, const DatasetManifest& manifest,
                                       const EvalConfig& cfg) {
  using nlohmann::json;
  std::map<ClassId, std::string> names;
  for (const auto& c : manifest.categories) names[c.id] = c.name;
  json classes = json::array();
  for (const auto& c : report.per_class) {
    classes.push_back({{"id", c.class_id},
                       {"name", names[c.class_id]},
                       {"ap_all", c.ap_all},
                       {"ap_50", c.ap_50},
                       {"ap_per_threshold", c.ap_per_threshold},
                       {"average_recall", detail::optional_json(c.average_recall)}});
  }
  return json{{"iou_thresholds", cfg.iou_thresholds},
              {"max_detections_per_image", cfg.max_detections_per_image},
              {"recall_samples", cfg.recall_samples},
              {"classes", classes},
              {"summary",
               {{"map_all", report.map_all},
                {"map_50", report.map_50},
                {"average_recall", detail::optional_json(report.average_recall)},
                {"f1", detail::optional_json(report.f1)}}}};
}

inline std::string render_eval_table(const EvalReport& report, const DatasetManifest& manifest) {
  std::map<ClassId, std::string> names;
  for (const auto& c : manifest.categories) names[c.id] = c.name;
  std::size_t width = 5;
  for (const auto& c : report.per_class) width = std::max(width, names[c.class_id].size());

  std::string out = fmt::format("{:<{}}  {:>13}  {:>8}\n", "Class", width, "mAP@[.50:.95]",
                                "mAP@.50");
  for (const auto& c : report.per_class) {
    out += fmt::format("{:<{}}  {:>13}  {:>8}\n", names[c.class_id], width, detail::metric(c.ap_all),
                       detail::metric(c.ap_50));
  }
  out += "\n";
  out += fmt::format("{:>17}  {:>13}  {:>14}  {:>6}\n", "mAP@IoU:0.50:0.95", "mAP@IoU:0.50",
                     "Average Recall", "F1");
  out += fmt::format("{:>17}  {:>13}  {:>14}  {:>6}\n", detail::metric(report.map_all),
                     detail::metric(report.map_50), detail::metric(report.average_recall),
                     detail::metric(report.f1));
  return out;
}

inline std::string render_eval_csv(const EvalReport& report, const DatasetManifest& manifest) {
  std::map<ClassId, std::string> names;
  for (const auto& c : manifest.categories) names[c.id] = c.name;
  std::string out = "class_id,class,ap_all,ap_50,average_recall\n";
  for (const auto& c : report.per_class) {
    out += fmt::format("{},{},{},{},{}\n", c.class_id, names[c.class_id], detail::full(c.ap_all),
                       detail::full(c.ap_50), detail::full(c.average_recall));
  }
  out += fmt::format(",all,{},{},{}\n", detail::full(report.map_all), detail::full(report.map_50),
                     detail::full(report.average_recall));
  return out;
}

// Loads ground truth and predictions, evaluates every manifest category.
inline EvaluateOutput run_evaluate(const EvaluateOptions& opts) {
  const DatasetManifest manifest = load_manifest(opts.gt_path);
  const std::vector<Detection> dets = load_predictions(opts.pred_path, &manifest);
  const auto classes = manifest.category_ids();
  EvaluateOutput out;
  out.report = evaluate(dets, manifest.annotations, classes, opts.config);
  out.machine = eval_report_json(out.report, manifest, opts.config);
  switch (opts.format) {
    case OutputFormat::kTable: out.rendered = render_eval_table(out.report, manifest); break;
    case OutputFormat::kCsv: out.rendered = render_eval_csv(out.report, manifest); break;
    case OutputFormat::kJson: out.rendered = out.machine.dump(2) + "\n"; break;
  }
  return out;
}

struct SplitOptions {
  std::string manifest_path;
  SplitSpec spec;
  OutputFormat format = OutputFormat::kTable;
};

inline std::string run_split(const SplitOptions& opts) {
  const auto manifest = load_manifest(opts.manifest_path);
  const auto split = split_dataset(manifest, opts.spec);
  const std::size_t n = manifest.images.size();
  auto pct = [n](std::size_t k) { return n ? 100.0 * static_cast<double>(k) / n : 0.0; };
  switch (opts.format) {
    case OutputFormat::kTable:
      return fmt::format("{:<6} {:>7} {:>7}\n{:<6} {:>7} {:>6.1f}%\n{:<6} {:>7} {:>6.1f}%\n"
                         "{:<6} {:>7} {:>6.1f}%\n",
                         "split", "images", "share", "train", split.train.size(),
                         pct(split.train.size()), "val", split.val.size(), pct(split.val.size()),
                         "test", split.test.size(), pct(split.test.size()));
    case OutputFormat::kCsv: {
      std::string out = "image_id,split\n";
      for (auto id : split.train) out += fmt::format("{},train\n", id);
      for (auto id : split.val) out += fmt::format("{},val\n", id);
      for (auto id : split.test) out += fmt::format("{},test\n", id);
      return out;
    }
    case OutputFormat::kJson:
      return nlohmann::json{{"seed", opts.spec.seed},
                            {"train", split.train},
                            {"val", split.val},
                            {"test", split.test}}
                 .dump(2) +
             "\n";
  }
  return {};
}

struct ConvergenceOptions {
  std::size_t trials = 200;
  std::vector<LossKind> losses{kAllLossKinds.begin(), kAllLossKinds.end()};
  GeometrySampler sampler{};
  DescentConfig descent{};
  unsigned threads = 1;
  OutputFormat format = OutputFormat::kCsv;
};

// Defaults of the convergence study: disjoint pairs in a 10 x 10 field,
// plain descent on corners with step 0.5.
inline ConvergenceOptions default_convergence_options() {
  ConvergenceOptions o;
  o.sampler.seed = 2026;
  o.descent.learning_rate = 0.5;
  o.descent.max_iters = 10000;
  o.descent.success_iou = 0.9;
  return o;
}

inline std::string run_convergence(const ConvergenceOptions& opts) {
  const auto study =
      convergence_study(opts.trials, opts.losses, opts.sampler, opts.descent, opts.threads);
  switch (opts.format) {
    case OutputFormat::kCsv: {
      std::ostringstream os;
      write_trials_csv(os, study.outcomes);
      return os.str();
    }
    case OutputFormat::kTable: {
      std::string out = fmt::format("{:<5} {:>7} {:>10} {:>17}\n", "loss", "trials", "converged",
                                    "median iterations");
      for (const auto& s : study.summary) {
        out += fmt::format("{:<5} {:>7} {:>10.3f} {:>17}\n", to_string(s.loss_kind), s.trials,
                           s.convergence_rate,
                           s.median_iterations ? fmt::format("{:.1f}", *s.median_iterations)
                                               : std::string("-"));
      }
      return out;
    }
    case OutputFormat::kJson: {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& s : study.summary) {
        j.push_back({{"loss", std::string(to_string(s.loss_kind))},
                     {"trials", s.trials},
                     {"converged", s.converged},
                     {"convergence_rate", s.convergence_rate},
                     {"median_iterations", detail::optional_json(s.median_iterations)}});
      }
      return j.dump(2) + "\n";
    }
  }
  return {};
}

struct AnchorsOptions {
  AnchorConfig config;
  std::vector<FeatureSize> feature_sizes;  // one per stride; empty -> from image size
  int image_width = 360;
  int image_height = 640;
  OutputFormat format = OutputFormat::kCsv;
};

// "HxW,HxW,..." feature-map sizes.
inline std::vector<FeatureSize> parse_feature_sizes(std::string_view text) {
  std::vector<FeatureSize> out;
  for (const auto& item : detail::split_list(text, ',')) {
    const auto hw = detail::split_list(item, 'x');
    if (hw.size() != 2) throw InvalidArgument("feature size '" + item + "' is not HxW");
    const double h = detail::parse_number(hw[0], "feature height");
    const double w = detail::parse_number(hw[1], "feature width");
    if (h < 0 || w < 0 || h != std::floor(h) || w != std::floor(w)) {
      throw InvalidArgument("feature size '" + item + "' must be non-negative integers");
    }
    out.push_back({static_cast<int>(h), static_cast<int>(w)});
  }
  return out;
}

inline std::string run_anchors(const AnchorsOptions& opts) {
  const auto sizes = opts.feature_sizes.empty()
                         ? feature_sizes_for_image(opts.config, opts.image_height, opts.image_width)
                         : opts.feature_sizes;
  const auto anchors = generate_anchors(opts.config, sizes);
  switch (opts.format) {
    case OutputFormat::kCsv: {
      std::string out = "level,stride,row,col,x_min,y_min,x_max,y_max\n";
      for (const auto& a : anchors) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", a.level, opts.config.strides[a.level], a.row,
                           a.col, detail::full(a.box.x_min), detail::full(a.box.y_min),
                           detail::full(a.box.x_max), detail::full(a.box.y_max));
      }
      return out;
    }
    case OutputFormat::kTable: {
      std::string out = fmt::format("{:<5} {:>6} {:>9} {:>8} {:>8}\n", "level", "stride",
                                    "feature", "base", "anchors");
      for (std::size_t l = 0; l < sizes.size(); ++l) {
        const auto n = static_cast<std::size_t>(sizes[l].height) * sizes[l].width *
                       opts.config.aspect_ratios.size();
        out += fmt::format("{:<5} {:>6} {:>9} {:>8} {:>8}\n", l, opts.config.strides[l],
                           fmt::format("{}x{}", sizes[l].height, sizes[l].width),
                           opts.config.strides[l] * opts.config.scale, n);
      }
      out += fmt::format("total {}\n", anchors.size());
      return out;
    }
    case OutputFormat::kJson: {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& a : anchors) {
        j.push_back({{"level", a.level},
                     {"row", a.row},
                     {"col", a.col},
                     {"box", {a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max}}});
      }
      return j.dump() + "\n";
    }
  }
  return {};
}

struct AugmentPlanOptions {
  AugmentParams params;
  std::size_t n_images = 0;
  std::uint64_t seed = 0;
};

inline std::string run_augment_plan(const AugmentPlanOptions& opts) {
  std::ostringstream os;
  write_plan_csv(os, sample_plan(opts.params, opts.n_images, opts.seed));
  return os.str();
}

struct ReportOptions {
  std::string metrics_path;
  std::string baseline;
  OutputFormat format = OutputFormat::kTable;
};

inline std::string run_report(const ReportOptions& opts) {
  const MetricsFile mf = load_metrics(opts.metrics_path);
  std::string baseline = opts.baseline;
  if (baseline.empty()) {
    baseline = !mf.models.empty() ? mf.models.front().name : mf.classwise->models.front();
  }
  const ClasswiseTable* cw = mf.classwise ? &*mf.classwise : nullptr;
  const DerivedStats stats = derive_report_stats(mf.models, cw, baseline);

  if (opts.format == OutputFormat::kJson) {
    using nlohmann::json;
    json models = json::array();
    for (std::size_t i = 0; i < mf.models.size(); ++i) {
      const auto& r = mf.models[i];
      const auto& c = stats.models[i];
      models.push_back({{"name", r.name},
                        {"map_all", r.map_all},
                        {"map_50", r.map_50},
                        {"average_recall", r.average_recall},
                        {"f1", r.f1},
                        {"latency_ms", r.latency_ms},
                        {"fps", r.fps},
                        {"map_all_pct", c.map_all_pct},
                        {"map_50_pct", c.map_50_pct},
                        {"f1_pct", c.f1_pct}});
    }
    json classes = json::array();
    for (const auto& c : stats.classes) {
      classes.push_back({{"class", c.class_name},
                         {"model", c.model},
                         {"ap_all_pct", c.ap_all_pct},
                         {"ap_50_pct", c.ap_50_pct}});
    }
    json means = json::object();
    for (std::size_t j = 0; j < stats.classwise_map_all.size(); ++j) {
      means[stats.classwise_map_all[j].first] = {{"map_all", stats.classwise_map_all[j].second},
                                                 {"map_50", stats.classwise_map_50[j].second}};
    }
    return json{{"baseline", baseline}, {"models", models}, {"classes", classes},
                {"classwise_means", means}}
               .dump(2) +
           "\n";
  }

  std::string out;
  if (opts.format == OutputFormat::kCsv) {
    out = "model,map_all,map_50,average_recall,f1,latency_ms,fps,map_all_pct\n";
    for (std::size_t i = 0; i < mf.models.size(); ++i) {
      const auto& r = mf.models[i];
      out += fmt::format("{},{},{},{},{},{},{},{}\n", r.name, detail::full(r.map_all),
                         detail::full(r.map_50), detail::full(r.average_recall), detail::full(r.f1),
                         detail::full(r.latency_ms), detail::full(r.fps),
                         detail::full(stats.models[i].map_all_pct));
    }
    for (const auto& c : stats.classes) {
      out += fmt::format("class:{}:{},,,,,,,{}\n", c.class_name, c.model,
                         detail::full(c.ap_all_pct));
    }
    return out;
  }

  if (!mf.models.empty()) {
    out += fmt::format("{:<12} {:>17} {:>12} {:>14} {:>7} {:>11} {:>5} {:>9}\n", "Model",
                       "mAP@IoU:0.50:0.95", "mAP@IoU:0.50", "Average Recall", "F1",
                       "Latency(ms)", "FPS", "dmAP(%)");
    for (std::size_t i = 0; i < mf.models.size(); ++i) {
      const auto& r = mf.models[i];
      out += fmt::format("{:<12} {:>17} {:>12} {:>14} {:>7} {:>11.1f} {:>5.1f} {:>+9.2f}\n", r.name,
                         detail::metric(r.map_all), detail::metric(r.map_50),
                         detail::metric(r.average_recall), detail::metric(r.f1), r.latency_ms,
                         r.fps, stats.models[i].map_all_pct);
    }
  }
  if (!stats.classwise_map_all.empty()) {
    out += "\nClasswise column means\n";
    out += fmt::format("{:<12} {:>17} {:>12}\n", "Model", "mAP@IoU:0.50:0.95", "mAP@IoU:0.50");
    for (std::size_t j = 0; j < stats.classwise_map_all.size(); ++j) {
      out += fmt::format("{:<12} {:>17} {:>12}\n", stats.classwise_map_all[j].first,
                         detail::metric(stats.classwise_map_all[j].second),
                         detail::metric(stats.classwise_map_50[j].second));
    }
  }
  if (!stats.classes.empty()) {
    out += fmt::format("\nChange vs {} (%)\n{:<10} {:<12} {:>13} {:>9}\n", baseline, "Class",
                       "Model", "mAP@[.50:.95]", "mAP@.50");
    for (const auto& c : stats.classes) {
      out += fmt::format("{:<10} {:<12} {:>+13.2f} {:>+9.2f}\n", c.class_name, c.model,
                         c.ap_all_pct, c.ap_50_pct);
    }
  }
  return out;
}

}  // namespace detgeom
