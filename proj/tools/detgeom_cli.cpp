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
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "detgeom/commands.hpp"

namespace {

using namespace detgeom;

void emit(const std::string& text, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << text;
    return;
  }
  detail::write_file(output_path, text);
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& s : detail::split_list(text, ',')) out.push_back(detail::parse_number(s, what));
  return out;
}

std::vector<int> parse_ints(const std::string& text, const char* what) {
  std::vector<int> out;
  for (double v : parse_doubles(text, what)) {
    if (v != static_cast<int>(v)) throw InvalidArgument(std::string(what) + " must be integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"detgeom: detection geometry, losses and COCO-style evaluation"};
  app.require_subcommand(1);

  std::string format = "table";
  std::string output;

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Evaluate predictions against COCO ground truth");
  std::string gt_path, pred_path, thresholds = "0.5:0.95:0.05", absent = "skip", json_out;
  std::size_t max_dets = 100, recall_samples = 101;
  unsigned eval_threads = 1;
  eval->add_option("--gt", gt_path, "COCO-layout ground-truth JSON")->required();
  eval->add_option("--pred", pred_path, "Prediction list JSON")->required();
  eval->add_option("--iou-thresholds", thresholds, "lo:hi:step or comma list")
      ->capture_default_str();
  eval->add_option("--max-dets", max_dets, "Detections kept per image and class")
      ->capture_default_str();
  eval->add_option("--recall-samples", recall_samples)->capture_default_str();
  eval->add_option("--absent-classes", absent, "Categories without GT or detections")
      ->check(CLI::IsMember({"skip", "zero"}))
      ->capture_default_str();
  eval->add_option("--threads", eval_threads)->capture_default_str();
  eval->add_option("--json-out", json_out, "Also write full-precision JSON here");
  eval->add_option("--format", format)->check(CLI::IsMember({"table", "csv", "json"}));
  eval->add_option("-o,--output", output);

  // split
  auto* split = app.add_subcommand("split", "Seeded train/val/test split of a manifest");
  std::string manifest_path;
  SplitSpec spec;
  split->add_option("--manifest", manifest_path)->required();
  split->add_option("--train", spec.train_frac)->capture_default_str();
  split->add_option("--val", spec.val_frac)->capture_default_str();
  split->add_option("--test", spec.test_frac)->capture_default_str();
  split->add_option("--seed", spec.seed)->capture_default_str();
  split->add_option("--format", format)->check(CLI::IsMember({"table", "csv", "json"}));
  split->add_option("-o,--output", output);

  // convergence
  auto* conv = app.add_subcommand("convergence", "Gradient-descent study over the box losses");
  ConvergenceOptions copts = default_convergence_options();
  std::string losses = "l1,iou,giou,diou,ciou", param = "corners", conv_format = "csv";
  conv->add_option("--trials", copts.trials)->capture_default_str();
  conv->add_option("--losses", losses)->capture_default_str();
  conv->add_option("--seed", copts.sampler.seed)->capture_default_str();
  conv->add_option("--extent", copts.sampler.extent)->capture_default_str();
  conv->add_option("--min-side", copts.sampler.min_side)->capture_default_str();
  conv->add_option("--max-side", copts.sampler.max_side)->capture_default_str();
  conv->add_flag("--allow-overlap", "Do not require disjoint initial boxes");
  conv->add_option("--lr", copts.descent.learning_rate)->capture_default_str();
  conv->add_option("--max-iters", copts.descent.max_iters)->capture_default_str();
  conv->add_option("--success-iou", copts.descent.success_iou)->capture_default_str();
  conv->add_option("--parameterization", param)
      ->check(CLI::IsMember({"corners", "center-size"}))
      ->capture_default_str();
  conv->add_flag("--backtracking", copts.descent.backtracking);
  conv->add_option("--threads", copts.threads)->capture_default_str();
  conv->add_option("--format", conv_format)->check(CLI::IsMember({"table", "csv", "json"}));
  conv->add_option("-o,--output", output);

  // anchors
  auto* anc = app.add_subcommand("anchors", "Dump generated pyramid anchors");
  AnchorsOptions aopts;
  std::string ratios = "0.5,1,2", strides = "4,8,16,32", feature_sizes, anchor_format = "csv";
  anc->add_option("--scale", aopts.config.scale)->capture_default_str();
  anc->add_option("--ratios", ratios)->capture_default_str();
  anc->add_option("--strides", strides)->capture_default_str();
  anc->add_option("--feature-sizes", feature_sizes, "HxW per stride, comma separated");
  anc->add_option("--image-width", aopts.image_width)->capture_default_str();
  anc->add_option("--image-height", aopts.image_height)->capture_default_str();
  anc->add_option("--format", anchor_format)->check(CLI::IsMember({"table", "csv", "json"}));
  anc->add_option("-o,--output", output);

  // augment-plan
  auto* aug = app.add_subcommand("augment-plan", "Sample a reproducible geometric augmentation plan");
  AugmentPlanOptions popts;
  aug->add_option("-n,--images", popts.n_images)->required();
  aug->add_option("--seed", popts.seed)->capture_default_str();
  aug->add_option("--width", popts.params.image.width)->capture_default_str();
  aug->add_option("--height", popts.params.image.height)->capture_default_str();
  aug->add_option("--flip-prob", popts.params.flip_prob)->capture_default_str();
  aug->add_option("--ssr-prob", popts.params.shift_scale_rotate_prob)->capture_default_str();
  aug->add_option("--max-shift", popts.params.max_shift_frac)->capture_default_str();
  aug->add_option("--max-scale", popts.params.max_scale_delta)->capture_default_str();
  aug->add_option("--max-rotate", popts.params.max_rotate_deg)->capture_default_str();
  aug->add_option("-o,--output", output);

  // report
  auto* rep = app.add_subcommand("report", "Derived comparisons from a metrics file");
  ReportOptions ropts;
  rep->add_option("--metrics", ropts.metrics_path)->required();
  rep->add_option("--baseline", ropts.baseline, "Defaults to the first model");
  rep->add_option("--format", format)->check(CLI::IsMember({"table", "csv", "json"}));
  rep->add_option("-o,--output", output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*eval) {
      EvaluateOptions opts;
      opts.gt_path = gt_path;
      opts.pred_path = pred_path;
      opts.config.iou_thresholds = parse_iou_thresholds(thresholds);
      opts.config.max_detections_per_image = max_dets;
      opts.config.recall_samples = recall_samples;
      opts.config.absent_class_policy =
          absent == "zero" ? AbsentClassPolicy::kZero : AbsentClassPolicy::kSkip;
      opts.config.threads = eval_threads;
      opts.format = parse_output_format(format);
      const auto result = run_evaluate(opts);
      if (!json_out.empty()) detail::write_file(json_out, result.machine.dump(2) + "\n");
      emit(result.rendered, output);
    } else if (*split) {
      emit(run_split(SplitOptions{manifest_path, spec, parse_output_format(format)}), output);
    } else if (*conv) {
      copts.losses.clear();
      for (const auto& name : detail::split_list(losses, ',')) {
        const auto kind = parse_loss_kind(name);
        if (!kind) throw InvalidArgument("unknown loss '" + name + "'");
        copts.losses.push_back(*kind);
      }
      copts.sampler.disjoint = conv->count("--allow-overlap") == 0;
      copts.descent.parameterization =
          param == "center-size" ? Parameterization::kCenterSize : Parameterization::kCorners;
      copts.format = parse_output_format(conv_format);
      emit(run_convergence(copts), output);
    } else if (*anc) {
      aopts.config.aspect_ratios = parse_doubles(ratios, "aspect ratio");
      aopts.config.strides = parse_ints(strides, "stride");
      if (!feature_sizes.empty()) aopts.feature_sizes = parse_feature_sizes(feature_sizes);
      aopts.format = parse_output_format(anchor_format);
      emit(run_anchors(aopts), output);
    } else if (*aug) {
      emit(run_augment_plan(popts), output);
    } else if (*rep) {
      ropts.format = parse_output_format(format);
      emit(run_report(ropts), output);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
