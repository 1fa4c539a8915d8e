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
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "detgeom/errors.hpp"
#include "detgeom/evaluation.hpp"
#include "detgeom/geometry.hpp"

namespace detgeom {

struct ImageInfo {
  ImageId id = 0;
  double width = 0.0;
  double height = 0.0;
  std::string file_name;

  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct Category {
  ClassId id = 0;
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

// COCO-layout ground truth. Boxes are held in corner form; files store
// (x, y, width, height).
struct DatasetManifest {
  std::vector<ImageInfo> images;
  std::vector<Category> categories;
  std::vector<GroundTruthAnnotation> annotations;

  std::vector<ClassId> category_ids() const {
    std::vector<ClassId> ids;
    for (const auto& c : categories) ids.push_back(c.id);
    return ids;
  }

  std::vector<ImageId> image_ids() const {
    std::vector<ImageId> ids;
    for (const auto& i : images) ids.push_back(i.id);
    return ids;
  }
};

inline bool operator==(const GroundTruthAnnotation& a, const GroundTruthAnnotation& b) {
  return a.image_id == b.image_id && a.class_id == b.class_id && a.box == b.box;
}

inline bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
  return a.images == b.images && a.categories == b.categories && a.annotations == b.annotations;
}

namespace detail {

using nlohmann::json;

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("error writing '" + path + "'");
}

// Field accessors that report the JSON path of the offending value.
inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

inline std::int64_t int_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) throw ParseError(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

inline double number_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline const json& array_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
  return v;
}

struct Xywh {
  double x, y, w, h;
};

inline Xywh bbox_field(const json& obj, const std::string& where) {
  const json& v = field(obj, "bbox", where);
  if (!v.is_array() || v.size() != 4) {
    throw ParseError(where + ".bbox: expected an array of 4 numbers");
  }
  for (const auto& x : v) {
    if (!x.is_number()) throw ParseError(where + ".bbox: expected an array of 4 numbers");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

inline bool finite_all(const Xywh& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h);
}

inline json box_to_xywh(const Box& b) {
  return json::array({b.x_min, b.y_min, b.width(), b.height()});
}

// Slack for boxes that touch the image border after float round-off.
inline constexpr double kBoundsTolerance = 1e-6;

}  // namespace detail

// Parses and validates a COCO-layout manifest. `source` names the input in
// error messages.
inline DatasetManifest parse_manifest(const std::string& text,
                                      const std::string& source = "<manifest>") {
  using detail::json;
  const json root = detail::parse_json_text(text, source);
  if (!root.is_object()) throw ParseError(source + ": top level must be an object");

  DatasetManifest m;
  const json& images = detail::array_field(root, "images", source);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = source + ": images[" + std::to_string(i) + "]";
    ImageInfo info;
    info.id = detail::int_field(images[i], "id", where);
    info.width = detail::number_field(images[i], "width", where);
    info.height = detail::number_field(images[i], "height", where);
    if (images[i].contains("file_name")) {
      info.file_name = detail::string_field(images[i], "file_name", where);
    }
    m.images.push_back(std::move(info));
  }
  const json& categories = detail::array_field(root, "categories", source);
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string where = source + ": categories[" + std::to_string(i) + "]";
    m.categories.push_back(Category{detail::int_field(categories[i], "id", where),
                                    detail::string_field(categories[i], "name", where)});
  }

  std::map<ImageId, const ImageInfo*> image_by_id;
  for (const auto& img : m.images) {
    if (!image_by_id.emplace(img.id, &img).second) {
      throw ValidationError(source + ": duplicate image id " + std::to_string(img.id));
    }
    if (!(img.width > 0.0 && img.height > 0.0)) {
      throw ValidationError(source + ": image " + std::to_string(img.id) +
                            " has non-positive dimensions");
    }
  }
  std::set<ClassId> category_ids;
  for (const auto& c : m.categories) {
    if (!category_ids.insert(c.id).second) {
      throw ValidationError(source + ": duplicate category id " + std::to_string(c.id));
    }
  }

  const json empty = json::array();
  const json& annotations =
      root.contains("annotations") ? detail::array_field(root, "annotations", source) : empty;
  std::vector<std::string> bad_boxes;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string where = source + ": annotations[" + std::to_string(i) + "]";
    const ImageId image_id = detail::int_field(annotations[i], "image_id", where);
    const ClassId class_id = detail::int_field(annotations[i], "category_id", where);
    const auto bb = detail::bbox_field(annotations[i], where);
    const auto img = image_by_id.find(image_id);
    if (img == image_by_id.end()) {
      throw DanglingIdError(where + ": unknown image id " + std::to_string(image_id));
    }
    if (!category_ids.contains(class_id)) {
      throw DanglingIdError(where + ": unknown category id " + std::to_string(class_id));
    }
    const double tol = detail::kBoundsTolerance;
    if (!detail::finite_all(bb) || !(bb.w > 0.0 && bb.h > 0.0)) {
      bad_boxes.push_back("annotations[" + std::to_string(i) + "]: non-positive or non-finite extent");
      continue;
    }
    const Box box{bb.x, bb.y, bb.x + bb.w, bb.y + bb.h};
    if (box.x_min < -tol || box.y_min < -tol || box.x_max > img->second->width + tol ||
        box.y_max > img->second->height + tol) {
      bad_boxes.push_back("annotations[" + std::to_string(i) + "]: box " + to_string(box) +
                          " outside image " + std::to_string(image_id));
      continue;
    }
    m.annotations.push_back(GroundTruthAnnotation{image_id, class_id, box});
  }
  if (!bad_boxes.empty()) {
    std::string msg = source + ": " + std::to_string(bad_boxes.size()) + " invalid box(es)";
    for (const auto& b : bad_boxes) msg += "\n  " + b;
    throw InvalidBoxError(msg, bad_boxes);
  }
  return m;
}

inline DatasetManifest load_manifest(const std::string& path) {
  return parse_manifest(detail::read_file(path), path);
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  using detail::json;
  json root = json::object();
  root["images"] = json::array();
  for (const auto& img : m.images) {
    root["images"].push_back(
        {{"id", img.id}, {"width", img.width}, {"height", img.height}, {"file_name", img.file_name}});
  }
  root["categories"] = json::array();
  for (const auto& c : m.categories) root["categories"].push_back({{"id", c.id}, {"name", c.name}});
  root["annotations"] = json::array();
  for (std::size_t i = 0; i < m.annotations.size(); ++i) {
    const auto& a = m.annotations[i];
    root["annotations"].push_back({{"id", static_cast<std::int64_t>(i + 1)},
                                   {"image_id", a.image_id},
                                   {"category_id", a.class_id},
                                   {"bbox", detail::box_to_xywh(a.box)},
                                   {"area", area(a.box)},
                                   {"iscrowd", 0}});
  }
  return root;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  detail::write_file(path, manifest_to_json(m).dump(2) + "\n");
}

// Flat prediction list: [{image_id, category_id, bbox: [x, y, w, h], score}].
// When `manifest` is given, image and category ids must resolve in it.
inline std::vector<Detection> parse_predictions(const std::string& text,
                                                const DatasetManifest* manifest = nullptr,
                                                const std::string& source = "<predictions>") {
  using detail::json;
  const json root = detail::parse_json_text(text, source);
  if (!root.is_array()) throw ParseError(source + ": top level must be an array");

  std::set<ImageId> images;
  std::set<ClassId> classes;
  if (manifest) {
    for (const auto& i : manifest->images) images.insert(i.id);
    for (const auto& c : manifest->categories) classes.insert(c.id);
  }

  std::vector<Detection> dets;
  dets.reserve(root.size());
  std::vector<std::string> bad_boxes;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = source + ": [" + std::to_string(i) + "]";
    Detection d;
    d.image_id = detail::int_field(root[i], "image_id", where);
    d.class_id = detail::int_field(root[i], "category_id", where);
    const auto bb = detail::bbox_field(root[i], where);
    d.score = detail::number_field(root[i], "score", where);
    if (manifest && !images.contains(d.image_id)) {
      throw DanglingIdError(where + ": unknown image id " + std::to_string(d.image_id));
    }
    if (manifest && !classes.contains(d.class_id)) {
      throw DanglingIdError(where + ": unknown category id " + std::to_string(d.class_id));
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError(where + ": score outside [0, 1]");
    }
    if (!detail::finite_all(bb) || bb.w < 0.0 || bb.h < 0.0) {
      bad_boxes.push_back("[" + std::to_string(i) + "]: negative or non-finite extent");
      continue;
    }
    d.box = Box{bb.x, bb.y, bb.x + bb.w, bb.y + bb.h};
    dets.push_back(d);
  }
  if (!bad_boxes.empty()) {
    std::string msg = source + ": " + std::to_string(bad_boxes.size()) + " invalid box(es)";
    for (const auto& b : bad_boxes) msg += "\n  " + b;
    throw InvalidBoxError(msg, bad_boxes);
  }
  return dets;
}

inline std::vector<Detection> load_predictions(const std::string& path,
                                               const DatasetManifest* manifest = nullptr) {
  return parse_predictions(detail::read_file(path), manifest, path);
}

inline nlohmann::json predictions_to_json(const std::vector<Detection>& dets) {
  auto out = nlohmann::json::array();
  for (const auto& d : dets) {
    out.push_back({{"image_id", d.image_id},
                   {"category_id", d.class_id},
                   {"bbox", detail::box_to_xywh(d.box)},
                   {"score", d.score}});
  }
  return out;
}

}  // namespace detgeom
