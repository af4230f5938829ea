#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detgeom/detection.hpp"

namespace detgeom {

/// Ground truth grouped by image id. Keys are ordered, so iteration is
/// deterministic.
class DatasetIndex {
public:
  using Images = std::map<std::string, std::vector<GroundTruth>, std::less<>>;

  void add_image(std::string image_id, std::vector<GroundTruth> objects);

  const Images& images() const noexcept { return images_; }
  std::size_t image_count() const noexcept { return images_.size(); }
  std::size_t total() const noexcept { return total_; }
  bool contains(std::string_view image_id) const { return images_.find(image_id) != images_.end(); }

  /// Empty span for unknown ids.
  std::span<const GroundTruth> objects(std::string_view image_id) const;

private:
  Images images_;
  std::size_t total_ = 0;
};

/// Parses one annotation document. Each <object> needs a <name> and a box,
/// given either as xmin/ymin/xmax/ymax (corner form) or xc/yc/w/h (center
/// form), inside <bndbox> or directly under <object>. Throws ParseError naming
/// the object index on any defect.
std::vector<GroundTruth> parse_annotation(std::string_view xml_text, std::string_view image_id);

/// Loads every *.xml file of a directory; file stems become image ids.
DatasetIndex load_dataset(const std::filesystem::path& annotation_dir);

/// Parses detection records, one JSON object per line:
///   {"image_id": "a", "score": 0.9, "class": "Person", "box": [x1, y1, x2, y2]}
/// "class" is optional. Blank lines are skipped. Throws ParseError with the
/// 1-based line number.
std::vector<Detection> parse_detections(std::string_view lines_text);
std::vector<Detection> load_detections(const std::filesystem::path& path);

/// One record, without trailing newline; parse_detections inverts it exactly.
std::string serialize_detection(const Detection& det);
std::string serialize_detections(std::span<const Detection> dets);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace detgeom
