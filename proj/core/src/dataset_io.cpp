#include "detgeom/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "detgeom/errors.hpp"

namespace detgeom {

namespace pt = boost::property_tree;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string object_label(std::size_t index) { return "object " + std::to_string(index); }

double parse_coordinate(const pt::ptree& node, const std::string& tag, std::size_t index) {
  const std::string raw = node.get<std::string>(tag);
  const std::string_view text = trim(raw);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(object_label(index) + ": <" + tag + "> is not a number: '" + raw + "'");
  }
  return value;
}

bool has_all(const pt::ptree& node, std::initializer_list<const char*> tags) {
  return std::all_of(tags.begin(), tags.end(),
                     [&](const char* t) { return node.get_child_optional(t).has_value(); });
}

Box parse_object_box(const pt::ptree& object, std::size_t index) {
  const auto bndbox = object.get_child_optional("bndbox");
  const pt::ptree& node = bndbox ? *bndbox : object;

  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  if (has_all(node, {"xmin", "ymin", "xmax", "ymax"})) {
    x1 = parse_coordinate(node, "xmin", index);
    y1 = parse_coordinate(node, "ymin", index);
    x2 = parse_coordinate(node, "xmax", index);
    y2 = parse_coordinate(node, "ymax", index);
  } else if (has_all(node, {"xc", "yc", "w", "h"})) {
    const double cx = parse_coordinate(node, "xc", index);
    const double cy = parse_coordinate(node, "yc", index);
    const double w = parse_coordinate(node, "w", index);
    const double h = parse_coordinate(node, "h", index);
    if (w < 0.0 || h < 0.0) throw ParseError(object_label(index) + ": negative box size");
    x1 = cx - 0.5 * w;
    y1 = cy - 0.5 * h;
    x2 = cx + 0.5 * w;
    y2 = cy + 0.5 * h;
  } else {
    throw ParseError(object_label(index) +
                     ": box needs xmin/ymin/xmax/ymax or xc/yc/w/h");
  }

  if (!(x1 <= x2) || !(y1 <= y2)) {
    throw ParseError(object_label(index) + ": inverted box corners");
  }
  if (!(x1 < x2) || !(y1 < y2)) {
    throw ParseError(object_label(index) + ": box has zero area");
  }
  return {x1, y1, x2, y2};
}

const pt::ptree* find_root_element(const pt::ptree& doc) {
  for (const auto& [key, child] : doc) {
    if (!key.empty() && key.front() != '<') return &child;
  }
  return nullptr;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

Detection parse_record(std::string_view text, std::size_t line) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    fail_line(line, "malformed record");
  }
  if (!rec.is_object()) fail_line(line, "record is not an object");

  const auto field = [&](const char* name) -> const nlohmann::json& {
    const auto it = rec.find(name);
    if (it == rec.end()) fail_line(line, std::string("missing field '") + name + "'");
    return *it;
  };

  Detection det;
  const auto& id = field("image_id");
  if (!id.is_string() || id.get_ref<const std::string&>().empty()) {
    fail_line(line, "image_id must be a non-empty string");
  }
  det.image_id = id.get<std::string>();

  const auto& score = field("score");
  if (!score.is_number()) fail_line(line, "score must be a number");
  det.score = score.get<double>();
  if (!(det.score >= 0.0 && det.score <= 1.0)) fail_line(line, "score outside [0, 1]");

  if (const auto it = rec.find("class"); it != rec.end()) {
    if (!it->is_string() || it->get_ref<const std::string&>().empty()) {
      fail_line(line, "class must be a non-empty string");
    }
    det.class_name = it->get<std::string>();
  }

  const auto& box = field("box");
  if (!box.is_array() || box.size() != 4 ||
      !std::all_of(box.begin(), box.end(), [](const auto& v) { return v.is_number(); })) {
    fail_line(line, "box must be an array of four numbers");
  }
  try {
    det.box = Box(box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                  box[3].get<double>());
  } catch (const std::invalid_argument&) {
    fail_line(line, "invalid box corners");
  }
  return det;
}

}  // namespace

void DatasetIndex::add_image(std::string image_id, std::vector<GroundTruth> objects) {
  const std::size_t added = objects.size();
  auto [it, inserted] = images_.try_emplace(std::move(image_id), std::move(objects));
  if (!inserted) throw std::invalid_argument("duplicate image id '" + it->first + "'");
  total_ += added;
}

std::span<const GroundTruth> DatasetIndex::objects(std::string_view image_id) const {
  const auto it = images_.find(image_id);
  if (it == images_.end()) return {};
  return it->second;
}

std::vector<GroundTruth> parse_annotation(std::string_view xml_text, std::string_view image_id) {
  pt::ptree doc;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed XML at line " + std::to_string(e.line()) + ": " + e.message());
  }

  const pt::ptree* root = find_root_element(doc);
  if (root == nullptr) throw ParseError("XML document has no root element");

  std::vector<GroundTruth> out;
  std::size_t index = 0;
  for (const auto& [key, object] : *root) {
    if (key != "object") continue;
    const auto name = object.get_optional<std::string>("name");
    if (!name || trim(*name).empty()) throw ParseError(object_label(index) + ": missing <name>");
    out.push_back({std::string(image_id), parse_object_box(object, index), std::string(trim(*name))});
    ++index;
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

DatasetIndex load_dataset(const std::filesystem::path& annotation_dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(annotation_dir, ec);
  if (ec) throw ParseError(annotation_dir.string() + ": cannot read directory: " + ec.message());

  std::vector<std::filesystem::path> files;
  for (const auto& entry : it) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  DatasetIndex index;
  for (const auto& file : files) {
    const std::string image_id = file.stem().string();
    try {
      index.add_image(image_id, parse_annotation(read_text_file(file), image_id));
    } catch (const ParseError& e) {
      throw ParseError(file.string() + ": " + e.what());
    }
  }
  return index;
}

std::vector<Detection> parse_detections(std::string_view lines_text) {
  std::vector<Detection> out;
  std::size_t line_no = 0;
  while (!lines_text.empty()) {
    ++line_no;
    const auto nl = lines_text.find('\n');
    const std::string_view line = lines_text.substr(0, nl);
    lines_text = nl == std::string_view::npos ? std::string_view{} : lines_text.substr(nl + 1);
    if (trim(line).empty()) continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_detections(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_detection(const Detection& det) {
  nlohmann::ordered_json rec;
  rec["image_id"] = det.image_id;
  rec["score"] = det.score;
  rec["class"] = det.class_name;
  rec["box"] = {det.box.x1(), det.box.y1(), det.box.x2(), det.box.y2()};
  return rec.dump();
}

std::string serialize_detections(std::span<const Detection> dets) {
  std::string out;
  for (const auto& d : dets) {
    out += serialize_detection(d);
    out += '\n';
  }
  return out;
}

}  // namespace detgeom
