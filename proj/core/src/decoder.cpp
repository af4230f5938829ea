#include "detgeom/decoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "detgeom/errors.hpp"

namespace detgeom {

namespace {

constexpr double kMaxLogScale = 20.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

const std::vector<std::string>& coco_names() {
  static const std::vector<std::string> names = {
      "person",        "bicycle",      "car",           "motorbike",     "aeroplane",
      "bus",           "train",        "truck",         "boat",          "traffic light",
      "fire hydrant",  "stop sign",    "parking meter", "bench",         "bird",
      "cat",           "dog",          "horse",         "sheep",         "cow",
      "elephant",      "bear",         "zebra",         "giraffe",       "backpack",
      "umbrella",      "handbag",      "tie",           "suitcase",      "frisbee",
      "skis",          "snowboard",    "sports ball",   "kite",          "baseball bat",
      "baseball glove", "skateboard",  "surfboard",     "tennis racket", "bottle",
      "wine glass",    "cup",          "fork",          "knife",         "spoon",
      "bowl",          "banana",       "apple",         "sandwich",      "orange",
      "broccoli",      "carrot",       "hot dog",       "pizza",         "donut",
      "cake",          "chair",        "sofa",          "pottedplant",   "bed",
      "diningtable",   "toilet",       "tvmonitor",     "laptop",        "mouse",
      "remote",        "keyboard",     "cell phone",    "microwave",     "oven",
      "toaster",       "sink",         "refrigerator",  "book",          "clock",
      "vase",          "scissors",     "teddy bear",    "hair drier",    "toothbrush"};
  return names;
}

}  // namespace

std::vector<GridSpec> DecoderConfig::grid_specs() const {
  if (grid_sizes.size() != anchors.size()) {
    throw std::invalid_argument("decoder config has mismatched grid and anchor lists");
  }
  std::vector<GridSpec> specs;
  specs.reserve(grid_sizes.size());
  for (std::size_t i = 0; i < grid_sizes.size(); ++i) {
    GridSpec spec;
    spec.grid_size = grid_sizes[i];
    spec.anchors = anchors[i];
    spec.input_size = input_size;
    spec.num_classes = static_cast<int>(class_names.size());
    spec.conf_threshold = conf_threshold;
    specs.push_back(spec);
  }
  return specs;
}

DecoderConfig default_decoder_config() {
  DecoderConfig config;
  config.input_size = 416;
  config.conf_threshold = 0.25;
  config.grid_sizes = {13, 26, 52};
  config.anchors = {
      {{{116, 90}, {156, 198}, {373, 326}}},
      {{{30, 61}, {62, 45}, {59, 119}}},
      {{{10, 13}, {16, 30}, {33, 23}}},
  };
  config.class_names = coco_names();
  return config;
}

DecoderConfig parse_decoder_config(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("decoder config: ") + e.what());
  }

  DecoderConfig config;
  try {
    config.input_size = doc.at("input_size").get<int>();
    config.conf_threshold = doc.at("conf_threshold").get<double>();
    for (const auto& scale : doc.at("scales")) {
      config.grid_sizes.push_back(scale.at("grid_size").get<int>());
      const auto& pairs = scale.at("anchors");
      if (!pairs.is_array() || pairs.size() != kAnchorsPerCell) {
        throw ParseError("decoder config: each scale needs exactly 3 anchors");
      }
      std::array<Anchor, kAnchorsPerCell> set{};
      for (int a = 0; a < kAnchorsPerCell; ++a) {
        const auto& pair = pairs.at(a);
        if (!pair.is_array() || pair.size() != 2) {
          throw ParseError("decoder config: anchor must be a [width, height] pair");
        }
        set[a] = {pair.at(0).get<double>(), pair.at(1).get<double>()};
      }
      config.anchors.push_back(set);
    }
    config.class_names = doc.at("class_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("decoder config: ") + e.what());
  }

  if (config.input_size <= 0) throw ParseError("decoder config: input_size must be positive");
  if (!(config.conf_threshold >= 0.0 && config.conf_threshold <= 1.0)) {
    throw ParseError("decoder config: conf_threshold must lie in [0, 1]");
  }
  if (config.class_names.empty()) throw ParseError("decoder config: class_names is empty");
  for (const int g : config.grid_sizes) {
    if (g <= 0 || config.input_size % g != 0) {
      throw ParseError("decoder config: grid_size " + std::to_string(g) +
                       " does not divide input_size");
    }
  }
  return config;
}

DecoderConfig load_decoder_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open decoder config");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_decoder_config(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_decoder_config(const DecoderConfig& config) {
  nlohmann::ordered_json doc;
  doc["input_size"] = config.input_size;
  doc["conf_threshold"] = config.conf_threshold;
  doc["scales"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < config.grid_sizes.size(); ++i) {
    nlohmann::ordered_json scale;
    scale["grid_size"] = config.grid_sizes[i];
    scale["anchors"] = nlohmann::ordered_json::array();
    for (const Anchor& a : config.anchors.at(i)) scale["anchors"].push_back({a.w, a.h});
    doc["scales"].push_back(scale);
  }
  doc["class_names"] = config.class_names;
  return doc.dump(2) + "\n";
}

TensorLayout parse_tensor_layout(std::string_view token) {
  if (token == "hwac") return TensorLayout::RowColAnchorChannel;
  if (token == "achw") return TensorLayout::AnchorChannelRowCol;
  throw std::invalid_argument("unknown tensor layout '" + std::string(token) + "'");
}

RawHead read_raw_head(const std::filesystem::path& path, const GridSpec& spec,
                      TensorLayout layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open tensor file");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  const std::size_t expected = spec.expected_length();
  if (bytes.size() != expected * sizeof(float)) {
    throw ParseError(path.string() + ": expected " + std::to_string(expected * sizeof(float)) +
                     " bytes for grid " + std::to_string(spec.grid_size) + ", found " +
                     std::to_string(bytes.size()));
  }

  std::vector<float> flat(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t word = 0;
    std::memcpy(&word, bytes.data() + i * sizeof(float), sizeof(float));
    if constexpr (std::endian::native == std::endian::big) {
      word = ((word & 0xFFu) << 24) | ((word & 0xFF00u) << 8) | ((word >> 8) & 0xFF00u) |
             (word >> 24);
    }
    flat[i] = std::bit_cast<float>(word);
  }

  RawHead head{spec.grid_size, {}};
  if (layout == TensorLayout::RowColAnchorChannel) {
    head.values = std::move(flat);
    return head;
  }

  const std::size_t g = static_cast<std::size_t>(spec.grid_size);
  const std::size_t c = spec.channels_per_anchor();
  head.values.resize(expected);
  for (std::size_t a = 0; a < kAnchorsPerCell; ++a) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t r = 0; r < g; ++r) {
        for (std::size_t col = 0; col < g; ++col) {
          const std::size_t src = ((a * c + ch) * g + r) * g + col;
          const std::size_t dst = ((r * g + col) * kAnchorsPerCell + a) * c + ch;
          head.values[dst] = flat[src];
        }
      }
    }
  }
  return head;
}

std::vector<Detection> decode_head(const RawHead& raw, const GridSpec& spec,
                                   std::span<const std::string> class_names,
                                   std::string_view image_id) {
  if (raw.grid_size != spec.grid_size || raw.values.size() != spec.expected_length()) {
    throw std::invalid_argument("raw head has " + std::to_string(raw.values.size()) +
                                " values, grid " + std::to_string(spec.grid_size) + " needs " +
                                std::to_string(spec.expected_length()));
  }
  if (class_names.size() != static_cast<std::size_t>(spec.num_classes)) {
    throw std::invalid_argument("class-name table does not match num_classes");
  }
  const auto bad = std::find_if(raw.values.begin(), raw.values.end(),
                                [](float v) { return !std::isfinite(v); });
  if (bad != raw.values.end()) {
    throw std::invalid_argument("raw head contains a non-finite value at index " +
                                std::to_string(std::distance(raw.values.begin(), bad)));
  }

  const double stride = spec.stride();
  const double canvas = spec.input_size;
  const std::size_t channels = spec.channels_per_anchor();
  std::vector<Detection> out;

  const float* cell = raw.values.data();
  for (int row = 0; row < spec.grid_size; ++row) {
    for (int col = 0; col < spec.grid_size; ++col) {
      for (int a = 0; a < kAnchorsPerCell; ++a, cell += channels) {
        const float* logits = cell + 5;
        const auto best = std::max_element(logits, logits + spec.num_classes);
        const double score = sigmoid(cell[4]) * sigmoid(*best);
        if (score < spec.conf_threshold) continue;

        const double cx = (sigmoid(cell[0]) + col) * stride;
        const double cy = (sigmoid(cell[1]) + row) * stride;
        const double w = spec.anchors[a].w * std::exp(std::clamp<double>(cell[2], -kMaxLogScale, kMaxLogScale));
        const double h = spec.anchors[a].h * std::exp(std::clamp<double>(cell[3], -kMaxLogScale, kMaxLogScale));

        const Box box(std::clamp(cx - 0.5 * w, 0.0, canvas), std::clamp(cy - 0.5 * h, 0.0, canvas),
                      std::clamp(cx + 0.5 * w, 0.0, canvas), std::clamp(cy + 0.5 * h, 0.0, canvas));
        out.push_back({std::string(image_id), box, score,
                       class_names[static_cast<std::size_t>(best - logits)]});
      }
    }
  }
  return out;
}

std::vector<Detection> decode_heads(std::span<const RawHead> heads, const DecoderConfig& config,
                                    std::string_view image_id) {
  const std::vector<GridSpec> specs = config.grid_specs();
  if (heads.size() != specs.size()) {
    throw std::invalid_argument("expected " + std::to_string(specs.size()) + " heads, got " +
                                std::to_string(heads.size()));
  }
  std::vector<Detection> all;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto dets = decode_head(heads[i], specs[i], config.class_names, image_id);
    all.insert(all.end(), std::make_move_iterator(dets.begin()), std::make_move_iterator(dets.end()));
  }
  return all;
}

std::size_t total_prediction_count(std::span<const GridSpec> specs) noexcept {
  return std::accumulate(specs.begin(), specs.end(), std::size_t{0},
                         [](std::size_t acc, const GridSpec& s) {
                           const auto g = static_cast<std::size_t>(s.grid_size);
                           return acc + g * g * kAnchorsPerCell;
                         });
}

EncodedBox encode_box(const CenterBox& box, const GridSpec& spec, int anchor_index) {
  if (anchor_index < 0 || anchor_index >= kAnchorsPerCell) {
    throw std::invalid_argument("anchor index out of range");
  }
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw std::invalid_argument("box must have positive size");
  const double stride = spec.stride();
  const double gx = box.cx / stride;
  const double gy = box.cy / stride;
  EncodedBox enc;
  enc.col = static_cast<int>(std::floor(gx));
  enc.row = static_cast<int>(std::floor(gy));
  const double ox = gx - enc.col;
  const double oy = gy - enc.row;
  if (enc.col < 0 || enc.col >= spec.grid_size || enc.row < 0 || enc.row >= spec.grid_size ||
      ox <= 0.0 || oy <= 0.0) {
    throw std::invalid_argument("box center must lie strictly inside a grid cell");
  }
  enc.tx = logit(ox);
  enc.ty = logit(oy);
  enc.tw = std::log(box.w / spec.anchors[anchor_index].w);
  enc.th = std::log(box.h / spec.anchors[anchor_index].h);
  return enc;
}

Letterbox letterbox_for(double image_width, double image_height, int input_size) {
  if (!(image_width > 0.0) || !(image_height > 0.0) || input_size <= 0) {
    throw std::invalid_argument("letterbox needs positive image and input sizes");
  }
  Letterbox lb;
  lb.scale = std::min(input_size / image_width, input_size / image_height);
  lb.pad_x = 0.5 * (input_size - image_width * lb.scale);
  lb.pad_y = 0.5 * (input_size - image_height * lb.scale);
  return lb;
}

Box unletterbox(const Box& box, const Letterbox& lb) {
  return {(box.x1() - lb.pad_x) / lb.scale, (box.y1() - lb.pad_y) / lb.scale,
          (box.x2() - lb.pad_x) / lb.scale, (box.y2() - lb.pad_y) / lb.scale};
}

}  // namespace detgeom
