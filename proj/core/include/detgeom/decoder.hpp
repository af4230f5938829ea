#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detgeom/detection.hpp"

namespace detgeom {

struct Anchor {
  double w = 0.0;
  double h = 0.0;
};

inline constexpr int kAnchorsPerCell = 3;

/// Geometry of one YOLOv3 output scale.
struct GridSpec {
  int grid_size = 13;
  std::array<Anchor, kAnchorsPerCell> anchors{};
  int input_size = 416;
  int num_classes = 80;
  double conf_threshold = 0.25;

  double stride() const noexcept { return static_cast<double>(input_size) / grid_size; }
  /// 5 + num_classes: tx, ty, tw, th, objectness, class logits.
  std::size_t channels_per_anchor() const noexcept {
    return 5 + static_cast<std::size_t>(num_classes);
  }
  std::size_t channels_per_cell() const noexcept { return kAnchorsPerCell * channels_per_anchor(); }
  std::size_t expected_length() const noexcept {
    return static_cast<std::size_t>(grid_size) * grid_size * channels_per_cell();
  }
};

/// Raw head output, row-major over (row, column, anchor, channel).
struct RawHead {
  int grid_size = 0;
  std::vector<float> values;
};

/// Run-time decoder configuration: input size, threshold, anchors per scale
/// (coarsest grid first) and the class-name table.
struct DecoderConfig {
  int input_size = 416;
  double conf_threshold = 0.25;
  std::vector<int> grid_sizes;
  std::vector<std::array<Anchor, kAnchorsPerCell>> anchors;
  std::vector<std::string> class_names;

  std::vector<GridSpec> grid_specs() const;
};

/// Canonical YOLOv3 nine-anchor set with the 80 COCO class names.
DecoderConfig default_decoder_config();

/// Parses the JSON configuration format; throws ParseError on bad input.
DecoderConfig parse_decoder_config(std::string_view json_text);
DecoderConfig load_decoder_config(const std::filesystem::path& path);
std::string serialize_decoder_config(const DecoderConfig& config);

enum class TensorLayout {
  RowColAnchorChannel,  // "hwac"
  AnchorChannelRowCol,  // "achw", the channel-major layout of Darknet-style heads
};

TensorLayout parse_tensor_layout(std::string_view token);

/// Reads a flat little-endian float32 file and reorders it into row-major
/// (row, column, anchor, channel). Throws ParseError naming the file when the
/// size does not match the grid.
RawHead read_raw_head(const std::filesystem::path& path, const GridSpec& spec,
                      TensorLayout layout = TensorLayout::RowColAnchorChannel);

/// Decodes one scale:
///   center = ((sigmoid(tx) + col) * stride, (sigmoid(ty) + row) * stride)
///   size   = (anchor_w * exp(tw), anchor_h * exp(th)),  tw, th clamped to [-20, 20]
///   score  = sigmoid(objectness) * max_k sigmoid(class_k)
/// Boxes with score >= conf_threshold are emitted, clipped to the input canvas.
/// Throws std::invalid_argument on a length mismatch, non-finite values or a
/// class table whose size differs from num_classes.
std::vector<Detection> decode_head(const RawHead& raw, const GridSpec& spec,
                                   std::span<const std::string> class_names,
                                   std::string_view image_id);

/// Decodes all scales and concatenates them in config order.
std::vector<Detection> decode_heads(std::span<const RawHead> heads, const DecoderConfig& config,
                                    std::string_view image_id);

/// Sum of grid_size^2 * anchors over the given scales.
std::size_t total_prediction_count(std::span<const GridSpec> specs) noexcept;

/// Regression target for one anchor: the inverse of the decode transform.
struct EncodedBox {
  int row = 0;
  int col = 0;
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

/// Requires the box center strictly inside the canvas and off the cell borders.
EncodedBox encode_box(const CenterBox& box, const GridSpec& spec, int anchor_index);

/// Aspect-preserving resize into the square network input.
struct Letterbox {
  double scale = 1.0;
  double pad_x = 0.0;
  double pad_y = 0.0;
};

Letterbox letterbox_for(double image_width, double image_height, int input_size);

/// Maps a network-space box back to original image coordinates.
Box unletterbox(const Box& box, const Letterbox& lb);

}  // namespace detgeom
