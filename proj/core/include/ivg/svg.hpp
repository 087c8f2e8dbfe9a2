#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace ivg {

struct SvgOptions {
  std::string asset_prefix;  // prepended to each node's "asset" path
  bool embed_thumbnails = true;
  double bubble_padding = 12.0;
  double glyph_radius = 14.0;
};

std::string xml_escape(std::string_view text);

// Static rendering of a layout document. Throws std::invalid_argument when
// the document is not a layout document.
std::string render_svg(const nlohmann::json& layout, const SvgOptions& options = {});

}  // namespace ivg
