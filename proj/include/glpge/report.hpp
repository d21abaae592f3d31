#pragma once

#include <string>
#include <vector>

#include "glpge/image.hpp"

namespace glpge {

inline constexpr int kReportGutter = 8;
inline constexpr int kGlyphScale = 2;

/// Horizontal strip of panels (for example source | enhanced | ground truth)
/// separated and framed by white gutters, with `caption` drawn in a footer
/// band. Panels are rescaled to the height of the first one.
/// Width: sum of panel widths + (panels + 1) * gutter.
ImageBuffer report_render(const std::vector<ImageBuffer>& panels, const std::string& caption,
                          int gutter = kReportGutter);

/// Draws `text` with the built-in 5x7 font (upper-case ASCII, digits and
/// common punctuation; other characters render blank).
void draw_text(ImageBuffer& img, int y, int x, const std::string& text, float value, int scale = kGlyphScale);

/// Advance width of `text` in pixels.
int text_width(const std::string& text, int scale = kGlyphScale);

}  // namespace glpge
