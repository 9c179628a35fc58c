#pragma once

#include <string>
#include <vector>

#include "birdsi/rational.hpp"

namespace birdsi::window {

enum class WindowKind { Mpeg7, Convex, Fixed, EqualG, DoubleG };

// How the scoring window W is chosen from a query's ground-truth size G.
// g_max is the largest G across the benchmark and parameterizes the Mpeg7
// and Convex families; callers fill it in from the loaded ground truth.
struct WindowSpec {
  WindowKind kind = WindowKind::Convex;
  Count k = 1;            // Convex only
  Count m = 2;            // Convex only
  Count fixed_value = 0;  // Fixed only
  Count g_max = 0;

  // The published family uses k,m in {1,2}; other positive values compute
  // fine but are flagged so the CLI can warn.
  bool canonical() const;
  std::string to_string() const;
};

// "mpeg7", "convex:<k>,<m>", "fixed:<n>", "equal-g", "double-g".
// g_max is left 0 for the caller to fill.
WindowSpec parse_window_spec(const std::string& text);

// min(4*G, 2*g_max). Throws InputError if G > g_max or g_max < 1.
Count w_mpeg(Count g, Count g_max);

// Pre-ceiling value of the convex family member (k, m):
//   k * (m*g_max - (G - m*g_max)^2 / (m*g_max))
// an inverted parabola through (0, 0) peaking at G = m*g_max.
Rational w_convex_real(Count g, Count g_max, Count k, Count m);

// Ceil of the above; the integer window actually used for scoring.
Count w_convex(Count g, Count g_max, Count k, Count m);

struct WindowTable {
  std::vector<Count> g_values;
  // Column name -> one value per g, in presentation order.
  std::vector<std::pair<std::string, std::vector<Count>>> columns;
};

// All six window functions evaluated at each g: W_mpeg, W=G, W=2G,
// W(1,1), W(1,2), W(2,1).
WindowTable window_table(const std::vector<Count>& g_values, Count g_max);

std::string render_table_text(const WindowTable& table);
std::string render_table_csv(const WindowTable& table);

// Whether the chosen window respects the strict positivity requirement
// W > G. EqualsG and BelowG windows need an explicit opt-in to score with.
enum class WindowPositivity { Strict, EqualsG, BelowG };

struct WindowChoice {
  Count w = 0;
  WindowPositivity positivity = WindowPositivity::Strict;
};

WindowChoice select_window(Count g, const WindowSpec& spec);

}  // namespace birdsi::window
