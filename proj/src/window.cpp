#include "birdsi/window.hpp"

#include <algorithm>
#include <sstream>

#include "birdsi/errors.hpp"

namespace birdsi::window {

bool WindowSpec::canonical() const {
  if (kind != WindowKind::Convex) return true;
  return (k == 1 || k == 2) && (m == 1 || m == 2);
}

std::string WindowSpec::to_string() const {
  switch (kind) {
    case WindowKind::Mpeg7:
      return "mpeg7";
    case WindowKind::Convex:
      return "convex:" + std::to_string(k) + "," + std::to_string(m);
    case WindowKind::Fixed:
      return "fixed:" + std::to_string(fixed_value);
    case WindowKind::EqualG:
      return "equal-g";
    case WindowKind::DoubleG:
      return "double-g";
  }
  return "?";
}

WindowSpec parse_window_spec(const std::string& text) {
  WindowSpec spec;
  if (text == "mpeg7") {
    spec.kind = WindowKind::Mpeg7;
    return spec;
  }
  if (text == "equal-g") {
    spec.kind = WindowKind::EqualG;
    return spec;
  }
  if (text == "double-g") {
    spec.kind = WindowKind::DoubleG;
    return spec;
  }
  auto parse_count = [&](const std::string& s) -> Count {
    std::size_t pos = 0;
    long long v;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      throw InputError("unknown window spec '" + text + "'");
    }
    if (pos != s.size()) throw InputError("unknown window spec '" + text + "'");
    return v;
  };
  const std::string convex = "convex:";
  if (text.rfind(convex, 0) == 0) {
    std::string args = text.substr(convex.size());
    auto comma = args.find(',');
    if (comma == std::string::npos)
      throw InputError("window spec '" + text + "' needs convex:<k>,<m>");
    spec.kind = WindowKind::Convex;
    spec.k = parse_count(args.substr(0, comma));
    spec.m = parse_count(args.substr(comma + 1));
    if (spec.k < 1 || spec.m < 1)
      throw InputError("convex window parameters must be positive");
    return spec;
  }
  const std::string fixed = "fixed:";
  if (text.rfind(fixed, 0) == 0) {
    spec.kind = WindowKind::Fixed;
    spec.fixed_value = parse_count(text.substr(fixed.size()));
    if (spec.fixed_value < 1)
      throw InputError("fixed window must be at least 1");
    return spec;
  }
  throw InputError("unknown window spec '" + text +
                   "' (expected mpeg7, convex:<k>,<m>, fixed:<n>, equal-g, "
                   "double-g)");
}

namespace {

void check_domain(Count g, Count g_max) {
  if (g_max < 1) throw InputError("g_max must be at least 1");
  if (g < 0) throw InputError("G must be non-negative");
  if (g > g_max)
    throw InputError("G=" + std::to_string(g) + " exceeds g_max=" +
                     std::to_string(g_max));
}

}  // namespace

Count w_mpeg(Count g, Count g_max) {
  check_domain(g, g_max);
  return std::min(4 * g, 2 * g_max);
}

Rational w_convex_real(Count g, Count g_max, Count k, Count m) {
  check_domain(g, g_max);
  if (k < 1 || m < 1) throw InputError("convex window parameters must be positive");
  Rational peak(m * g_max);
  Rational offset = Rational(g) - peak;
  return Rational(k) * (peak - offset * offset / peak);
}

Count w_convex(Count g, Count g_max, Count k, Count m) {
  return ceil_rational(w_convex_real(g, g_max, k, m));
}

WindowTable window_table(const std::vector<Count>& g_values, Count g_max) {
  WindowTable table;
  table.g_values = g_values;
  auto column = [&](const std::string& name, auto&& fn) {
    std::vector<Count> values;
    values.reserve(g_values.size());
    for (Count g : g_values) values.push_back(fn(g));
    table.columns.emplace_back(name, std::move(values));
  };
  column("W_mpeg", [&](Count g) { return w_mpeg(g, g_max); });
  column("W=G", [&](Count g) {
    check_domain(g, g_max);
    return g;
  });
  column("W=2G", [&](Count g) {
    check_domain(g, g_max);
    return 2 * g;
  });
  column("W(1,1)", [&](Count g) { return w_convex(g, g_max, 1, 1); });
  column("W(1,2)", [&](Count g) { return w_convex(g, g_max, 1, 2); });
  column("W(2,1)", [&](Count g) { return w_convex(g, g_max, 2, 1); });
  return table;
}

std::string render_table_csv(const WindowTable& table) {
  std::ostringstream out;
  out << "G";
  for (const auto& [name, values] : table.columns) out << "," << name;
  out << "\n";
  for (std::size_t row = 0; row < table.g_values.size(); ++row) {
    out << table.g_values[row];
    for (const auto& [name, values] : table.columns) out << "," << values[row];
    out << "\n";
  }
  return out.str();
}

std::string render_table_text(const WindowTable& table) {
  std::vector<std::string> headers{"G"};
  for (const auto& [name, values] : table.columns) headers.push_back(name);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t row = 0; row < table.g_values.size(); ++row) {
    std::vector<std::string> cells{std::to_string(table.g_values[row])};
    for (const auto& [name, values] : table.columns)
      cells.push_back(std::to_string(values[row]));
    rows.push_back(std::move(cells));
  }
  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& cells : rows) widths[c] = std::max(widths[c], cells[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << "  ";
      out << std::string(widths[c] - cells[c].size(), ' ') << cells[c];
    }
    out << "\n";
  };
  emit(headers);
  for (const auto& cells : rows) emit(cells);
  return out.str();
}

WindowChoice select_window(Count g, const WindowSpec& spec) {
  WindowChoice choice;
  switch (spec.kind) {
    case WindowKind::Mpeg7:
      choice.w = w_mpeg(g, spec.g_max);
      break;
    case WindowKind::Convex:
      choice.w = w_convex(g, spec.g_max, spec.k, spec.m);
      break;
    case WindowKind::Fixed:
      choice.w = spec.fixed_value;
      break;
    case WindowKind::EqualG:
      choice.w = g;
      break;
    case WindowKind::DoubleG:
      choice.w = 2 * g;
      break;
  }
  if (choice.w < g)
    choice.positivity = WindowPositivity::BelowG;
  else if (choice.w == g && g > 0)
    choice.positivity = WindowPositivity::EqualsG;
  return choice;
}

}  // namespace birdsi::window
