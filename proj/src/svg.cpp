#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dsdl/data.hpp"

namespace dsdl {

std::string render_trace_svg(const TrainingTrace& trace) {
  constexpr double kWidth = 800.0;
  constexpr double kHeight = 400.0;
  constexpr double kMargin = 50.0;

  double top = 0.0;
  for (const auto& row : trace) {
    if (std::isfinite(row.rel_error)) top = std::max(top, row.rel_error);
  }
  if (top <= 0.0) top = 1.0;
  const double last_iter = trace.empty() ? 1.0 : std::max(1, trace.back().iter);

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"400\" "
         "viewBox=\"0 0 800 400\">\n"
      << "<rect width=\"800\" height=\"400\" fill=\"white\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
      << "<text x=\"400\" y=\"390\" text-anchor=\"middle\" font-size=\"14\">outer iteration</text>\n"
      << "<text x=\"15\" y=\"200\" text-anchor=\"middle\" font-size=\"14\" "
         "transform=\"rotate(-90 15 200)\">relative error</text>\n"
      << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin + 5
      << "\" text-anchor=\"end\" font-size=\"11\">" << top << "</text>\n"
      << "<text x=\"" << kMargin - 5 << "\" y=\"" << kHeight - kMargin
      << "\" text-anchor=\"end\" font-size=\"11\">0</text>\n"
      << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 15
      << "\" text-anchor=\"middle\" font-size=\"11\">" << last_iter << "</text>\n"
      << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  bool first = true;
  for (const auto& row : trace) {
    if (!std::isfinite(row.rel_error)) continue;
    const double px = kMargin + (kWidth - 2 * kMargin) * row.iter / last_iter;
    const double py = kHeight - kMargin - (kHeight - 2 * kMargin) * row.rel_error / top;
    svg << (first ? "" : " ") << px << "," << py;
    first = false;
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

void save_trace_svg(const std::filesystem::path& path, const TrainingTrace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << render_trace_svg(trace);
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

}  // namespace dsdl
