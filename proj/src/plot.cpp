#include "ramp_stdae/plot.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ramp_stdae {

namespace {

std::string polyline(const std::vector<double>& ys, double lo, double hi, double width, double height, double pad,
                     const char* color) {
  std::ostringstream out;
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  const auto n = ys.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pad + (n > 1 ? (width - 2 * pad) * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
    const double y = height - pad - (height - 2 * pad) * (ys[i] - lo) / (hi - lo);
    out << x << ',' << y << ' ';
  }
  out << "\"/>\n";
  return out.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_forecast_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& truth,
                        const std::vector<double>& pred) {
  if (truth.size() != pred.size() || truth.empty()) throw std::invalid_argument("plot needs two equal, non-empty series");
  constexpr double width = 900, height = 320, pad = 40;
  double lo = std::min(*std::min_element(truth.begin(), truth.end()), *std::min_element(pred.begin(), pred.end()));
  double hi = std::max(*std::max_element(truth.begin(), truth.end()), *std::max_element(pred.begin(), pred.end()));
  if (hi - lo < 1e-9) hi = lo + 1.0;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title)
      << "</text>\n"
      << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad << "\" y2=\"" << height - pad
      << "\" stroke=\"#888\"/>\n"
      << "<text x=\"4\" y=\"" << pad << "\" font-family=\"sans-serif\" font-size=\"10\">" << hi << "</text>\n"
      << "<text x=\"4\" y=\"" << height - pad << "\" font-family=\"sans-serif\" font-size=\"10\">" << lo << "</text>\n"
      << polyline(truth, lo, hi, width, height, pad, "#1f77b4") << polyline(pred, lo, hi, width, height, pad, "#d62728")
      << "<text x=\"" << width - 160 << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">truth</text>\n"
      << "<text x=\"" << width - 100 << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">forecast</text>\n"
      << "</svg>\n";
}

}  // namespace ramp_stdae
