#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pedsim/cohort_stats.hpp"

namespace pedsim::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 60;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

std::string header(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{3}</text>\n",
      kWidth, kHeight, num(kWidth / 2), escape(title));
}

std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label, bool x_ticks) {
  std::string out = fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{3}\" stroke=\"black\"/>\n",
      num(kLeft), num(kHeight - kBottom), num(kWidth - kRight), num(kTop));
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4;
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
        num(kLeft - 4), num(f.py(y) + 3), fmt::format("{:.3g}", y));
    if (x_ticks) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 4;
      out += fmt::format(
          "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
          num(f.px(x)), num(kHeight - kBottom + 14), fmt::format("{:.3g}", x));
    }
  }
  if (!x_label.empty()) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                       num(kWidth / 2), num(kHeight - 12), escape(x_label));
  }
  out += fmt::format(
      "<text x=\"14\" y=\"{0}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 14 {0})\">{1}</text>\n",
      num(kHeight / 2), escape(y_label));
  return out;
}

std::string legend(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 4 + 14 * static_cast<double>(i);
    out += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>"
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        num(kWidth - kRight - 110), num(y), kPalette[i % 6], num(kWidth - kRight - 96), num(y + 9), escape(names[i]));
  }
  return out;
}

}  // namespace

std::string empty_chart(const std::string& title, const std::string& message) {
  return header(title) +
         fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
                     num(kWidth / 2), num(kHeight / 2), escape(message)) +
         "</svg>\n";
}

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0, y1 = -x0;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (!std::isfinite(x0)) return empty_chart(title, "no data");
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1 * 1.05};
  std::string out = header(title) + axes(f, x_label, y_label, true);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      pts += fmt::format("{}{},{}", k ? " " : "", num(f.px(series[i].x[k])), num(f.py(series[i].y[k])));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", kPalette[i % 6], pts);
    names.push_back(series[i].name);
  }
  return out + legend(names) + "</svg>\n";
}

std::string box_chart(const std::string& title, const std::string& y_label, const std::vector<Box>& boxes) {
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const auto& b : boxes) {
    for (double v : b.values) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(y0)) return empty_chart(title, "no data");
  widen(y0, y1);
  const double pad = (y1 - y0) * 0.05;
  const Frame f{0, static_cast<double>(boxes.size()), y0 - pad, y1 + pad};
  std::string out = header(title) + axes(f, "", y_label, false);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const double cx = f.px(static_cast<double>(i) + 0.5);
    const double w = std::min(40.0, (kWidth - kLeft - kRight) / static_cast<double>(boxes.size()) * 0.6);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
                       num(cx), num(kHeight - kBottom + 14 + 12 * static_cast<double>(i % 2)), escape(boxes[i].label));
    if (boxes[i].values.empty()) continue;
    const auto& v = boxes[i].values;
    const double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    const char* color = kPalette[i % 2];
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\"/>\n", num(cx), num(f.py(lo)),
                       num(f.py(hi)), color);
    out += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"white\" stroke=\"{}\"/>\n", num(cx - w / 2),
        num(f.py(q3)), num(w), num(std::max(0.5, f.py(q1) - f.py(q3))), color);
    out += fmt::format("<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                       num(cx - w / 2), num(cx + w / 2), num(f.py(q2)), color);
  }
  return out + "</svg>\n";
}

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars) {
  std::vector<std::string> categories, series;
  double y1 = 0;
  for (const auto& b : bars) {
    if (std::find(categories.begin(), categories.end(), b.category) == categories.end()) categories.push_back(b.category);
    if (std::find(series.begin(), series.end(), b.series) == series.end()) series.push_back(b.series);
    y1 = std::max({y1, b.value, b.hi});
  }
  if (categories.empty()) return empty_chart(title, "no data");
  if (y1 <= 0) y1 = 1;
  const Frame f{0, static_cast<double>(categories.size()), 0, y1 * 1.1};
  std::string out = header(title) + axes(f, "", y_label, false);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(categories.size());
  const double bw = slot * 0.8 / static_cast<double>(series.size());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
                       num(f.px(static_cast<double>(c) + 0.5)), num(kHeight - kBottom + 14 + 12 * static_cast<double>(c % 2)),
                       escape(categories[c]));
  }
  for (const auto& b : bars) {
    const auto c = static_cast<std::size_t>(std::find(categories.begin(), categories.end(), b.category) - categories.begin());
    const auto s = static_cast<std::size_t>(std::find(series.begin(), series.end(), b.series) - series.begin());
    const double x = kLeft + slot * (static_cast<double>(c) + 0.1) + bw * static_cast<double>(s);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n", num(x), num(f.py(b.value)),
                       num(bw * 0.9), num(f.py(0) - f.py(b.value)), kPalette[s % 6]);
    if (b.hi > b.lo) {
      const double cx = x + bw * 0.45;
      out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", num(cx), num(f.py(b.lo)),
                         num(f.py(b.hi)));
    }
  }
  return out + legend(series) + "</svg>\n";
}

}  // namespace pedsim::svg
