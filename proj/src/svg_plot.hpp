#pragma once

#include <string>
#include <vector>

namespace pedsim::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Box {
  std::string label;
  std::vector<double> values;
};

struct Bar {
  std::string category;
  std::string series;
  double value = 0;
  double lo = 0;  // error bar; equal to value for none
  double hi = 0;
};

// Minimal static charts; output depends only on the arguments.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);
std::string box_chart(const std::string& title, const std::string& y_label, const std::vector<Box>& boxes);
std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars);
// Message-only chart for sections without data.
std::string empty_chart(const std::string& title, const std::string& message);

}  // namespace pedsim::svg
