#include "rbox/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>

#include <json.hpp>

namespace rbox {
namespace {

using nlohmann::json;

double require_number(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(std::string("missing field: ") + key);
  }
  if (!it->is_number()) {
    throw ParseError(std::string("field is not a number: ") + key);
  }
  return it->get<double>();
}

BoxRecord record_from_json(const json& j) {
  if (!j.is_object()) {
    throw ParseError("box record is not a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    static const char* const allowed[] = {"id", "x",     "y",
                                          "w",  "h",     "theta",
                                          "angle_unit"};
    if (std::find_if(std::begin(allowed), std::end(allowed),
                     [&](const char* a) { return key == a; }) ==
        std::end(allowed)) {
      throw ParseError("unknown field: " + key);
    }
  }

  BoxRecord rec;
  if (const auto it = j.find("id"); it != j.end()) {
    if (!it->is_string()) throw ParseError("id is not a string");
    rec.id = it->get<std::string>();
  }
  double theta = require_number(j, "theta");
  if (const auto it = j.find("angle_unit"); it != j.end()) {
    if (!it->is_string()) throw ParseError("angle_unit is not a string");
    const std::string unit = it->get<std::string>();
    if (unit == "deg") {
      theta *= std::numbers::pi / 180.0;
    } else if (unit != "rad") {
      throw ParseError("angle_unit must be \"rad\" or \"deg\": " + unit);
    }
  }
  rec.box = make_box(require_number(j, "x"), require_number(j, "y"),
                     require_number(j, "w"), require_number(j, "h"), theta);
  return rec;
}

}  // namespace

BoxRecord parse_box_record(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad JSON: ") + e.what());
  }
  return record_from_json(j);
}

std::vector<BoxPair> read_pairs_jsonl(std::istream& in) {
  std::vector<BoxPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      if (!j.is_object() || !j.contains("a") || !j.contains("b")) {
        throw ParseError("pair line needs \"a\" and \"b\" box records");
      }
      for (const auto& [key, value] : j.items()) {
        if (key != "a" && key != "b") {
          throw ParseError("unknown field: " + key);
        }
      }
      pairs.push_back({record_from_json(j["a"]), record_from_json(j["b"])});
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": bad JSON: " +
                       e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const SizeDegenerateError& e) {
      throw SizeDegenerateError("line " + std::to_string(lineno) + ": " +
                                e.what());
    }
  }
  return pairs;
}

std::string format_csv_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string svg_line_chart(const std::string& title,
                           const std::vector<double>& xs,
                           const std::vector<std::string>& names,
                           const std::vector<std::vector<double>>& columns) {
  constexpr int kW = 640;
  constexpr int kH = 400;
  constexpr int kPad = 48;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                        "#9467bd", "#ff7f0e", "#8c564b",
                                        "#17becf"};

  double xmin = xs.empty() ? 0 : xs.front();
  double xmax = xs.empty() ? 1 : xs.front();
  for (double x : xs) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  double ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& col : columns) {
    for (double y : col) {
      if (!std::isfinite(y)) continue;
      if (first) {
        ymin = ymax = y;
        first = false;
      } else {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const auto px = [&](double x) {
    return kPad + (x - xmin) / (xmax - xmin) * (kW - 2 * kPad);
  };
  const auto py = [&](double y) {
    return kH - kPad - (y - ymin) / (ymax - ymin) * (kH - 2 * kPad);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kW) + "\" height=\"" + std::to_string(kH) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(kW / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + title + "</text>\n";
  // axes
  svg += "<line x1=\"" + std::to_string(kPad) + "\" y1=\"" +
         std::to_string(kH - kPad) + "\" x2=\"" + std::to_string(kW - kPad) +
         "\" y2=\"" + std::to_string(kH - kPad) +
         "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + std::to_string(kPad) + "\" y1=\"" +
         std::to_string(kPad) + "\" x2=\"" + std::to_string(kPad) +
         "\" y2=\"" + std::to_string(kH - kPad) +
         "\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  for (std::size_t c = 0; c < columns.size(); ++c) {
    const char* color = kColors[c % std::size(kColors)];
    std::string pts;
    for (std::size_t i = 0; i < xs.size() && i < columns[c].size(); ++i) {
      if (!std::isfinite(columns[c][i])) continue;
      pts += format_csv_value(px(xs[i])) + "," +
             format_csv_value(py(columns[c][i])) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    if (c < names.size()) {
      svg += "<text x=\"" + std::to_string(kW - kPad + 4) + "\" y=\"" +
             std::to_string(kPad + 16 * static_cast<int>(c)) +
             "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
             color + "\">" + names[c] + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace rbox
