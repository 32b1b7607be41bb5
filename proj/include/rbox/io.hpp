#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbox/geometry.hpp"

namespace rbox {

// Malformed input (bad JSON, unknown field, wrong type). Distinct from the
// domain errors so the CLI can map them to different exit codes.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One JSON object: {"id": ..., "x": ..., "y": ..., "w": ..., "h": ...,
// "theta": ..., "angle_unit": "rad"|"deg"}. id and angle_unit are optional
// (empty id, radians); any other missing or unknown field is rejected.
struct BoxRecord {
  std::string id;
  RotatedBox box;
};

BoxRecord parse_box_record(const std::string& json_text);

struct BoxPair {
  BoxRecord a;
  BoxRecord b;
};

// JSON-lines, one {"a": {...}, "b": {...}} object per line. Blank lines are
// skipped; errors name the offending line.
std::vector<BoxPair> read_pairs_jsonl(std::istream& in);

// %.12g: 12 significant digits, '.' decimal separator, byte-stable.
std::string format_csv_value(double v);

// Minimal line-chart writer: one polyline per column of `columns`, all drawn
// against `xs`. Made for eyeballing sweeps and traces, nothing more.
std::string svg_line_chart(const std::string& title,
                           const std::vector<double>& xs,
                           const std::vector<std::string>& names,
                           const std::vector<std::vector<double>>& columns);

}  // namespace rbox
