#include "laf/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "laf/error.hpp"

namespace laf {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

struct Line {
  std::size_t number;  // 1-based
  std::string_view text;
};

// Non-empty lines with any trailing '\r' removed.
std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  while (!text.empty()) {
    ++number;
    const auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.push_back({number, line});
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return fields;
}

std::optional<long long> parse_integer(std::string_view s) {
  long long value = 0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

[[noreturn]] void fail(const std::string& message) { throw ParseError(message); }

std::string row_name(const Line& line, std::string_view id) {
  if (!id.empty()) return "row " + std::string(id);
  return "line " + std::to_string(line.number);
}

std::string_view first_token(std::string_view text) {
  for (char c : text) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return text.substr(text.find(c), 1);
  }
  return {};
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

PredictionMatrix parse_predictions_csv(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t next = 0;
  std::optional<int> declared_classes;

  if (next < lines.size() && trim(lines[next].text).starts_with('#')) {
    const auto directive = trim(lines[next].text);
    constexpr std::string_view key = "#classes=";
    if (!directive.starts_with(key)) {
      fail("line " + std::to_string(lines[next].number) + ": unknown directive '" +
           std::string(directive) + "'");
    }
    const auto value = parse_integer(trim(directive.substr(key.size())));
    if (!value || *value < 1 || *value > std::numeric_limits<Label>::max()) {
      fail("line " + std::to_string(lines[next].number) + ": invalid class count in '" +
           std::string(directive) + "'");
    }
    declared_classes = static_cast<int>(*value);
    ++next;
  }

  if (next >= lines.size()) fail("missing header line");
  const auto header = split_fields(lines[next].text);
  if (header.front() != "sample_id") {
    fail("header: first column must be 'sample_id', got '" + std::string(header.front()) + "'");
  }
  PredictionMatrix matrix;
  {
    std::unordered_set<std::string_view> seen;
    for (std::size_t k = 1; k < header.size(); ++k) {
      if (header[k].empty()) fail("header, column " + std::to_string(k + 1) + ": empty model name");
      if (!seen.insert(header[k]).second) {
        fail("header: duplicate model name '" + std::string(header[k]) + "'");
      }
      matrix.model_names.emplace_back(header[k]);
    }
  }
  const std::size_t n = matrix.model_names.size();
  if (n < 2) fail("header: need at least 2 models, got " + std::to_string(n));
  ++next;

  std::unordered_set<std::string> seen_ids;
  long long max_label = -1;
  for (; next < lines.size(); ++next) {
    const auto& line = lines[next];
    const auto fields = split_fields(line.text);
    const auto id = fields.front();
    const auto where = row_name(line, id);
    if (id.empty()) fail(where + ": empty sample id");
    if (fields.size() - 1 != n) {
      fail(where + ": expected " + std::to_string(n) + " labels, got " +
           std::to_string(fields.size() - 1));
    }
    if (!seen_ids.emplace(id).second) fail(where + ": duplicate sample id");
    for (std::size_t j = 0; j < n; ++j) {
      const auto field = fields[j + 1];
      const auto column = ", column " + matrix.model_names[j];
      const auto value = parse_integer(field);
      if (!value) fail(where + column + ": invalid label '" + std::string(field) + "'");
      if (*value < 0) fail(where + column + ": negative label " + std::to_string(*value));
      if (declared_classes && *value >= *declared_classes) {
        fail(where + column + ": label " + std::to_string(*value) + " >= declared classes " +
             std::to_string(*declared_classes));
      }
      if (*value > std::numeric_limits<Label>::max() - 1) {
        fail(where + column + ": label " + std::to_string(*value) + " too large");
      }
      max_label = std::max(max_label, *value);
      matrix.labels.push_back(static_cast<Label>(*value));
    }
    matrix.sample_ids.emplace_back(id);
  }
  if (matrix.sample_ids.empty()) fail("no samples");
  matrix.num_classes = declared_classes ? *declared_classes : static_cast<int>(max_label + 1);
  return matrix;
}

PredictionMatrix parse_predictions_json(std::string_view text) {
  const json doc = parse_json(text);
  PredictionMatrix matrix;
  try {
    if (!doc.is_object()) fail("predictions JSON must be an object");
    matrix.model_names = doc.at("model_names").get<std::vector<std::string>>();
    matrix.sample_ids = doc.at("sample_ids").get<std::vector<std::string>>();
    const auto& rows = doc.at("labels");
    if (!rows.is_array()) fail("'labels' must be an array of arrays");
    if (rows.size() != matrix.sample_ids.size()) {
      fail("'labels' has " + std::to_string(rows.size()) + " rows but there are " +
           std::to_string(matrix.sample_ids.size()) + " sample ids");
    }
    long long max_label = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto where = "row " + (i < matrix.sample_ids.size() ? matrix.sample_ids[i] : "?");
      if (!rows[i].is_array() || rows[i].size() != matrix.model_names.size()) {
        fail(where + ": expected " + std::to_string(matrix.model_names.size()) + " labels, got " +
             std::to_string(rows[i].is_array() ? rows[i].size() : 0));
      }
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        const auto& cell = rows[i][j];
        if (!cell.is_number_integer()) {
          fail(where + ", column " + matrix.model_names[j] + ": invalid label " + cell.dump());
        }
        const auto value = cell.get<long long>();
        if (value < 0 || value > std::numeric_limits<Label>::max() - 1) {
          fail(where + ", column " + matrix.model_names[j] + ": invalid label " +
               std::to_string(value));
        }
        max_label = std::max(max_label, value);
        matrix.labels.push_back(static_cast<Label>(value));
      }
    }
    if (doc.contains("num_classes") && !doc.at("num_classes").is_null()) {
      matrix.num_classes = doc.at("num_classes").get<int>();
    } else {
      matrix.num_classes = static_cast<int>(max_label + 1);
    }
  } catch (const json::exception& e) {
    fail(std::string("predictions JSON: ") + e.what());
  }
  try {
    matrix.validate();
  } catch (const InvalidArgument& e) {
    fail(e.what());
  }
  return matrix;
}

PredictionMatrix parse_predictions(std::string_view text) {
  if (first_token(text) == "{") return parse_predictions_json(text);
  return parse_predictions_csv(text);
}

std::string predictions_to_csv(const PredictionMatrix& matrix) {
  std::string out = "#classes=" + std::to_string(matrix.num_classes) + "\nsample_id";
  for (const auto& name : matrix.model_names) out += ',' + name;
  out += '\n';
  for (std::size_t i = 0; i < matrix.num_samples(); ++i) {
    out += matrix.sample_ids[i];
    for (const Label y : matrix.row(i)) {
      out += ',';
      out += std::to_string(y);
    }
    out += '\n';
  }
  return out;
}

std::string predictions_to_json(const PredictionMatrix& matrix) {
  json rows = json::array();
  for (std::size_t i = 0; i < matrix.num_samples(); ++i) {
    const auto row = matrix.row(i);
    rows.push_back(std::vector<Label>(row.begin(), row.end()));
  }
  json doc = {{"model_names", matrix.model_names},
              {"sample_ids", matrix.sample_ids},
              {"num_classes", matrix.num_classes},
              {"labels", std::move(rows)}};
  return doc.dump() + '\n';
}

GroundTruth parse_ground_truth_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail("missing header line");
  const auto header = split_fields(lines.front().text);
  if (header.size() != 2 || header[0] != "sample_id" || header[1] != "label") {
    fail("header: expected 'sample_id,label'");
  }
  GroundTruth truth;
  std::unordered_set<std::string> seen;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto fields = split_fields(lines[k].text);
    const auto where = row_name(lines[k], fields.front());
    if (fields.front().empty()) fail(where + ": empty sample id");
    if (fields.size() != 2) {
      fail(where + ": expected 1 label, got " + std::to_string(fields.size() - 1));
    }
    if (!seen.emplace(fields[0]).second) fail(where + ": duplicate sample id");
    const auto value = parse_integer(fields[1]);
    if (!value) fail(where + ", column label: invalid label '" + std::string(fields[1]) + "'");
    if (*value < 0 || *value > std::numeric_limits<Label>::max() - 1) {
      fail(where + ", column label: invalid label " + std::to_string(*value));
    }
    truth.sample_ids.emplace_back(fields[0]);
    truth.labels.push_back(static_cast<Label>(*value));
  }
  if (truth.sample_ids.empty()) fail("no samples");
  return truth;
}

GroundTruth parse_ground_truth_json(std::string_view text) {
  const json doc = parse_json(text);
  GroundTruth truth;
  try {
    truth.sample_ids = doc.at("sample_ids").get<std::vector<std::string>>();
    truth.labels = doc.at("labels").get<std::vector<Label>>();
  } catch (const json::exception& e) {
    fail(std::string("ground truth JSON: ") + e.what());
  }
  if (truth.sample_ids.size() != truth.labels.size()) {
    fail("ground truth JSON: 'sample_ids' and 'labels' differ in length");
  }
  if (truth.sample_ids.empty()) fail("no samples");
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth.sample_ids[i].empty()) fail("ground truth JSON: empty sample id");
    if (!seen.insert(truth.sample_ids[i]).second) {
      fail("row " + truth.sample_ids[i] + ": duplicate sample id");
    }
    if (truth.labels[i] < 0) {
      fail("row " + truth.sample_ids[i] + ": negative label " + std::to_string(truth.labels[i]));
    }
  }
  return truth;
}

GroundTruth parse_ground_truth(std::string_view text) {
  if (first_token(text) == "{") return parse_ground_truth_json(text);
  return parse_ground_truth_csv(text);
}

std::string ground_truth_to_csv(const GroundTruth& truth) {
  std::string out = "sample_id,label\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out += truth.sample_ids[i] + ',' + std::to_string(truth.labels[i]) + '\n';
  }
  return out;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
  json doc = {{"sample_ids", truth.sample_ids}, {"labels", truth.labels}};
  return doc.dump() + '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace laf
