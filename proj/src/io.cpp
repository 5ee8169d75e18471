#include "jshap/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace jshap {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write file: " + path);
  out << text;
}

Dataset parse_dataset_csv(const std::string& text) {
  std::vector<std::string> names;
  std::vector<DataPoint> rows;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (line_no == 1) {
      names = std::move(fields);
      continue;
    }
    if (fields.size() != names.size()) {
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(names.size()),
                       line_no);
    }
    std::vector<double> values(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& field = fields[i];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("non-numeric cell '" + field + "'", line_no);
      }
      values[i] = v;
    }
    rows.emplace_back(std::move(values));
  }
  if (line_no == 0) throw InvalidInputError("empty csv document");
  if (rows.empty()) throw InvalidInputError("csv has a header but no rows");
  return Dataset(std::move(rows), std::move(names));
}

Dataset load_dataset_csv(const std::string& path) {
  return parse_dataset_csv(read_text_file(path));
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  const int d = data.dim();
  if (!data.feature_names().empty()) {
    for (int i = 0; i < d; ++i) {
      if (i) out << ",";
      out << data.feature_names()[static_cast<std::size_t>(i)];
    }
  } else {
    for (int i = 0; i < d; ++i) {
      if (i) out << ",";
      out << "f" << i;
    }
  }
  out << "\n";
  for (const DataPoint& row : data.rows()) {
    for (int i = 0; i < d; ++i) {
      if (i) out << ",";
      out << format_double(row[i]);
    }
    out << "\n";
  }
  return out.str();
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  write_text_file(path, dataset_to_csv(data));
}

}  // namespace jshap
