#pragma once

#include <string>

#include "jshap/core.hpp"

namespace jshap {

/// Reads a dataset CSV: one header row of feature names, numeric body, UTF-8,
/// LF line endings. Parse problems raise ParseError with the line number.
Dataset load_dataset_csv(const std::string& path);
Dataset parse_dataset_csv(const std::string& text);

/// Shortest round-trip formatting, so write + read is bit-identical.
std::string dataset_to_csv(const Dataset& data);
void write_dataset_csv(const Dataset& data, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace jshap
