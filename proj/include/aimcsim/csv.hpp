/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace aimcsim {

/// Doubles are written with 17 significant digits so CSV round-trips are
/// lossless for IEEE doubles.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(const std::string &path) : out_(path) {
    if (!out_) {
      throw std::runtime_error("cannot open for writing: " + path);
    }
  }

  void header(const std::vector<std::string> &cols) { line(cols); }

  void row(const std::vector<std::string> &cells) { line(cells); }

  void cell(std::string value) { pending_.push_back(std::move(value)); }
  void cell(double value) { pending_.push_back(format_double(value)); }
  void cell(std::int64_t value) { pending_.push_back(std::to_string(value)); }
  void cell(std::uint64_t value) { pending_.push_back(std::to_string(value)); }

  void end_row() {
    line(pending_);
    pending_.clear();
  }

private:
  void line(const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) {
        out_ << ',';
      }
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::vector<std::string> pending_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) {
        return static_cast<int>(i);
      }
    }
    return -1;
  }

  double number(std::size_t row, int col) const {
    return std::stod(rows[row][col]);
  }
};

inline CsvTable read_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

} // namespace aimcsim
