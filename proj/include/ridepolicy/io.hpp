// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RIDEPOLICY_IO_HPP_
#define RIDEPOLICY_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ridepolicy/trip.hpp"

namespace ridepolicy::io {

// Empty string for NaN so missing values round-trip.
std::string fmt_double(double v, int significant = 10);
std::string fmt_fixed(double v, int decimals);
std::string fmt_money(Money m);
Money parse_money(std::string_view s);
double parse_double(std::string_view s);  // "" -> NaN
std::int64_t parse_int(std::string_view s);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return cells_.size(); }
  // Throws IntegrityError naming the file if the column is absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  const std::string& at(std::size_t row, std::size_t col) const {
    return cells_[row][col];
  }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

extern const std::vector<std::string> kTripColumns;
extern const std::vector<std::string> kDemandColumns;

void write_trips(const std::filesystem::path& path,
                 const std::vector<TripEvent>& trips);
// Validates every row; throws IntegrityError on bad data.
std::vector<TripEvent> read_trips(const std::filesystem::path& path);

void write_demand(const std::filesystem::path& path,
                  const std::vector<DemandRow>& rows);
std::vector<DemandRow> read_demand(const std::filesystem::path& path);

}  // namespace ridepolicy::io

#endif  // RIDEPOLICY_IO_HPP_
