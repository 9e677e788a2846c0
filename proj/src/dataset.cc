// Copyright 2026 The PTF Learning Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ptf/dataset.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ptf/errors.h"

namespace ptf {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, const std::string& path, int64_t row) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfigInvalid,
                path + ": row " + std::to_string(row) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteDatasetCsv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFileMissing, "cannot write " + path);
  for (int j = 0; j < data.dim(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (int64_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << FormatDouble(data.x(i, j)) << ',';
    out << data.y[i] << '\n';
  }
}

Dataset ReadDatasetCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileMissing, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kConfigInvalid, path + ": empty file");
  }
  const auto header = SplitCsvLine(line);
  if (header.empty() || header.back() != "y") {
    throw Error(ErrorCode::kConfigInvalid, path + ": last column must be y");
  }
  const int n = static_cast<int>(header.size()) - 1;
  std::vector<double> values;
  Dataset data;
  int64_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (static_cast<int>(fields.size()) != n + 1) {
      throw Error(ErrorCode::kConfigInvalid,
                  path + ": row " + std::to_string(row) + ": wrong field count");
    }
    for (int j = 0; j < n; ++j) values.push_back(ParseDouble(fields[j], path, row));
    const double label = ParseDouble(fields[n], path, row);
    if (label != 1.0 && label != -1.0) {
      throw Error(ErrorCode::kConfigInvalid,
                  path + ": row " + std::to_string(row) + ": label must be +1 or -1");
    }
    data.y.push_back(static_cast<int>(label));
  }
  data.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                    Eigen::RowMajor>>(values.data(), data.size(), n);
  return data;
}

std::string ProvenancePath(const std::string& dataset_path) {
  return dataset_path + ".provenance.csv";
}

void WriteProvenanceCsv(const std::string& path,
                        const std::vector<Provenance>& flags) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFileMissing, "cannot write " + path);
  out << "index,flag\n";
  for (size_t i = 0; i < flags.size(); ++i) {
    out << i << ',' << static_cast<int>(flags[i]) << '\n';
  }
}

std::vector<Provenance> ReadProvenanceCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileMissing, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<Provenance> flags;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != 2) throw Error(ErrorCode::kConfigInvalid, path + ": bad row");
    flags.push_back(static_cast<Provenance>(std::stoi(fields[1])));
  }
  return flags;
}

}  // namespace ptf
