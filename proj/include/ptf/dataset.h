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

// Labeled point sets and their CSV form. The learner-facing view carries no
// provenance; the harness keeps that in a separate vector and sibling file.

#ifndef PTF_DATASET_H_
#define PTF_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ptf {

struct Dataset {
  Eigen::MatrixXd x;   // one row per example
  std::vector<int> y;  // +1 / -1

  int64_t size() const { return static_cast<int64_t>(y.size()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

enum class Provenance : int { kClean = 0, kLabelFlipped = 1, kReplaced = 2 };

// Writes the header x1..xn,y and one row per example with round-trip
// precision. Throws FileMissing if the file cannot be opened.
void WriteDatasetCsv(const std::string& path, const Dataset& data);
// Throws FileMissing or ConfigInvalid (malformed rows, labels not +-1).
Dataset ReadDatasetCsv(const std::string& path);

// Sibling path used for provenance flags; learners never open it.
std::string ProvenancePath(const std::string& dataset_path);
void WriteProvenanceCsv(const std::string& path,
                        const std::vector<Provenance>& flags);
std::vector<Provenance> ReadProvenanceCsv(const std::string& path);

// Shared by every CSV writer: %.17g.
std::string FormatDouble(double v);

}  // namespace ptf

#endif  // PTF_DATASET_H_
