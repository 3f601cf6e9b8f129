// Copyright 2026 The bilevel-svr Authors
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

#ifndef BILEVEL_SVR_HPP_
#define BILEVEL_SVR_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bilevel/model.hpp"

namespace bilevel {

/// Support-vector-regression tuning dataset. Rows `in_idx` train the lower
/// level, rows `out_idx` score the upper level.
struct SvrInstance {
  int samples = 0;
  int features = 0;
  Eigen::MatrixXd x;  // samples x features
  Eigen::VectorXd y;
  std::vector<int> in_idx;
  std::vector<int> out_idx;
  std::uint64_t seed = 0;
  double noise_amp = 0.1;

  std::string name() const;
};

/// "S/FF", features zero-padded to two digits.
std::string instance_name(int samples, int features);
/// Throws Error(kParse) on malformed names.
std::pair<int, int> parse_instance_name(std::string_view name);

/// Uniform double on [0, 1) from one 64-bit draw: top 53 bits times 2^-53.
double unit_uniform(std::uint64_t draw);

/// x_ij ~ U[-1, 1] drawn row-major from std::mt19937_64(seed), then
/// y_i = sum_j x_ij + noise_amp * U[-1, 1] in sample order. The first
/// ceil(S/2) samples are in-sample. Throws kInvalidInstance for S < 2 or F < 1.
SvrInstance generate_instance(int samples, int features, std::uint64_t seed,
                              double noise_amp = 0.1);

/// Instance from explicit data; the first `in_sample` rows are in-sample.
SvrInstance make_instance(Eigen::MatrixXd x, Eigen::VectorXd y, int in_sample);

struct SvrModel {
  BilevelModel model;
  VarId c;
  VarId eps;
  std::vector<VarId> xi_upper;  // one per out-of-sample row
  std::vector<VarId> w;
  std::vector<VarId> xi_lower;  // one per in-sample row
};

/// Hyperparameter-tuning bilevel program: the upper level picks C, eps >= 0
/// to minimize the out-of-sample absolute error of the w returned by the
/// lower-level SVR training problem  min |w|^2 + C sum xi  with the
/// eps-insensitive constraints on the in-sample rows.
SvrModel build_bilevel(const SvrInstance& inst);

/// Out-of-sample L1 loss  sum_{i in O} |y_i - x_i . w|.
double upper_loss(const SvrInstance& inst, const Eigen::VectorXd& w);

/// CSV with columns x_1..x_F, y, split ("in"/"out"), plus a JSON sidecar
/// holding seed, sizes and generator description.
void write_instance_csv(const SvrInstance& inst, std::ostream& csv);
void write_instance_sidecar(const SvrInstance& inst, std::ostream& json);
/// Throws Error(kParse). `sidecar` may be null.
SvrInstance read_instance_csv(std::istream& csv, std::istream* sidecar = nullptr);

}  // namespace bilevel

#endif  // BILEVEL_SVR_HPP_
