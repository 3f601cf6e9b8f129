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

#ifndef BILEVEL_EXPORT_HPP_
#define BILEVEL_EXPORT_HPP_

#include <iosfwd>
#include <string>
#include <string_view>

#include "bilevel/single_level.hpp"

namespace bilevel {

enum class ExportFormat { kLp, kMps };

ExportFormat parse_export_format(std::string_view name);

/// CPLEX-dialect LP text. Rows longer than a line are wrapped with a leading
/// space; quadratic rows use `[ a * b ]` and `[ a ^ 2 ]`; indicators read
/// `name: z = 1 -> body sense rhs`; SOS1 sets are `name: S1 :: v:w ...`.
/// Every variable gets an explicit Bounds line (or a Binaries entry), so a
/// reader sees all of them. Names outside the LP charset are rewritten.
void write_lp(const SingleLevelModel& slm, std::ostream& out);

/// Fixed-field MPS with 8-character names `X0000001` / `R0000001`; the
/// original names are listed in leading `*` comment lines. Binaries sit in
/// INTORG markers with BV bounds; SOS1 and INDICATORS sections follow the
/// CPLEX extensions. Throws Error(kQuadraticUnsupported) naming the first
/// quadratic row.
void write_mps(const SingleLevelModel& slm, std::ostream& out);

/// Writes to `path`; throws Error(kIo) if the file cannot be written.
void export_model(const SingleLevelModel& slm, ExportFormat format, const std::string& path);

/// Parses the dialect produced by write_lp. Variables are created in order of
/// first appearance. Throws Error(kParse) with a line number.
SingleLevelModel read_lp(std::istream& in);

}  // namespace bilevel

#endif  // BILEVEL_EXPORT_HPP_
