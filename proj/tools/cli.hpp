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

#ifndef BILEVEL_TOOLS_CLI_HPP_
#define BILEVEL_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace bilevel {

/// Runs one command line (program name excluded). Exit codes: 0 success,
/// 1 runtime or cell error, 2 usage error (help goes to `err`).
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bilevel

#endif  // BILEVEL_TOOLS_CLI_HPP_
