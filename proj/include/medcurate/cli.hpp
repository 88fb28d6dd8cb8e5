// Copyright 2026 The medcurate Authors.
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

#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace medcurate {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // usage or configuration error
inline constexpr int kExitData = 2;     // malformed or inconsistent data, I/O
inline constexpr int kExitBackend = 3;  // reward backend failure
inline constexpr int kExitInterrupted = 130;

// Runs the command line `args` (args[0] is the program name). `stop`, when
// given, is polled between record chunks so a signal handler can end a run
// early.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* stop = nullptr);

}  // namespace medcurate
