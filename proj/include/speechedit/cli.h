// include/speechedit/cli.h

// Copyright 2026  The speechedit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEECHEDIT_CLI_H_
#define SPEECHEDIT_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace speechedit {

/// Commands understood by RunCommand.
const std::vector<std::string> &CommandNames();

/// Runs `speechedit <command> [flags]`; args[0] is the program name. Returns
/// the exit status. Failures print exactly one line `error: <context>: <msg>`
/// on `err` (exit 1; 2 for usage errors).
int RunCommand(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// The `--help` text of one command (or of the tool when `command` is empty).
std::string CommandHelp(const std::string &command);

}  // namespace speechedit

#endif  // SPEECHEDIT_CLI_H_
