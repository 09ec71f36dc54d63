// include/aac/text.h
//
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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aac {

using Tokens = std::vector<std::string>;

// Lowercases, deletes .,!?;:"() and apostrophes at word edges, then splits
// on whitespace. "Car's engine, revving" -> [car's, engine, revving].
Tokens tokenize_caption(std::string_view text);

// Space-joined; inverse of tokenize_caption on canonical text.
std::string detokenize(const Tokens& tokens);

}  // namespace aac
