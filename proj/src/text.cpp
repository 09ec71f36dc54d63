// src/text.cpp
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

#include "aac/text.h"

#include <cctype>

namespace aac {

namespace {

bool is_stripped(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':': case '"': case '(': case ')':
      return true;
    default:
      return false;
  }
}

void flush(std::string& word, Tokens& out) {
  std::size_t b = 0, e = word.size();
  while (b < e && word[b] == '\'') ++b;
  while (e > b && word[e - 1] == '\'') --e;
  if (e > b) out.push_back(word.substr(b, e - b));
  word.clear();
}

}  // namespace

Tokens tokenize_caption(std::string_view text) {
  Tokens out;
  std::string word;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush(word, out);
    } else if (!is_stripped(raw)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush(word, out);
  return out;
}

std::string detokenize(const Tokens& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace aac
