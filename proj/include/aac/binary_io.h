// include/aac/binary_io.h
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

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "aac/error.h"

// Little-endian scalar helpers shared by the GTFM and TENS containers.
namespace aac::binio {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

template <typename V>
void put(std::ostream& out, V value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V get(std::istream& in, const char* what) {
  V value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(V));
  if (!in) throw FormatError(std::string("truncated input while reading ") + what);
  return value;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic);
}

}  // namespace aac::binio
