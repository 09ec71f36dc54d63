// src/checkpoint.cpp
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

#include "aac/checkpoint.h"

#include <fstream>
#include <map>

#include "aac/binary_io.h"

namespace aac {

void write_checkpoint(std::ostream& out, const NamedTensors<float>& tensors) {
  out.write("TENS", 4);
  binio::put<std::uint32_t>(out, kCheckpointVersion);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw FormatError("failed writing checkpoint");
}

NamedTensors<float> read_checkpoint(std::istream& in) {
  binio::expect_magic(in, "TENS");
  const auto version = binio::get<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = binio::get<std::uint32_t>(in, "tensor count");
  NamedTensors<float> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = binio::get<std::uint32_t>(in, "name length");
    if (len > (1u << 16)) throw FormatError("implausible tensor name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rank = binio::get<std::uint32_t>(in, "rank");
    if (rank == 0 || rank > 8) throw FormatError("bad rank for tensor " + name);
    Shape shape(rank);
    for (auto& d : shape) d = binio::get<std::uint32_t>(in, "dimension");
    std::vector<float> values(shape_numel(shape));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!in) throw FormatError("truncated data for tensor " + name);
    tensors.push_back({std::move(name), Tensor<float>::from(std::move(shape), std::move(values))});
  }
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const NamedTensors<float>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, tensors);
}

NamedTensors<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void assign_by_name(const NamedTensors<float>& from, NamedTensors<float>& into) {
  std::map<std::string, const Tensor<float>*> index;
  for (const auto& nt : from) index[nt.name] = &nt.tensor;
  for (auto& nt : into) {
    auto it = index.find(nt.name);
    if (it == index.end()) throw FormatError("checkpoint lacks tensor " + nt.name);
    if (it->second->shape() != nt.tensor.shape())
      throw FormatError("shape mismatch for " + nt.name + ": " + shape_str(it->second->shape()) +
                        " vs " + shape_str(nt.tensor.shape()));
    auto dst = nt.tensor.data();
    auto src = it->second->data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace aac
