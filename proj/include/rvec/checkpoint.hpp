// rvec/checkpoint.hpp

// Copyright 2026  The rvec Authors

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

#ifndef RVEC_CHECKPOINT_HPP_
#define RVEC_CHECKPOINT_HPP_

#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "rvec/common.hpp"
#include "rvec/audio.hpp"  // little-endian helpers

namespace rvec {

/// One named f32 tensor inside a weight checkpoint.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

/// Weight container file.
/// Layout: magic "RVWT", u32 spec code, u32 tensor count, then per tensor
/// u16 name length, name bytes, u8 rank, rank * u32 dims, f32 payload
/// (little-endian throughout).
struct TensorFile {
  std::uint32_t spec_code = 0;
  std::vector<NamedTensor> tensors;

  const NamedTensor& get(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t;
    fail("checkpoint: missing tensor \"", name, "\"");
  }
};

inline void write_tensor_file(const std::string& path, const TensorFile& tf) {
  std::ofstream os(path, std::ios::binary);
  RVEC_CHECK(os.good(), "write_tensor_file: cannot open ", path);
  os.write("RVWT", 4);
  detail::write_u32le(os, tf.spec_code);
  detail::write_u32le(os, static_cast<std::uint32_t>(tf.tensors.size()));
  for (const auto& t : tf.tensors) {
    RVEC_CHECK(t.name.size() <= 0xffff, "write_tensor_file: tensor name too long");
    RVEC_CHECK(t.dims.size() <= 0xff, "write_tensor_file: tensor rank too large");
    RVEC_CHECK(t.numel() == t.data.size(), "write_tensor_file: dims/payload mismatch for \"",
               t.name, "\"");
    detail::write_u16le(os, static_cast<std::uint16_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    unsigned char rank = static_cast<unsigned char>(t.dims.size());
    os.write(reinterpret_cast<const char*>(&rank), 1);
    for (auto d : t.dims) detail::write_u32le(os, d);
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  RVEC_CHECK(os.good(), "write_tensor_file: write failed: ", path);
}

inline TensorFile read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  RVEC_CHECK(is.good(), "read_tensor_file: cannot open ", path);
  char magic[4];
  is.read(magic, 4);
  RVEC_CHECK(is.good() && std::strncmp(magic, "RVWT", 4) == 0,
             "read_tensor_file: bad magic in ", path);
  TensorFile tf;
  tf.spec_code = detail::read_u32le(is);
  const std::uint32_t count = detail::read_u32le(is);
  RVEC_CHECK(is.good(), "read_tensor_file: truncated header in ", path);
  tf.tensors.resize(count);
  for (auto& t : tf.tensors) {
    std::uint16_t name_len = detail::read_u16le(is);
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    unsigned char rank = 0;
    is.read(reinterpret_cast<char*>(&rank), 1);
    RVEC_CHECK(is.good(), "read_tensor_file: truncated tensor header in ", path);
    t.dims.resize(rank);
    for (auto& d : t.dims) d = detail::read_u32le(is);
    t.data.resize(t.numel());
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    RVEC_CHECK(is.gcount() == static_cast<std::streamsize>(t.data.size() * sizeof(float)),
               "read_tensor_file: truncated payload for \"", t.name, "\" in ", path);
  }
  return tf;
}

}  // namespace rvec

#endif  // RVEC_CHECKPOINT_HPP_
