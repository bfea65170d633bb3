#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "gtan/model.hpp"

// Binary checkpoint, all integers and floats little-endian:
//
//   8 bytes  magic "GTANCKPT"
//   u32      format version (1)
//   u64 x5   dim, att_dim, hidden, layers, fc_layers
//   u32      ablation bits (AblationConfig::bits)
//   u8       normalization (0 none, 1 row_l1)
//   u8       trainable word table flag
//   u64      vocabulary size
//   u64      respondent count, then per respondent: u64 length + bytes
//   u64      tensor count, then per tensor:
//              u64 name length + name bytes, u64 rows, u64 cols,
//              rows*cols f64 values row-major
//
// Tensors follow Model::slot_names order: every parameter entry, then the
// word table.
namespace gtan::checkpoint {

inline constexpr std::uint32_t kVersion = 1;

void save(std::ostream& out, const model::Model& model);
void save(const std::string& path, const model::Model& model);

// With `expected`, every dimension and tensor shape must match it; a
// mismatch names both values.
model::Model load(std::istream& in, const std::optional<model::ModelConfig>& expected = {});
model::Model load(const std::string& path,
                  const std::optional<model::ModelConfig>& expected = {});

}  // namespace gtan::checkpoint
