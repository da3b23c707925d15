#pragma once

#include <map>
#include <string>

#include "core/nn.h"
#include "core/tensor.h"

namespace gsr {

// Flat binary container of named double tensors.
// Layout: magic, u64 count, then per entry: u32 name_len, name,
// u32 ndim, i64 dims..., raw little-endian doubles.
void save_tensors(const std::string& path, const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> load_tensors(const std::string& path);

void save_params(const std::string& path, const ParamStore& ps);
// Copies stored values into existing parameters; shapes must match exactly.
void load_params(const std::string& path, ParamStore& ps);

}  // namespace gsr
