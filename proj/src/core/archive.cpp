#include "core/archive.h"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "core/check.h"

namespace gsr {

namespace {
constexpr char kMagic[8] = {'G', 'S', 'R', 'T', 'N', 'S', 'R', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_tensors(const std::string& path, const std::map<std::string, Tensor>& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  GSR_CHECK(f.good(), "cannot open " << path << " for writing");
  f.write(kMagic, sizeof(kMagic));
  write_pod<uint64_t>(f, tensors.size());
  for (const auto& [name, t] : tensors) {
    write_pod<uint32_t>(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(f, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) write_pod<int64_t>(f, d);
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  GSR_CHECK(f.good(), "write failure on " << path);
}

std::map<std::string, Tensor> load_tensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  GSR_CHECK(f.good(), "cannot open " << path);
  char magic[8];
  f.read(magic, 8);
  GSR_CHECK(f.good() && std::memcmp(magic, kMagic, 8) == 0, "bad archive magic in " << path);
  const uint64_t count = read_pod<uint64_t>(f);
  std::map<std::string, Tensor> out;
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t nlen = read_pod<uint32_t>(f);
    std::string name(nlen, '\0');
    f.read(name.data(), nlen);
    const uint32_t ndim = read_pod<uint32_t>(f);
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = read_pod<int64_t>(f);
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
    GSR_CHECK(f.good(), "truncated archive " << path);
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

void save_params(const std::string& path, const ParamStore& ps) {
  std::map<std::string, Tensor> m;
  for (const auto& [name, v] : ps.entries()) m.emplace(name, v.val());
  save_tensors(path, m);
}

void load_params(const std::string& path, ParamStore& ps) {
  auto m = load_tensors(path);
  for (const auto& [name, v] : ps.entries()) {
    auto it = m.find(name);
    GSR_CHECK(it != m.end(), "checkpoint missing parameter " << name);
    GSR_CHECK(it->second.same_shape(v.val()),
              "checkpoint shape mismatch for " << name << ": " << it->second.str()
                                               << " vs " << v.val().str());
    const_cast<Var&>(v).mutable_val() = it->second;
  }
}

}  // namespace gsr
