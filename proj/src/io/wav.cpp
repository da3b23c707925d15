#include "io/wav.h"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "core/check.h"

namespace gsr {

namespace {

struct RiffHeader {
  uint16_t format = 0;       // 1 = PCM, 3 = IEEE float
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits = 0;
  uint32_t data_size = 0;
  std::streamoff data_offset = 0;
};

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

RiffHeader parse_header(std::ifstream& f, const std::string& path) {
  char tag[4];
  f.read(tag, 4);
  GSR_CHECK(f.good() && std::memcmp(tag, "RIFF", 4) == 0, path << ": not a RIFF file");
  read_pod<uint32_t>(f);
  f.read(tag, 4);
  GSR_CHECK(std::memcmp(tag, "WAVE", 4) == 0, path << ": not a WAVE file");

  RiffHeader h;
  bool have_fmt = false;
  while (f.read(tag, 4)) {
    uint32_t chunk = read_pod<uint32_t>(f);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      h.format = read_pod<uint16_t>(f);
      h.channels = read_pod<uint16_t>(f);
      h.sample_rate = read_pod<uint32_t>(f);
      read_pod<uint32_t>(f);  // byte rate
      read_pod<uint16_t>(f);  // block align
      h.bits = read_pod<uint16_t>(f);
      if (chunk > 16) f.seekg(chunk - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      h.data_size = chunk;
      h.data_offset = f.tellg();
      break;
    } else {
      f.seekg(chunk + (chunk & 1), std::ios::cur);
    }
  }
  GSR_CHECK(have_fmt && h.data_offset > 0, path << ": missing fmt or data chunk");
  return h;
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  GSR_CHECK(f.good(), "cannot open " << path);
  RiffHeader h = parse_header(f, path);
  GSR_CHECK(h.channels == 1, path << ": expected mono, got " << h.channels << " channels");
  GSR_CHECK(h.format == 1 || h.format == 3, path << ": unsupported WAV format " << h.format);
  GSR_CHECK((h.format == 1 && h.bits == 16) || (h.format == 3 && h.bits == 32),
            path << ": unsupported sample width " << h.bits);

  Waveform w;
  w.sample_rate = static_cast<int>(h.sample_rate);
  f.seekg(h.data_offset);
  if (h.format == 1) {
    const size_t n = h.data_size / 2;
    std::vector<int16_t> raw(n);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 2));
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) w.samples[i] = static_cast<double>(raw[i]) / 32768.0;
  } else {
    const size_t n = h.data_size / 4;
    std::vector<float> raw(n);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 4));
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) w.samples[i] = static_cast<double>(raw[i]);
  }
  GSR_CHECK(f.good(), path << ": truncated data chunk");
  return w;
}

void write_wav(const std::string& path, const Waveform& w, bool float32) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  GSR_CHECK(f.good(), "cannot open " << path << " for writing");
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint16_t bits = float32 ? 32 : 16;
  const uint32_t data_size = n * (bits / 8);
  const uint32_t sr = static_cast<uint32_t>(w.sample_rate);

  f.write("RIFF", 4);
  write_pod<uint32_t>(f, 36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_pod<uint32_t>(f, 16);
  write_pod<uint16_t>(f, float32 ? 3 : 1);
  write_pod<uint16_t>(f, 1);
  write_pod<uint32_t>(f, sr);
  write_pod<uint32_t>(f, sr * (bits / 8u));
  write_pod<uint16_t>(f, static_cast<uint16_t>(bits / 8));
  write_pod<uint16_t>(f, bits);
  f.write("data", 4);
  write_pod<uint32_t>(f, data_size);
  if (float32) {
    for (double s : w.samples) write_pod<float>(f, static_cast<float>(s));
  } else {
    for (double s : w.samples) {
      long v = std::lrint(std::clamp(s, -1.0, 1.0) * 32768.0);
      write_pod<int16_t>(f, static_cast<int16_t>(std::clamp<long>(v, -32768, 32767)));
    }
  }
  GSR_CHECK(f.good(), "write failure on " << path);
}

}  // namespace gsr
