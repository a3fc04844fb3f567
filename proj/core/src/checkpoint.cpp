#include "panolayout/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace panolayout {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'N', 'O', 'C', 'K', 'P', '1'};

template <typename T>
void write_le(std::ofstream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  std::uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_doubles_le(std::ofstream& out, const std::vector<double>& v) {
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    write_le<std::uint64_t>(out, bits);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const nn::Tensor*>>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : entries) {
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor->ndim()));
    for (int d : tensor->shape) write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    write_le<std::uint64_t>(out, offset);
    offset += tensor->data.size() * sizeof(double);
  }
  write_le<std::uint64_t>(out, offset);
  for (const auto& [name, tensor] : entries) write_doubles_le(out, tensor->data);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

std::map<std::string, nn::Tensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  const std::uint32_t n = read_le<std::uint32_t>(in);
  struct Pending {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset;
    size_t numel;
  };
  std::vector<Pending> pend(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint16_t name_len = read_le<std::uint16_t>(in);
    pend[i].name.resize(name_len);
    in.read(pend[i].name.data(), name_len);
    const std::uint8_t ndim = read_le<std::uint8_t>(in);
    pend[i].numel = 1;
    for (int d = 0; d < ndim; ++d) {
      const std::uint32_t dim = read_le<std::uint32_t>(in);
      pend[i].shape.push_back(static_cast<int>(dim));
      pend[i].numel *= dim;
    }
    pend[i].offset = read_le<std::uint64_t>(in);
  }
  const std::uint64_t payload = read_le<std::uint64_t>(in);
  const std::streampos payload_start = in.tellg();

  std::map<std::string, nn::Tensor> out;
  for (const Pending& p : pend) {
    if (p.offset + p.numel * sizeof(double) > payload) {
      throw std::runtime_error("checkpoint: entry '" + p.name + "' outside payload");
    }
    in.seekg(payload_start + static_cast<std::streamoff>(p.offset));
    std::vector<double> data(p.numel);
    for (size_t i = 0; i < p.numel; ++i) {
      const std::uint64_t bits = read_le<std::uint64_t>(in);
      double d;
      std::memcpy(&d, &bits, sizeof d);
      data[i] = d;
    }
    out.emplace(p.name, nn::Tensor::from(p.shape, std::move(data)));
  }
  return out;
}

}  // namespace panolayout
