#pragma once

// Named parameter storage and its on-disk form: a binary tensor file plus a
// JSON manifest. The binary layout is explicit little-endian regardless of
// host: magic "NFCK", u32 version, u32 record count, then per record a
// u32-length name, u32 rank, u32 dims, and raw f64 payload. Round-trips are
// bit-exact, including negative zero and denormals.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "nasforge/tensor.hpp"

namespace nasforge {

class ParamSet {
 public:
  Tensor& emplace(const std::string& name, Tensor t) {
    if (index_.count(name)) throw std::invalid_argument("paramset: duplicate name " + name);
    index_[name] = order_.size();
    order_.push_back(name);
    tensors_.push_back(std::move(t));
    return tensors_.back();
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("paramset: missing name " + name);
    return tensors_[it->second];
  }
  const Tensor& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("paramset: missing name " + name);
    return tensors_[it->second];
  }

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  std::int64_t total_scalars() const {
    std::int64_t n = 0;
    for (const Tensor& t : tensors_) n += t.numel();
    return n;
  }

 private:
  std::vector<std::string> order_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t x) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return x;
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &u, 8);
  return d;
}

}  // namespace detail

inline void save_params(const ParamSet& params, const std::string& bin_path,
                        const std::string& manifest_path,
                        const std::map<std::string, std::string>& meta = {}) {
  std::ofstream os(bin_path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + bin_path);
  os.write("NFCK", 4);
  detail::put_u32(os, 1);
  detail::put_u32(os, static_cast<std::uint32_t>(params.size()));
  nlohmann::json jt = nlohmann::json::array();
  for (const std::string& name : params.names()) {
    const Tensor& t = params.at(name);
    detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) detail::put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : t.v) detail::put_f64(os, v);
    jt.push_back({{"name", name}, {"shape", t.shape}});
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + bin_path);
  os.close();

  nlohmann::json j;
  j["version"] = "v1";
  j["format"] = "f64le";
  j["tensors"] = jt;
  nlohmann::json jm = nlohmann::json::object();
  for (const auto& [k, v] : meta) jm[k] = v;
  j["meta"] = jm;
  std::ofstream ms(manifest_path);
  if (!ms) throw std::runtime_error("checkpoint: cannot open " + manifest_path);
  ms << j.dump(2) << "\n";
}

inline ParamSet load_params(const std::string& bin_path) {
  std::ifstream is(bin_path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + bin_path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NFCK", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + bin_path);
  }
  const std::uint32_t version = detail::get_u32(is);
  if (version != 1) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = detail::get_u32(is);
  ParamSet out;
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint32_t name_len = detail::get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    const std::uint32_t rank = detail::get_u32(is);
    std::vector<int> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(detail::get_u32(is));
    Tensor t(shape);
    for (double& v : t.v) v = detail::get_f64(is);
    out.emplace(name, std::move(t));
  }
  return out;
}

inline std::map<std::string, std::string> load_manifest_meta(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + manifest_path);
  nlohmann::json j;
  is >> j;
  if (!j.contains("version") || j["version"] != "v1") {
    throw std::runtime_error("checkpoint: manifest version mismatch");
  }
  std::map<std::string, std::string> meta;
  if (j.contains("meta")) {
    for (const auto& [k, v] : j["meta"].items()) meta[k] = v.get<std::string>();
  }
  return meta;
}

}  // namespace nasforge
