#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "magcnn/common.hpp"
#include "magcnn/grid.hpp"
#include "magcnn/model.hpp"

namespace magcnn {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  for (int shift = 0; shift < 64; shift += 8) {
    out.push_back(static_cast<char>((bits >> shift) & 0xff));
  }
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  bool at_end() const { return pos_ == data_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int shift = 0; shift < 32; shift += 8) {
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_++]))
           << shift;
    }
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int shift = 0; shift < 64; shift += 8) {
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(data_[pos_++]))
              << shift;
    }
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }

  std::string bytes(std::size_t count) {
    need(count);
    std::string out = data_.substr(pos_, count);
    pos_ += count;
    return out;
  }

 private:
  void need(std::size_t count) {
    if (pos_ + count > data_.size()) {
      throw DataError(source_ + ": truncated file");
    }
  }

  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

inline void spit(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Grid cache: magic "MGRD", version, then per graph label/dims/values.
// Little-endian throughout, doubles in row-major (row, column, channel).
// ---------------------------------------------------------------------------

struct CachedGrid {
  std::uint32_t label = 0;
  GridTensor grid;
};

inline void write_grid_cache(const std::filesystem::path& path,
                             const std::vector<CachedGrid>& grids) {
  std::string out;
  out += "MGRD";
  detail::put_u32(out, 1);
  for (const CachedGrid& cg : grids) {
    detail::put_u32(out, cg.label);
    detail::put_u32(out, static_cast<std::uint32_t>(cg.grid.rows));
    detail::put_u32(out, static_cast<std::uint32_t>(cg.grid.cols));
    detail::put_u32(out, static_cast<std::uint32_t>(cg.grid.channels));
    for (double v : cg.grid.values) detail::put_f64(out, v);
  }
  detail::spit(path, out);
}

inline std::vector<CachedGrid> read_grid_cache(
    const std::filesystem::path& path) {
  detail::ByteReader reader(detail::slurp(path), path.string());
  if (reader.bytes(4) != "MGRD") {
    throw DataError(path.string() + ": bad magic, expected MGRD");
  }
  if (reader.u32() != 1) {
    throw DataError(path.string() + ": unsupported grid cache version");
  }
  std::vector<CachedGrid> out;
  while (!reader.at_end()) {
    CachedGrid cg;
    cg.label = reader.u32();
    const std::uint32_t rows = reader.u32();
    const std::uint32_t cols = reader.u32();
    const std::uint32_t channels = reader.u32();
    cg.grid = GridTensor(static_cast<int>(rows), static_cast<int>(cols),
                         static_cast<int>(channels));
    for (double& v : cg.grid.values) v = reader.f64();
    out.push_back(std::move(cg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic "MPRM", version, then a named tensor table
// (name length + name bytes + rank + dims + values).
// ---------------------------------------------------------------------------

inline void write_checkpoint(const std::filesystem::path& path,
                             const ModelParams& params) {
  std::string out;
  out += "MPRM";
  detail::put_u32(out, 1);
  for (const auto& nt : params.named_tensors()) {
    detail::put_u32(out, static_cast<std::uint32_t>(nt.name.size()));
    out += nt.name;
    detail::put_u32(out, static_cast<std::uint32_t>(nt.tensor->rank()));
    for (std::size_t d : nt.tensor->dims) {
      detail::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : nt.tensor->values) detail::put_f64(out, v);
  }
  detail::spit(path, out);
}

inline std::vector<std::pair<std::string, Tensor>> read_checkpoint_table(
    const std::filesystem::path& path) {
  detail::ByteReader reader(detail::slurp(path), path.string());
  if (reader.bytes(4) != "MPRM") {
    throw DataError(path.string() + ": bad magic, expected MPRM");
  }
  if (reader.u32() != 1) {
    throw DataError(path.string() + ": unsupported checkpoint version");
  }
  std::vector<std::pair<std::string, Tensor>> out;
  while (!reader.at_end()) {
    const std::uint32_t name_len = reader.u32();
    std::string name = reader.bytes(name_len);
    const std::uint32_t rank = reader.u32();
    std::vector<std::size_t> dims;
    for (std::uint32_t r = 0; r < rank; ++r) dims.push_back(reader.u32());
    Tensor t(dims);
    for (double& v : t.values) v = reader.f64();
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

// Fills an initialized parameter struct from a checkpoint; every tensor must
// be present with matching shape.
inline void load_checkpoint_into(const std::filesystem::path& path,
                                 ModelParams& params) {
  auto table = read_checkpoint_table(path);
  std::map<std::string, Tensor*> by_name;
  for (auto& [name, tensor] : table) by_name[name] = &tensor;
  for (auto& nt : params.named_tensors()) {
    auto it = by_name.find(nt.name);
    if (it == by_name.end()) {
      throw DataError(path.string() + ": missing tensor '" + nt.name + "'");
    }
    if (it->second->dims != nt.tensor->dims) {
      throw DataError(path.string() + ": tensor '" + nt.name +
                      "' has shape " + shape_string(*it->second) +
                      ", expected " + shape_string(*nt.tensor));
    }
    *nt.tensor = std::move(*it->second);
  }
}

// ---------------------------------------------------------------------------
// Small deterministic JSON emitter: keys pre-sorted by the callers, floats
// fixed to six decimals, nested values on a single line.
// ---------------------------------------------------------------------------

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x",
                        static_cast<unsigned>(static_cast<unsigned char>(ch)));
          out += buf;
        } else {
          out.push_back(ch);
        }
    }
  }
  return out;
}

inline std::string json_number_array(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_fixed6(values[i]);
  }
  out += "]";
  return out;
}

inline std::string json_string_map(
    const std::map<std::string, std::string>& entries) {
  std::string out = "{";
  bool first = true;
  for (const auto& [key, value] : entries) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + json_escape(key) + "\": \"" + json_escape(value) + "\"";
  }
  out += "}";
  return out;
}

}  // namespace magcnn
