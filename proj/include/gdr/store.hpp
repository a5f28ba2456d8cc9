// Copyright 2026 The GDR Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gdr/errors.hpp"
#include "gdr/synth.hpp"
#include "gdr/tensor_io.hpp"

namespace gdr {

/// Dataset-level metadata kept in the store header.
struct DatasetInfo {
  std::string preset = "desk";
  bool video = false;
  bool single_object = false;
  bool has_boxes = true;
  int num_slots = 5;
  int resolution = 64;
  int num_attributes = 2;

  friend bool operator==(const DatasetInfo&, const DatasetInfo&) = default;
};

struct Dataset {
  DatasetInfo info;
  std::vector<SceneRecord> records;

  std::size_t size() const noexcept { return records.size(); }
};

/// Packed record store.
///
/// File layout (little-endian):
///   "GDRSTORE" | u32 version | string metadata (key=value lines)
///   | records... | index | u64 index_offset
/// A record is a zlib-compressed package; the index lists
/// (key, byte offset, compressed length, raw length) per record.
///
/// A package is a field table followed by the payload:
///   u32 field_count, per field: string name | u8 dtype | u8 ndim |
///   i64 dims[ndim] | u64 byte_offset | u64 byte_length
/// with dtype 0 = uint8, 1 = float32, 2 = int32. Offsets are relative to
/// the payload start.
namespace store {

inline constexpr char kMagic[8] = {'G', 'D', 'R', 'S', 'T', 'O', 'R', 'E'};
inline constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint8_t { kUInt8 = 0, kFloat32 = 1, kInt32 = 2 };

struct Field {
  std::string name;
  DType dtype;
  std::vector<std::int64_t> dims;
  std::vector<char> bytes;
};

inline std::vector<char> encode_package(const std::vector<Field>& fields) {
  io::ByteWriter w;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(fields.size()));
  std::uint64_t offset = 0;
  for (const auto& f : fields) {
    w.put_string(f.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(f.dtype));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(f.dims.size()));
    for (auto d : f.dims) w.put<std::int64_t>(d);
    w.put<std::uint64_t>(offset);
    w.put<std::uint64_t>(f.bytes.size());
    offset += f.bytes.size();
  }
  for (const auto& f : fields) w.put_bytes(f.bytes.data(), f.bytes.size());
  return std::move(w.bytes());
}

inline std::map<std::string, Field> decode_package(const std::vector<char>& raw) {
  io::ByteReader r(raw);
  const auto count = r.get<std::uint32_t>();
  std::vector<std::pair<Field, std::pair<std::uint64_t, std::uint64_t>>> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    Field f;
    f.name = r.get_string();
    f.dtype = static_cast<DType>(r.get<std::uint8_t>());
    f.dims.resize(r.get<std::uint8_t>());
    for (auto& d : f.dims) d = r.get<std::int64_t>();
    const auto off = r.get<std::uint64_t>();
    const auto len = r.get<std::uint64_t>();
    table.push_back({std::move(f), {off, len}});
  }
  const auto payload = r.position();
  std::map<std::string, Field> out;
  for (auto& [f, span] : table) {
    if (payload + span.first + span.second > raw.size()) throw IoError("store: field exceeds package");
    f.bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(payload + span.first),
                   raw.begin() + static_cast<std::ptrdiff_t>(payload + span.first + span.second));
    out.emplace(f.name, std::move(f));
  }
  return out;
}

template <typename T>
std::vector<char> as_bytes(const std::vector<T>& v) {
  std::vector<char> b(v.size() * sizeof(T));
  if (!v.empty()) std::memcpy(b.data(), v.data(), b.size());
  return b;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<char>& b) {
  std::vector<T> v(b.size() / sizeof(T));
  if (!v.empty()) std::memcpy(v.data(), b.data(), v.size() * sizeof(T));
  return v;
}

inline std::vector<char> package_record(const SceneRecord& rec) {
  std::vector<std::int32_t> labels;
  const std::int64_t attrs = rec.labels.empty() ? 0 : static_cast<std::int64_t>(rec.labels[0].attributes().size());
  for (const auto& l : rec.labels) {
    for (int a : l.attributes()) labels.push_back(a);
  }
  std::vector<Field> fields;
  fields.push_back({"image", DType::kUInt8, {rec.frames, rec.height, rec.width, 3}, as_bytes(rec.image)});
  fields.push_back({"mask", DType::kUInt8, {rec.frames, rec.height, rec.width}, as_bytes(rec.mask)});
  fields.push_back({"boxes", DType::kFloat32, {rec.frames, rec.num_objects, 4}, as_bytes(rec.boxes)});
  fields.push_back({"labels", DType::kInt32, {rec.num_objects, attrs}, as_bytes(labels)});
  return encode_package(fields);
}

inline SceneRecord unpackage_record(const std::vector<char>& raw) {
  auto fields = decode_package(raw);
  auto need = [&](const std::string& name) -> Field& {
    auto it = fields.find(name);
    if (it == fields.end()) throw IoError("store: package lacks field '" + name + "'");
    return it->second;
  };
  SceneRecord rec;
  const auto& image = need("image");
  if (image.dims.size() != 4) throw IoError("store: bad image dims");
  rec.frames = static_cast<int>(image.dims[0]);
  rec.height = static_cast<int>(image.dims[1]);
  rec.width = static_cast<int>(image.dims[2]);
  rec.image = from_bytes<std::uint8_t>(image.bytes);
  rec.mask = from_bytes<std::uint8_t>(need("mask").bytes);
  const auto& boxes = need("boxes");
  rec.num_objects = static_cast<int>(boxes.dims.at(1));
  rec.boxes = from_bytes<float>(boxes.bytes);
  const auto& labels = need("labels");
  const auto flat = from_bytes<std::int32_t>(labels.bytes);
  const auto attrs = labels.dims.at(1);
  for (int k = 0; k < rec.num_objects; ++k) {
    ObjectLabel l;
    l.color = flat[static_cast<std::size_t>(k * attrs)];
    l.shape = flat[static_cast<std::size_t>(k * attrs + 1)];
    if (attrs > 2) l.texture = flat[static_cast<std::size_t>(k * attrs + 2)];
    rec.labels.push_back(l);
  }
  return rec;
}

inline std::vector<char> compress(const std::vector<char>& raw) {
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<char> out(len);
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), Z_BEST_SPEED) != Z_OK) {
    throw IoError("store: compression failed");
  }
  out.resize(len);
  return out;
}

inline std::vector<char> decompress(const char* data, std::size_t size, std::size_t raw_size) {
  std::vector<char> out(raw_size);
  uLongf len = static_cast<uLongf>(raw_size);
  if (uncompress(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(data),
                 static_cast<uLong>(size)) != Z_OK ||
      len != raw_size) {
    throw IoError("store: corrupt record");
  }
  return out;
}

inline std::string encode_info(const DatasetInfo& i) {
  return "preset=" + i.preset + "\nvideo=" + std::to_string(i.video) + "\nsingle_object=" + std::to_string(i.single_object) +
         "\nhas_boxes=" + std::to_string(i.has_boxes) + "\nnum_slots=" + std::to_string(i.num_slots) +
         "\nresolution=" + std::to_string(i.resolution) + "\nnum_attributes=" + std::to_string(i.num_attributes) + "\n";
}

inline DatasetInfo decode_info(const std::string& text) {
  DatasetInfo info;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "preset") info.preset = v;
    else if (k == "video") info.video = v == "1";
    else if (k == "single_object") info.single_object = v == "1";
    else if (k == "has_boxes") info.has_boxes = v == "1";
    else if (k == "num_slots") info.num_slots = std::stoi(v);
    else if (k == "resolution") info.resolution = std::stoi(v);
    else if (k == "num_attributes") info.num_attributes = std::stoi(v);
  }
  return info;
}

inline std::string record_key(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08zu", i);
  return buf;
}

}  // namespace store

/// Writes `dataset` to `path`. Refuses to replace an existing non-empty
/// file or directory unless `overwrite` is set.
inline void pack_dataset(const Dataset& dataset, const std::string& path, bool overwrite = false) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) {
    const bool non_empty = fs::is_directory(path) ? !fs::is_empty(path) : fs::file_size(path) > 0;
    if (non_empty && !overwrite) throw IoError("pack_dataset: " + path + " exists and is not empty");
    if (fs::is_directory(path)) throw IoError("pack_dataset: " + path + " is a directory");
  }
  for (const auto& r : dataset.records) {
    if (r.frames != dataset.records.front().frames || r.height != dataset.records.front().height ||
        r.width != dataset.records.front().width) {
      throw ShapeError("pack_dataset: records must share frame count and resolution");
    }
  }
  io::ByteWriter w;
  w.put_bytes(store::kMagic, 8);
  w.put<std::uint32_t>(store::kVersion);
  w.put_string(store::encode_info(dataset.info));
  struct Entry {
    std::string key;
    std::uint64_t offset, comp, raw;
  };
  std::vector<Entry> index;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto raw = store::package_record(dataset.records[i]);
    const auto comp = store::compress(raw);
    index.push_back({store::record_key(i), w.bytes().size(), comp.size(), raw.size()});
    w.put_bytes(comp.data(), comp.size());
  }
  const std::uint64_t index_offset = w.bytes().size();
  w.put<std::uint64_t>(index.size());
  for (const auto& e : index) {
    w.put_string(e.key);
    w.put<std::uint64_t>(e.offset);
    w.put<std::uint64_t>(e.comp);
    w.put<std::uint64_t>(e.raw);
  }
  w.put<std::uint64_t>(index_offset);
  io::write_file(path, w.bytes());
}

/// Random-access reader over a packed store. Reads are const and safe to
/// share between threads.
class PackedStore {
 public:
  explicit PackedStore(const std::string& path) : bytes_(io::read_file(path)) {
    if (bytes_.size() < 8 + 4 + 8 || std::memcmp(bytes_.data(), store::kMagic, 8) != 0) {
      throw IoError("store: " + path + " is not a packed store");
    }
    io::ByteReader head(bytes_.data() + 8, bytes_.size() - 8);
    const auto version = head.get<std::uint32_t>();
    if (version != store::kVersion) throw IoError("store: unsupported version");
    info_ = store::decode_info(head.get_string());
    std::uint64_t index_offset;
    std::memcpy(&index_offset, bytes_.data() + bytes_.size() - 8, 8);
    if (index_offset >= bytes_.size()) throw IoError("store: bad index offset");
    io::ByteReader idx(bytes_.data() + index_offset, bytes_.size() - 8 - index_offset);
    const auto count = idx.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      Entry e;
      e.key = idx.get_string();
      e.offset = idx.get<std::uint64_t>();
      e.comp = idx.get<std::uint64_t>();
      e.raw = idx.get<std::uint64_t>();
      if (e.offset + e.comp > index_offset) throw IoError("store: record exceeds data section");
      lookup_.emplace(e.key, entries_.size());
      entries_.push_back(std::move(e));
    }
  }

  const DatasetInfo& info() const noexcept { return info_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::vector<std::string> keys() const {
    std::vector<std::string> k;
    for (const auto& e : entries_) k.push_back(e.key);
    return k;
  }

  SceneRecord get(std::size_t i) const {
    const auto& e = entries_.at(i);
    return store::unpackage_record(store::decompress(bytes_.data() + e.offset, e.comp, e.raw));
  }
  SceneRecord get(const std::string& key) const {
    auto it = lookup_.find(key);
    if (it == lookup_.end()) throw IndexError("store: no key '" + key + "'");
    return get(it->second);
  }

  Dataset load_all() const {
    Dataset d;
    d.info = info_;
    for (std::size_t i = 0; i < size(); ++i) d.records.push_back(get(i));
    return d;
  }

 private:
  struct Entry {
    std::string key;
    std::uint64_t offset = 0, comp = 0, raw = 0;
  };
  std::vector<char> bytes_;
  DatasetInfo info_;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> lookup_;
};

inline Dataset unpack_dataset(const std::string& path) { return PackedStore(path).load_all(); }

}  // namespace gdr
