#include "kebio/cli/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kebio::inline KEBIO_PRECISION_NS {

namespace {

constexpr std::string_view kMagic = "KEBIOBIN";
static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_str32(std::string& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::uint64_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw DataError(origin_ + ": truncated file");
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::string* Container::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& Container::require_meta(std::string_view key) const {
  if (const auto* v = meta(key)) return *v;
  throw DataError("container is missing metadata entry '" + std::string(key) + "'");
}

const Tensor* Container::tensor(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

std::string encode_container(const Container& c) {
  std::string out(kMagic);
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.kind));
  put<std::uint64_t>(out, c.config_digest);
  put<std::uint64_t>(out, c.kb_digest);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.metadata.size()));
  for (const auto& [k, v] : c.metadata) {
    put_str32(out, k);
    put<std::uint64_t>(out, v.size());
    out.append(v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    put_str32(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (real v : t.data()) put<float>(out, static_cast<float>(v));
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

Container decode_container(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError(origin + ": not a kebio container (bad magic)");
  }
  if (bytes.size() < kMagic.size() + 8 + 8) throw DataError(origin + ": truncated file");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  Reader r(body, origin);
  r.str(kMagic.size());
  const auto version = r.get<std::uint32_t>();
  if (version != kContainerVersion) {
    throw DataError(origin + ": format version " + std::to_string(version) +
                    " is not supported (expected " + std::to_string(kContainerVersion) + ")");
  }
  if (fnv1a64(body) != stored) throw DataError(origin + ": checksum mismatch (file is corrupted)");
  Container c;
  c.kind = static_cast<ContainerKind>(r.get<std::uint32_t>());
  c.config_digest = r.get<std::uint64_t>();
  c.kb_digest = r.get<std::uint64_t>();
  const auto n_meta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str(r.get<std::uint32_t>());
    std::string v = r.str(r.get<std::uint64_t>());
    c.metadata.emplace_back(std::move(k), std::move(v));
  }
  const auto n_tensors = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw DataError(origin + ": tensor '" + name + "' has bad rank");
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(r.get<std::uint64_t>());
      count *= shape.back();
    }
    r.need(count * sizeof(float));
    std::vector<real> data(count);
    for (auto& v : data) v = static_cast<real>(r.get<float>());
    c.tensors.push_back({std::move(name), Tensor::from_data(std::move(shape), std::move(data))});
  }
  if (r.pos() != body.size()) throw DataError(origin + ": trailing bytes after tensors");
  return c;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void write_container(const std::filesystem::path& path, const Container& c) {
  write_file_atomic(path, encode_container(c));
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_container(ss.str(), path.string());
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
