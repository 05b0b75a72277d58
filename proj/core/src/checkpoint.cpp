#include "manger/checkpoint.hpp"

#include <bit>
#include <boost/crc.hpp>
#include <cstring>
#include <fstream>
#include <iterator>

namespace manger {

namespace {

constexpr char kMagic[4] = {'M', 'N', 'G', 'R'};
constexpr std::uint8_t kDtypeF64 = 1;

template <class U>
void put(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  template <class U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CheckpointFormatError("checkpoint ends inside an entry");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t crc64(std::span<const std::uint8_t> bytes) {
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& entries) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const NamedTensor& e : entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.push_back(kDtypeF64);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) put<std::uint64_t>(out, d);
    for (double x : e.value.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  put<std::uint64_t>(out, crc64(out));
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) throw MagicError("not a checkpoint (bad magic)");
  if (bytes.size() < 4 + 4 + 4 + 8) throw CrcError("checkpoint truncated");
  const auto payload = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8));
  if (tail.get<std::uint64_t>() != crc64(payload)) throw CrcError("checkpoint CRC mismatch");

  Reader r(payload.subspan(4));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointFormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedTensor> entries;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor e;
    e.name = r.str(r.get<std::uint32_t>());
    if (r.get<std::uint8_t>() != kDtypeF64) throw CheckpointFormatError("unsupported dtype for " + e.name);
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw CheckpointFormatError("bad rank for " + e.name);
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      d = r.get<std::uint64_t>();
      if (d == 0 || d > payload.size()) throw CheckpointFormatError("bad dimension for " + e.name);
      total *= d;
      if (total > payload.size()) throw CheckpointFormatError("tensor too large for file: " + e.name);
    }
    std::vector<double> data(total);
    for (auto& x : data) x = std::bit_cast<double>(r.get<std::uint64_t>());
    e.value = Tensor(std::move(shape), std::move(data));
    entries.push_back(std::move(e));
  }
  if (!r.done()) throw CheckpointFormatError("trailing bytes after last entry");
  return entries;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void save_checkpoint(const std::vector<NamedTensor>& entries, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(entries));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void append_store(std::vector<NamedTensor>& out, std::string_view prefix, const ParamStore& store) {
  for (const Param& p : store) out.push_back({std::string(prefix) + p.name, p.value});
}

const NamedTensor* find_entry(const std::vector<NamedTensor>& entries, std::string_view name) {
  for (const NamedTensor& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

void restore_store(const std::vector<NamedTensor>& entries, std::string_view prefix, ParamStore& store) {
  std::vector<const NamedTensor*> src;
  for (const Param& p : store) {
    const std::string name = std::string(prefix) + p.name;
    const NamedTensor* e = find_entry(entries, name);
    if (!e) throw ShapeError("checkpoint has no tensor " + name);
    if (e->value.shape() != p.value.shape())
      throw ShapeError("shape mismatch for " + name + ": checkpoint " + shape_string(e->value.shape()) +
                       ", network " + shape_string(p.value.shape()));
    src.push_back(e);
  }
  for (std::size_t i = 0; i < store.size(); ++i) store[i].value = src[i]->value;
}

}  // namespace manger
