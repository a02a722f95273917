#include "pairpred/diffcore/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pairpred/errors.hpp"

namespace pairpred::diff {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'A', 'I', 'R', 'P', 'R', 'E', 'D'};

template <typename T>
void put(std::string& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

void put_string(std::string& buf, const std::string& s) {
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ValidationError("checkpoint truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& metadata, const ParameterStore& params) {
  std::string buf(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, kCheckpointVersion);
  put_string(buf, metadata);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& e : params.entries()) {
    put_string(buf, e.name);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.tensor.rank()));
    for (auto d : e.tensor.shape()) put<std::uint64_t>(buf, d);
    const auto v = e.tensor.values();
    buf.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  // Write-then-rename so an interrupted save never clobbers the last good file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  char magic[8];
  r.get_raw(magic, sizeof(magic));
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw ValidationError(path.string() + " is not a checkpoint file");
  }
  CheckpointData data;
  data.version = r.get<std::uint32_t>();
  if (data.version != kCheckpointVersion) {
    throw ValidationError("checkpoint version " + std::to_string(data.version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  data.metadata = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) a.shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
    a.values.resize(numel(a.shape));
    r.get_raw(a.values.data(), a.values.size() * sizeof(double));
    data.arrays.push_back(std::move(a));
  }
  if (!r.at_end()) throw ValidationError("trailing bytes in checkpoint " + path.string());
  return data;
}

void restore_parameters(ParameterStore& params, const CheckpointData& data) {
  auto& entries = params.entries();
  if (entries.size() != data.arrays.size()) {
    throw ValidationError("checkpoint holds " + std::to_string(data.arrays.size()) + " parameters, model has " +
                          std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& a = data.arrays[i];
    auto& e = entries[i];
    if (a.name != e.name || a.shape != e.tensor.shape()) {
      throw ValidationError("checkpoint parameter " + a.name + " " + to_string(a.shape) + " does not match model " +
                            e.name + " " + to_string(e.tensor.shape()));
    }
    std::copy(a.values.begin(), a.values.end(), e.tensor.mutable_values().begin());
  }
}

}  // namespace pairpred::diff
