#include "drc/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace drc::nn {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'C', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }

  template <typename Int>
  void integer(Int v) {
    using U = std::make_unsigned_t<Int>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }

  void string(const std::string& s) {
    integer(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void tensor(const Tensor<float>& t, bool with_shape) {
    if (with_shape) {
      integer(static_cast<std::uint32_t>(t.rank()));
      for (Index d : t.shape().dims()) integer(static_cast<std::uint32_t>(d));
    }
    for (Index i = 0; i < t.size(); ++i) integer(std::bit_cast<std::uint32_t>(t[i]));
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }

  template <typename Int>
  Int integer() {
    using U = std::make_unsigned_t<Int>;
    need(sizeof(U));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      u |= static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<Int>(u);
  }

  std::string string() {
    const auto n = integer<std::uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  Shape shape() {
    const auto rank = integer<std::uint32_t>();
    if (rank > 4) throw CheckpointError("checkpoint: tensor rank " + std::to_string(rank) + " exceeds 4");
    std::vector<Index> dims(rank);
    for (auto& d : dims) d = integer<std::uint32_t>();
    return Shape(std::move(dims));
  }

  Tensor<float> tensor(const Shape& shape) {
    Tensor<float> t(shape);
    for (Index i = 0; i < t.size(); ++i) t[i] = std::bit_cast<float>(integer<std::uint32_t>());
    return t;
  }

  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw CheckpointError("checkpoint: truncated at byte " + std::to_string(pos_));
  }

  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParameterSet<float>& params, const AdamState<float>* adam) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.integer(kVersion);
  w.integer(static_cast<std::uint32_t>(params.size()));
  for (const auto& [path, e] : params.entries()) {
    w.string(path);
    w.integer(static_cast<std::uint8_t>(e.trainable ? 1 : 0));
    w.tensor(e.value, true);
  }
  w.integer(static_cast<std::uint8_t>(adam ? 1 : 0));
  if (adam) {
    w.integer(static_cast<std::int64_t>(adam->step));
    w.integer(static_cast<std::uint32_t>(adam->first_moment.size()));
    for (const auto& [path, m] : adam->first_moment) {
      auto it = adam->second_moment.find(path);
      if (it == adam->second_moment.end()) throw CheckpointError("checkpoint: missing second moment for " + path);
      w.string(path);
      w.tensor(m, true);
      w.tensor(it->second, false);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw CheckpointError("checkpoint: bad magic");
  const auto version = r.integer<std::uint32_t>();
  if (version != kVersion) throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ck;
  const auto count = r.integer<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string path = r.string();
    const bool trainable = r.integer<std::uint8_t>() != 0;
    const Shape shape = r.shape();
    ck.params.add(path, r.tensor(shape), trainable);
  }
  if (r.integer<std::uint8_t>() != 0) {
    AdamState<float> adam;
    adam.step = r.integer<std::int64_t>();
    const auto moments = r.integer<std::uint32_t>();
    for (std::uint32_t i = 0; i < moments; ++i) {
      std::string path = r.string();
      const Shape shape = r.shape();
      adam.first_moment.emplace(path, r.tensor(shape));
      adam.second_moment.emplace(path, r.tensor(shape));
    }
    ck.adam = std::move(adam);
  }
  if (!r.done()) throw CheckpointError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& file, const ParameterSet<float>& params,
                     const AdamState<float>* adam) {
  const std::string bytes = encode_checkpoint(params, adam);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + file.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace drc::nn
