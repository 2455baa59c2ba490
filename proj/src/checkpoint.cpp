#include "wdimer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wdimer/config.hpp"
#include "wdimer/errors.hpp"

namespace wdimer {

namespace {

constexpr char kMagic[4] = {'T', 'W', 'D', 'C'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
  template <typename UInt>
  void uint(UInt value) {
    for (std::size_t k = 0; k < sizeof(UInt); ++k) out_.push_back(static_cast<char>((value >> (8 * k)) & 0xFF));
  }
  void real(double value) { uint(std::bit_cast<std::uint64_t>(value)); }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in, std::size_t end) : in_(in), end_(end) {}
  void bytes(void* data, std::size_t n) {
    need(n);
    std::memcpy(data, in_.data() + pos_, n);
    pos_ += n;
  }
  template <typename UInt>
  UInt uint() {
    need(sizeof(UInt));
    UInt value = 0;
    for (std::size_t k = 0; k < sizeof(UInt); ++k)
      value |= UInt(static_cast<unsigned char>(in_[pos_ + k])) << (8 * k);
    pos_ += sizeof(UInt);
    return value;
  }
  double real() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CheckpointMismatch("checkpoint is truncated");
  }
  const std::string& in_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& cp) {
  const MomentAccumulator& acc = cp.accumulator;
  if (cp.batch_ids.size() != acc.num_batches()) throw ShapeMismatch("one batch id per stored batch required");
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint(Checkpoint::kVersion);
  w.uint(cp.physics_hash);
  w.uint(static_cast<std::uint32_t>(cp.config_text.size()));
  w.bytes(cp.config_text.data(), cp.config_text.size());
  w.uint(cp.total_batches);
  w.uint(static_cast<std::uint64_t>(acc.num_times()));
  for (double t : acc.save_times()) w.real(t);
  w.uint(static_cast<std::uint32_t>(acc.num_batches()));
  for (std::size_t b = 0; b < acc.num_batches(); ++b) {
    const BatchMoments& batch = acc.batch(b);
    w.uint(cp.batch_ids[b]);
    w.uint(batch.first_traj);
    w.uint(batch.n_traj);
    w.uint(batch.n_used);
    w.uint(batch.n_diverged);
    for (Eigen::Index t = 0; t < batch.sums.cols(); ++t)
      for (Eigen::Index i = 0; i < batch.sums.rows(); ++i) {
        w.real(batch.sums(i, t).real());
        w.real(batch.sums(i, t).imag());
      }
  }
  std::string out = w.str();
  Writer tail;
  tail.uint(fnv1a(out));
  return out + tail.str();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 8) throw CheckpointMismatch("checkpoint is truncated");
  const std::size_t body = bytes.size() - 8;
  Reader r(bytes, body);

  char magic[4];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CheckpointMismatch("not a checkpoint file");
  const auto version = r.uint<std::uint32_t>();
  if (version != Checkpoint::kVersion)
    throw CheckpointMismatch("unsupported checkpoint version " + std::to_string(version));

  std::uint64_t stored = 0;
  for (std::size_t k = 0; k < 8; ++k)
    stored |= std::uint64_t(static_cast<unsigned char>(bytes[body + k])) << (8 * k);
  if (stored != fnv1a(std::string_view(bytes).substr(0, body))) throw CheckpointMismatch("checkpoint checksum mismatch");

  Checkpoint cp;
  cp.physics_hash = r.uint<std::uint64_t>();
  cp.config_text.resize(r.uint<std::uint32_t>());
  r.bytes(cp.config_text.data(), cp.config_text.size());
  cp.total_batches = r.uint<std::uint32_t>();
  const auto n_times = r.uint<std::uint64_t>();
  if (n_times > (body - r.position()) / 8) throw CheckpointMismatch("checkpoint is truncated");
  std::vector<double> times(n_times);
  for (auto& t : times) t = r.real();
  cp.accumulator = MomentAccumulator(times);
  const auto n_batches = r.uint<std::uint32_t>();
  if (n_batches > cp.total_batches) throw CheckpointMismatch("more stored batches than the run has");
  for (std::uint32_t b = 0; b < n_batches; ++b) {
    cp.batch_ids.push_back(r.uint<std::uint32_t>());
    BatchMoments batch;
    batch.first_traj = r.uint<std::uint64_t>();
    batch.n_traj = r.uint<std::uint64_t>();
    batch.n_used = r.uint<std::uint64_t>();
    batch.n_diverged = r.uint<std::uint64_t>();
    if (cp.batch_ids.size() > 1 && cp.batch_ids.back() <= cp.batch_ids[cp.batch_ids.size() - 2])
      throw CheckpointMismatch("checkpoint batches out of order");
    batch.sums = MomentSums(kNumMonomials, static_cast<Eigen::Index>(n_times));
    for (Eigen::Index t = 0; t < batch.sums.cols(); ++t)
      for (Eigen::Index i = 0; i < batch.sums.rows(); ++i) {
        const double re = r.real();
        const double im = r.real();
        batch.sums(i, t) = {re, im};
      }
    cp.accumulator.add_batch(std::move(batch));
  }
  if (r.position() != body) throw CheckpointMismatch("trailing bytes in checkpoint");
  return cp;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointMismatch("cannot read checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

}  // namespace wdimer
