#include "vqvol/checkpoint.hpp"

#include "vqvol/bytes.hpp"
#include "vqvol/volume.hpp"

#include <map>
#include <stdexcept>

namespace vqvol {

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_floats(ByteWriter& w, const float* data, Index n) {
  w.u64(static_cast<std::uint64_t>(n));
  w.f32_array(data, static_cast<std::size_t>(n));
}

std::vector<float> read_floats(ByteReader& r, Index expected, const std::string& what) {
  const std::uint64_t n = r.u64();
  if (expected >= 0 && n != static_cast<std::uint64_t>(expected)) {
    throw FormatError(FormatError::Code::config_mismatch, "checkpoint: " + what + " has " + std::to_string(n) +
                                                              " values, expected " + std::to_string(expected));
  }
  if (n > r.remaining() / 4) r.need(n * 4);
  std::vector<float> out(static_cast<std::size_t>(n));
  r.f32_array(out.data(), out.size());
  return out;
}

// Parameters of a const model; collect() only hands out pointers.
ParameterList<float> params_of(const Model<float>& m) { return const_cast<Model<float>&>(m).parameters(); }

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const TrainingState& s) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.str(experiment_config_json(s.config));
  w.u64(static_cast<std::uint64_t>(s.step));
  w.u64(s.data_seed);
  w.str(s.mode);

  const ParameterList<float> params = params_of(s.model);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (Index d : t->shape()) w.u64(static_cast<std::uint64_t>(d));
    write_floats(w, t->values().data(), t->size());
  }

  const auto& books = s.model.codebooks();
  w.u32(static_cast<std::uint32_t>(books.size()));
  for (const auto& cb : books) {
    w.u64(static_cast<std::uint64_t>(cb.size()));
    w.u64(static_cast<std::uint64_t>(cb.dim()));
    write_floats(w, cb.codes().values().data(), cb.codes().size());
    write_floats(w, cb.ema_counts().data(), cb.ema_counts().size());
    write_floats(w, cb.ema_sums().data(), cb.ema_sums().size());
  }

  w.u64(static_cast<std::uint64_t>(s.adam.steps()));
  w.f64(s.adam.last_lr());
  w.u32(static_cast<std::uint32_t>(s.adam.slots().size()));
  for (const auto& slot : s.adam.slots()) {
    w.str(slot.name);
    w.u64(static_cast<std::uint64_t>(slot.m.size()));
    for (Index i = 0; i < slot.m.size(); ++i) w.f64(slot.m(i));
    for (Index i = 0; i < slot.v.size(); ++i) w.f64(slot.v(i));
  }
  return w.take();
}

TrainingState deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "checkpoint");
  if (bytes.size() < 4) throw FormatError(FormatError::Code::bad_magic, "checkpoint: bad magic (file too short)");
  char magic[4];
  r.raw(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError(FormatError::Code::bad_magic, "checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw FormatError(FormatError::Code::bad_version, "checkpoint: unsupported version " + std::to_string(version));

  TrainingState s;
  s.config = parse_experiment_config(r.str());
  s.step = static_cast<long long>(r.u64());
  s.data_seed = r.u64();
  s.mode = r.str();
  s.model = Model<float>(s.config.model, 0);
  s.adam = Adam(AdamOptions{s.config.train.adam_beta1, s.config.train.adam_beta2, s.config.train.adam_epsilon});

  ParameterList<float> params = s.model.parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw FormatError(FormatError::Code::config_mismatch, "checkpoint: " + std::to_string(count) +
                                                              " tensors, model expects " + std::to_string(params.size()));
  }
  for (auto& [name, t] : params) {
    const std::string stored = r.str();
    if (stored != name) throw FormatError(FormatError::Code::config_mismatch, "checkpoint: tensor '" + stored + "' where '" + name + "' was expected");
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<Index>(r.u64());
    if (shape != t->shape()) {
      throw FormatError(FormatError::Code::config_mismatch, "checkpoint: tensor '" + name + "' has shape " + to_string(shape) +
                                                                ", model expects " + to_string(t->shape()));
    }
    const std::vector<float> v = read_floats(r, t->size(), name);
    t->mutable_values() = Eigen::Map<const VectorX<float>>(v.data(), static_cast<Index>(v.size()));
  }

  auto& books = s.model.codebooks();
  if (r.u32() != books.size()) throw FormatError(FormatError::Code::config_mismatch, "checkpoint: codebook count mismatch");
  for (std::size_t l = 0; l < books.size(); ++l) {
    auto& cb = books[l];
    const auto K = static_cast<Index>(r.u64());
    const auto D = static_cast<Index>(r.u64());
    if (K != cb.size() || D != cb.dim()) throw FormatError(FormatError::Code::config_mismatch, "checkpoint: codebook shape mismatch");
    const std::vector<float> codes = read_floats(r, K * D, "codebook codes");
    const std::vector<float> counts = read_floats(r, K, "codebook counts");
    const std::vector<float> sums = read_floats(r, K * D, "codebook sums");
    using M = Codebook<float>::Matrix;
    cb.set_codes(Eigen::Map<const M>(codes.data(), K, D));
    cb.set_ema_state(Eigen::Map<const VectorX<float>>(counts.data(), K), Eigen::Map<const M>(sums.data(), K, D));
  }

  const auto adam_steps = static_cast<long long>(r.u64());
  const double last_lr = r.f64();
  const std::uint32_t slots = r.u32();
  std::vector<Adam::Slot> restored;
  for (std::uint32_t i = 0; i < slots; ++i) {
    Adam::Slot slot;
    slot.name = r.str();
    const std::uint64_t n = r.u64();
    if (n > r.remaining() / 16) r.need(n * 16);
    slot.m.resize(static_cast<Index>(n));
    slot.v.resize(static_cast<Index>(n));
    for (Index k = 0; k < slot.m.size(); ++k) slot.m(k) = r.f64();
    for (Index k = 0; k < slot.v.size(); ++k) slot.v(k) = r.f64();
    restored.push_back(std::move(slot));
  }
  if (!restored.empty()) {
    if (restored.size() != params.size()) throw FormatError(FormatError::Code::config_mismatch, "checkpoint: optimizer state does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (restored[i].name != params[i].first || restored[i].m.size() != params[i].second->size()) {
        throw FormatError(FormatError::Code::config_mismatch, "checkpoint: optimizer slot '" + restored[i].name + "' does not match");
      }
    }
  }
  s.adam.restore(adam_steps, last_lr, std::move(restored));
  r.expect_end();
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const TrainingState& state) {
  write_file(path, serialize_checkpoint(state));
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace vqvol
