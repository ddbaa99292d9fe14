#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dssm/trainer.hpp"

namespace dssm {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'S', 'M', 'C', 'K', 'P', 'T'};

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    v = to_little(v);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s, bool wide) {
    if (wide) put<std::uint64_t>(s.size());
    else put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_doubles(std::span<const double> values) {
    for (double d : values) put(d);
  }
  std::vector<unsigned char> take() { return std::move(bytes_); }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            "checkpoint truncated while reading " + std::string(what) + ": needed " +
                                std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                                ", only " + std::to_string(bytes_.size() - pos_) + " remain (" +
                                std::to_string(n - (bytes_.size() - pos_)) + " bytes missing)");
    }
  }
  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  std::string get_string(bool wide, const char* what) {
    const std::uint64_t n = wide ? get<std::uint64_t>(what) : get<std::uint32_t>(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> get_doubles(std::size_t n, const std::string& what) {
    need(n * sizeof(double), what.c_str());
    std::vector<double> out(n);
    for (double& d : out) d = get<double>(what.c_str());
    return out;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  for (char c : kMagic) w.put(c);
  w.put<std::uint32_t>(ck.version);
  w.put_string(ck.config_echo, true);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    w.put_string(name, false);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.put<std::uint64_t>(d);
  }
  for (const auto& [name, t] : ck.tensors) w.put_doubles(t.data());

  const AdamState& opt = ck.optimizer;
  w.put<std::uint64_t>(opt.t);
  w.put(opt.config.lr);
  w.put(opt.config.beta1);
  w.put(opt.config.beta2);
  w.put(opt.config.eps);
  const bool has_moments = opt.m.size() == ck.tensors.size() && !ck.tensors.empty();
  w.put<std::uint8_t>(has_moments ? 1 : 0);
  if (has_moments) {
    for (const auto& m : opt.m) w.put_doubles(m);
    for (const auto& v : opt.v) w.put_doubles(v);
  }
  w.put_string(ck.rng_state, true);
  w.put<std::uint64_t>(ck.epoch);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(CheckpointError::Kind::BadHeader, "not a checkpoint file (bad magic header)");
  }
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.get<char>("magic");

  Checkpoint ck;
  ck.version = r.get<std::uint32_t>("version");
  if (ck.version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::Version,
                          "checkpoint format version " + std::to_string(ck.version) +
                              " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  ck.config_echo = r.get_string(true, "config");
  const std::uint32_t count = r.get<std::uint32_t>("tensor count");

  std::vector<std::pair<std::string, Shape>> table;
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.get_string(false, "tensor name");
    if (!seen.insert(name).second) {
      throw CheckpointError(CheckpointError::Kind::Corrupt, "checkpoint lists tensor '" + name + "' twice");
    }
    const std::uint32_t rank = r.get<std::uint32_t>("tensor rank");
    if (rank > 8) {
      throw CheckpointError(CheckpointError::Kind::Corrupt,
                            "tensor '" + name + "' has implausible rank " + std::to_string(rank));
    }
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>("tensor dims");
    table.emplace_back(std::move(name), std::move(shape));
  }
  for (auto& [name, shape] : table) {
    auto values = r.get_doubles(numel(shape), "payload of '" + name + "'");
    ck.tensors.emplace_back(name, Tensor::from(shape, std::move(values)));
  }

  AdamState& opt = ck.optimizer;
  opt.t = r.get<std::uint64_t>("optimizer step");
  opt.config.lr = r.get<double>("optimizer lr");
  opt.config.beta1 = r.get<double>("optimizer beta1");
  opt.config.beta2 = r.get<double>("optimizer beta2");
  opt.config.eps = r.get<double>("optimizer eps");
  const auto has_moments = r.get<std::uint8_t>("optimizer flags");
  if (has_moments > 1) throw CheckpointError(CheckpointError::Kind::Corrupt, "bad optimizer flag byte");
  if (has_moments) {
    for (auto& [name, shape] : table) opt.m.push_back(r.get_doubles(numel(shape), "first moment of '" + name + "'"));
    for (auto& [name, shape] : table) opt.v.push_back(r.get_doubles(numel(shape), "second moment of '" + name + "'"));
  }
  ck.rng_state = r.get_string(true, "rng state");
  ck.epoch = r.get<std::uint64_t>("epoch");
  if (!r.at_end()) {
    throw CheckpointError(CheckpointError::Kind::Corrupt,
                          "checkpoint has " + std::to_string(bytes.size() - r.pos()) + " trailing bytes");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write checkpoint '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open checkpoint '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

void load_into(const Checkpoint& ck, const ModelParams& params) {
  std::unordered_map<std::string, const Tensor*> stored;
  for (const auto& [name, t] : ck.tensors) stored.emplace(name, &t);
  const NamedTensors targets = params.named();
  std::unordered_set<std::string> wanted;
  for (const auto& [name, t] : targets) wanted.insert(name);
  for (const auto& [name, t] : ck.tensors) {
    if (!wanted.count(name)) {
      throw CheckpointError(CheckpointError::Kind::UnknownTensor,
                            "checkpoint tensor '" + name + "' is unknown to this model configuration");
    }
  }
  for (const auto& [name, target] : targets) {
    auto it = stored.find(name);
    if (it == stored.end()) {
      throw CheckpointError(CheckpointError::Kind::MissingTensor, "checkpoint lacks tensor '" + name + "'");
    }
    if (it->second->shape() != target.shape()) {
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                            "tensor '" + name + "' has shape " + shape_str(it->second->shape()) +
                                " in the checkpoint but the model expects " + shape_str(target.shape()));
    }
  }
  for (const auto& [name, target] : targets) {
    Tensor t = target;
    const auto src = stored.at(name)->data();
    std::copy(src.begin(), src.end(), t.data_mut().begin());
  }
}

std::string describe(const ModelConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "M = " << c.M << "\nT = " << c.T << "\nH = " << c.H << "\nD = " << c.D << "\nP = " << c.P
      << "\nasp_hidden = " << c.asp_width() << "\n";
  for (Component comp : kComponents) {
    const DeltaBand& b = c.bands[static_cast<std::size_t>(comp)];
    out << "delta_min_" << component_name(comp) << " = " << b.min << "\n";
    out << "delta_max_" << component_name(comp) << " = " << b.max << "\n";
  }
  out << "eps_norm = " << c.eps_norm << "\nln_eps = " << c.ln_eps << "\nuse_gcrm = "
      << (c.use_gcrm ? "true" : "false") << "\nuse_gtssm = " << (c.use_gtssm ? "true" : "false")
      << "\nscan = " << (c.scan == ssm::ScanAlgo::Parallel ? "parallel" : "sequential") << "\n";
  return out.str();
}

}  // namespace dssm
