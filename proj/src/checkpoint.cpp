#include "asym/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "asym/errors.hpp"
#include "asym/rng.hpp"
#include "json.hpp"

namespace asym {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'A', 'S', 'Y', 'M', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

void put_doubles(std::vector<unsigned char>& out, const std::vector<double>& v) {
  const auto* p = reinterpret_cast<const unsigned char*>(v.data());
  out.insert(out.end(), p, p + v.size() * sizeof(double));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : bytes_(b) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::vector<double> doubles(std::size_t n) {
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> serialize_model(const Model& model) {
  nlohmann::json header;
  header["arch"] = model.arch().to_string();
  header["seed"] = model.seed();
  header["bn_epsilon"] = model.bn_epsilon();
  header["param_count"] = model.params().size();
  auto channels = nlohmann::json::array();
  for (const auto& s : model.bn_state()) channels.push_back(s.running_mean.size());
  header["bn_channels"] = channels;
  const std::string h = header.dump();

  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(h.size()));
  out.insert(out.end(), h.begin(), h.end());
  put_doubles(out, model.params().storage());
  put_doubles(out, model.init_snapshot().storage());
  for (const auto& s : model.bn_state()) {
    put_doubles(out, s.running_mean);
    put_doubles(out, s.running_var);
  }
  put<std::uint64_t>(out, fnv1a(out.data(), out.size()));
  return out;
}

Model deserialize_model(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a checkpoint file (bad magic)");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a(bytes.data(), body)) throw FormatError("checkpoint hash mismatch");

  Reader r(bytes);
  r.text(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto hlen = r.get<std::uint32_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.text(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  Architecture arch = Architecture::parse(header.at("arch").get<std::string>());
  const auto count = header.at("param_count").get<std::size_t>();
  if (count != arch.param_layout()->size()) throw FormatError("checkpoint parameter count mismatch");
  ParamVector params(arch.param_layout(), r.doubles(count));
  ParamVector init(arch.param_layout(), r.doubles(count));
  std::vector<BnState> bn;
  for (const auto& c : header.at("bn_channels")) {
    const auto n = c.get<std::size_t>();
    BnState s;
    s.running_mean = r.doubles(n);
    s.running_var = r.doubles(n);
    bn.push_back(std::move(s));
  }
  if (r.pos() != body) throw FormatError("trailing bytes in checkpoint");
  return Model(std::move(arch), std::move(params), std::move(bn), std::move(init),
               header.at("seed").get<std::uint64_t>(), header.at("bn_epsilon").get<double>());
}

void save_checkpoint(const Model& model, const std::string& path) {
  const auto bytes = serialize_model(model);
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

std::string checkpoint_id(const Model& model) {
  const auto bytes = serialize_model(model);
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes.data(), bytes.size());
  return os.str();
}

}  // namespace asym
