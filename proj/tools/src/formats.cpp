#include "ata/cli/formats.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ata/error.hpp"

namespace ata::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint32_t kFvolVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::size_t kFvolHeader = 4 + 4 * 6;

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::string what) : in_(in), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError(what_ + ": truncated at byte " + std::to_string(pos_));
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::string what_;
  std::size_t pos_ = 0;
};

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError(where + ": unknown key '" + key + "'");
  }
}

const json& required(const json& obj, const std::string& where, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(where + ": missing key '" + key + "'");
  return *it;
}

template <typename T>
T get_as(const json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
}

std::size_t get_size(const json& obj, const std::string& where, const std::string& key) {
  const json& v = required(obj, where, key);
  if (!v.is_number_unsigned()) throw FormatError(where + "." + key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<Permutation> perms_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw FormatError(where + ": expected an array of maps");
  std::vector<Permutation> perms;
  for (const json& m : arr) {
    try {
      perms.push_back(Permutation::from_map(get_as<std::vector<std::size_t>>(m, where)));
    } catch (const std::invalid_argument& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return perms;
}

json perms_to_json(const std::vector<Permutation>& perms) {
  json arr = json::array();
  for (const auto& p : perms) arr.push_back(std::vector<std::size_t>(p.map().begin(), p.map().end()));
  return arr;
}

}  // namespace

std::vector<std::uint8_t> encode_fvol(const FeatureVolume& x, Dtype dtype) {
  Writer w;
  w.bytes("FVOL", 4);
  w.uint<std::uint32_t>(kFvolVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(dtype));
  for (std::size_t dim : {x.t_len(), x.h(), x.w(), x.c()}) w.uint<std::uint32_t>(static_cast<std::uint32_t>(dim));
  for (double v : x.values()) {
    if (dtype == Dtype::f64)
      w.f64(v);
    else
      w.f32(static_cast<float>(v));
  }
  return w.take();
}

FeatureVolume decode_fvol(const std::vector<std::uint8_t>& bytes, Dtype* dtype) {
  Reader r(bytes, "FVOL");
  if (r.str(4) != "FVOL") throw FormatError("FVOL: bad magic");
  if (const auto v = r.uint<std::uint32_t>(); v != kFvolVersion)
    throw FormatError("FVOL: unsupported version " + std::to_string(v));
  const auto code = r.uint<std::uint32_t>();
  if (code > 1) throw FormatError("FVOL: unknown dtype " + std::to_string(code));
  const auto dt = static_cast<Dtype>(code);
  std::array<std::size_t, 4> dims{};
  for (auto& d : dims) {
    d = r.uint<std::uint32_t>();
    if (d == 0) throw FormatError("FVOL: zero dimension");
  }
  const std::size_t count = dims[0] * dims[1] * dims[2] * dims[3];
  const std::size_t width = dt == Dtype::f64 ? 8 : 4;
  if (r.remaining() != count * width)
    throw FormatError("FVOL: payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                      std::to_string(count * width));
  std::vector<double> values(count);
  for (auto& v : values) v = dt == Dtype::f64 ? r.f64() : static_cast<double>(r.f32());
  if (dtype) *dtype = dt;
  return FeatureVolume(dims[0], dims[1], dims[2], dims[3], std::move(values));
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_fvol(const fs::path& path, const FeatureVolume& x, Dtype dtype) { write_bytes(path, encode_fvol(x, dtype)); }

FeatureVolume read_fvol(const fs::path& path, Dtype* dtype) { return decode_fvol(read_bytes(path), dtype); }

std::string plan_to_json(const AlignmentPlan& plan) {
  json j{{"T", plan.t_len}, {"H", plan.h}, {"W", plan.w}, {"perms", perms_to_json(plan.perms)}};
  return j.dump(1) + "\n";
}

AlignmentPlan plan_from_json(const std::string& text) {
  const json j = parse_json(text, "plan");
  reject_unknown(j, "plan", {"T", "H", "W", "perms"});
  AlignmentPlan plan;
  plan.t_len = get_size(j, "plan", "T");
  plan.h = get_size(j, "plan", "H");
  plan.w = get_size(j, "plan", "W");
  plan.perms = perms_from_json(required(j, "plan", "perms"), "plan.perms");
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }
  return plan;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return hex.str();
}

std::string dataset_to_json(const DatasetIndex& index) {
  json clips = json::array();
  for (const auto& c : index.clips) {
    json e{{"file", c.file}, {"split", c.split}};
    if (c.label) e["label"] = *c.label;
    if (c.truth) e["truth"] = perms_to_json(*c.truth);
    clips.push_back(std::move(e));
  }
  json j{{"kind", index.kind}, {"seed", index.seed}, {"T", index.t}, {"H", index.h},
         {"W", index.w},       {"C", index.c},       {"clips", std::move(clips)}};
  return j.dump(1) + "\n";
}

DatasetIndex dataset_from_json(const std::string& text) {
  const json j = parse_json(text, "dataset");
  reject_unknown(j, "dataset", {"kind", "seed", "T", "H", "W", "C", "clips"});
  DatasetIndex index;
  index.kind = get_as<std::string>(required(j, "dataset", "kind"), "dataset.kind");
  index.seed = get_as<std::uint64_t>(required(j, "dataset", "seed"), "dataset.seed");
  index.t = get_size(j, "dataset", "T");
  index.h = get_size(j, "dataset", "H");
  index.w = get_size(j, "dataset", "W");
  index.c = get_size(j, "dataset", "C");
  const json& clips = required(j, "dataset", "clips");
  if (!clips.is_array()) throw FormatError("dataset.clips: expected an array");
  for (const json& e : clips) {
    reject_unknown(e, "dataset.clips[]", {"file", "split", "label", "truth"});
    ClipRecord rec;
    rec.file = get_as<std::string>(required(e, "dataset.clips[]", "file"), "file");
    rec.split = get_as<std::string>(required(e, "dataset.clips[]", "split"), "split");
    if (e.contains("label")) rec.label = get_size(e, "dataset.clips[]", "label");
    if (e.contains("truth")) rec.truth = perms_from_json(e["truth"], "dataset.clips[].truth");
    index.clips.push_back(std::move(rec));
  }
  return index;
}

MotionDataset load_dataset(const fs::path& dir) {
  const fs::path index_path = dir / "dataset.json";
  if (!fs::exists(index_path)) throw FormatError("dataset missing: " + index_path.string());
  const DatasetIndex index = dataset_from_json(read_text(index_path));
  MotionDataset ds;
  for (const auto& rec : index.clips) {
    SyntheticClip clip;
    clip.volume = read_fvol(dir / rec.file);
    if (clip.volume.t_len() != index.t || clip.volume.h() != index.h || clip.volume.w() != index.w ||
        clip.volume.c() != index.c)
      throw FormatError("dataset: " + rec.file + " does not match the indexed dims");
    clip.label = rec.label;
    clip.truth = rec.truth;
    (rec.split == "val" ? ds.val : ds.train).push_back(std::move(clip));
  }
  return ds;
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  const json j = parse_json(text, "config");
  reject_unknown(j, "config", {"model", "hyper", "data", "output"});

  RunConfig rc;
  const json& m = required(j, "config", "model");
  reject_unknown(m, "model",
                 {"t_len", "h", "w", "c_in", "d", "heads", "depth", "classes", "variant", "seed", "max_joint_tokens"});
  rc.model.t_len = get_size(m, "model", "t_len");
  rc.model.h = get_size(m, "model", "h");
  rc.model.w = get_size(m, "model", "w");
  rc.model.c_in = get_size(m, "model", "c_in");
  rc.model.d = get_size(m, "model", "d");
  rc.model.heads = get_size(m, "model", "heads");
  rc.model.depth = get_size(m, "model", "depth");
  rc.model.classes = get_size(m, "model", "classes");
  rc.model.seed = get_size(m, "model", "seed");
  if (m.contains("max_joint_tokens")) rc.model.max_joint_tokens = get_size(m, "model", "max_joint_tokens");
  try {
    rc.model.variant = parse_variant(get_as<std::string>(required(m, "model", "variant"), "model.variant"));
    rc.model.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model: ") + e.what());
  }

  const json& h = required(j, "config", "hyper");
  reject_unknown(h, "hyper", {"lr", "epochs", "batch", "seed", "momentum", "threads"});
  rc.hyper.lr = get_as<double>(required(h, "hyper", "lr"), "hyper.lr");
  rc.hyper.epochs = get_size(h, "hyper", "epochs");
  rc.hyper.batch = get_size(h, "hyper", "batch");
  rc.hyper.seed = get_size(h, "hyper", "seed");
  if (h.contains("momentum")) rc.hyper.momentum = get_as<double>(h["momentum"], "hyper.momentum");
  if (h.contains("threads")) rc.hyper.threads = get_size(h, "hyper", "threads");
  if (rc.hyper.batch == 0) throw FormatError("hyper.batch must be positive");

  auto resolve = [&](const fs::path& p) { return p.is_relative() && !base_dir.empty() ? base_dir / p : p; };
  rc.data = resolve(get_as<std::string>(required(j, "config", "data"), "config.data"));
  const json& o = required(j, "config", "output");
  reject_unknown(o, "output", {"metrics_csv", "checkpoint"});
  rc.output.metrics_csv = resolve(get_as<std::string>(required(o, "output", "metrics_csv"), "output.metrics_csv"));
  rc.output.checkpoint = resolve(get_as<std::string>(required(o, "output", "checkpoint"), "output.checkpoint"));
  return rc;
}

std::vector<std::uint8_t> encode_checkpoint(ModelParams& params) {
  json tensors = json::array();
  std::size_t offset = 0;
  params.for_each([&](const std::string& name, Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size() * sizeof(double);
  });
  const std::string manifest = json{{"tensors", tensors}}.dump();

  Writer w;
  w.bytes("ATCK", 4);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint64_t>(manifest.size());
  w.bytes(manifest.data(), manifest.size());
  params.for_each([&](const std::string&, Tensor& t) {
    for (double v : t.data()) w.f64(v);
  });
  return w.take();
}

void decode_checkpoint(const std::vector<std::uint8_t>& bytes, ModelParams& params) {
  Reader r(bytes, "checkpoint");
  if (r.str(4) != "ATCK") throw FormatError("checkpoint: bad magic");
  if (const auto v = r.uint<std::uint32_t>(); v != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(v));
  const auto len = r.uint<std::uint64_t>();
  r.need(len);
  const json manifest = parse_json(r.str(len), "checkpoint manifest");
  const json& tensors = required(manifest, "checkpoint manifest", "tensors");
  const std::size_t payload_start = r.pos();

  std::size_t index = 0;
  params.for_each([&](const std::string& name, Tensor& t) {
    if (index >= tensors.size()) throw FormatError("checkpoint: missing tensor " + name);
    const json& e = tensors[index++];
    if (get_as<std::string>(e.at("name"), "name") != name)
      throw FormatError("checkpoint: expected tensor " + name + ", found " + e.at("name").dump());
    if (get_as<Shape>(e.at("shape"), "shape") != t.shape())
      throw FormatError("checkpoint: shape mismatch for " + name);
    const auto offset = get_as<std::size_t>(e.at("offset"), "offset");
    if (bytes.size() < payload_start + offset + t.size() * sizeof(double))
      throw FormatError("checkpoint: payload too short for " + name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint64_t bits = 0;
      const std::size_t at = payload_start + offset + i * sizeof(double);
      for (std::size_t b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[at + b]) << (8 * b);
      t[i] = std::bit_cast<double>(bits);
    }
  });
  if (index != tensors.size()) throw FormatError("checkpoint: unexpected extra tensors");
}

std::string metrics_csv(const std::vector<EpochMetrics>& history) {
  std::ostringstream out;
  out << "epoch,loss,train_acc,val_acc\n" << std::setprecision(17);
  for (const auto& m : history) out << m.epoch << ',' << m.loss << ',' << m.train_acc << ',' << m.val_acc << '\n';
  return out.str();
}

}  // namespace ata::cli
