#include "fpu/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "fpu/error.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace fpu::models {

namespace {

constexpr char kMagic[8] = {'F', 'P', 'U', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& data, std::string source) : data_(data), source_(std::move(source)) {}

  template <typename T>
  T get(const char* what) {
    T value;
    std::memcpy(&value, take(sizeof(T), what), sizeof(T));
    return value;
  }

  const char* take(std::size_t n, const char* what) {
    if (n > data_.size() - pos_) {
      throw ParseError(source_ + ": truncated checkpoint while reading " + what, pos_);
    }
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

nlohmann::json config_to_json(const ModelConfig& config) {
  return nlohmann::json{{"task", to_string(config.task)},
                        {"head_mode", to_string(config.head_mode)},
                        {"base_channels", config.base_channels},
                        {"depth", config.depth},
                        {"dropout_rate", config.dropout_rate},
                        {"height", config.height},
                        {"width", config.width},
                        {"seed", config.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.task = parse_task(j.at("task").get<std::string>());
    c.head_mode = parse_head_mode(j.at("head_mode").get<std::string>());
    c.base_channels = j.at("base_channels").get<std::size_t>();
    c.depth = j.at("depth").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.height = j.at("height").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model config: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string config = config_to_json(model.config()).dump();
  put<std::uint64_t>(out, config.size());
  out += config;
  const auto& params = model.named_parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) put<std::uint64_t>(out, d);
    const auto values = p.value.values();
    out.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open checkpoint for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing checkpoint: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open checkpoint: " + path.string());
  const std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  Reader in(data, path.string());

  if (std::memcmp(in.take(sizeof(kMagic), "magic"), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not a checkpoint file", 0);
  }
  const std::size_t version_at = in.pos();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const auto config_len = in.get<std::uint64_t>("config length");
  const std::size_t config_at = in.pos();
  const char* config_text = in.take(config_len, "config");
  nlohmann::json config_json;
  try {
    config_json = nlohmann::json::parse(config_text, config_text + config_len);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": malformed config JSON", config_at);
  }
  Model model(config_from_json(config_json));

  const auto count = in.get<std::uint32_t>("parameter count");
  std::vector<NamedParameter> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint32_t>("parameter name length");
    std::string name(in.take(name_len, "parameter name"), name_len);
    const auto rank = in.get<std::uint32_t>("parameter rank");
    if (rank == 0 || rank > 8) throw ParseError(path.string() + ": bad rank for " + name, in.pos() - 4);
    ndgrad::Shape shape(rank);
    for (auto& d : shape) d = in.get<std::uint64_t>("parameter shape");
    const std::size_t numel = ndgrad::shape_numel(shape);
    std::vector<double> values(numel);
    std::memcpy(values.data(), in.take(numel * sizeof(double), "parameter values"), numel * sizeof(double));
    params.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  if (!in.done()) throw ParseError(path.string() + ": trailing bytes after parameters", in.pos());
  model.load_parameters(params);
  return model;
}

}  // namespace fpu::models
