#include "advaug/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "advaug/error.hpp"

namespace advaug {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'A', 'A', 'N', 'M'};

json config_to_json(const ModelConfig& c) {
  return json{{"input_dim", c.input_dim},
              {"hidden_widths", c.hidden_widths},
              {"num_classes", c.num_classes},
              {"split_index", c.split_index},
              {"leaky_slope", c.leaky_slope},
              {"disc_hidden", c.disc_hidden},
              {"disc_dropout_rate", c.disc_dropout_rate}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.split_index = j.at("split_index").get<std::size_t>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.disc_hidden = j.at("disc_hidden").get<std::size_t>();
  c.disc_dropout_rate = j.at("disc_dropout_rate").get<double>();
  return c;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      std::ostringstream msg;
      msg << "checkpoint truncated while reading " << what << " at byte offset " << pos_
          << " (need " << n << " bytes, " << bytes_.size() - pos_ << " left)";
      throw FormatError(msg.str());
    }
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }

  double f64() {
    auto s = take(8, "tensor payload");
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(s[i]);
    return std::bit_cast<double>(bits);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string model_config_json(const ModelConfig& config) { return config_to_json(config).dump(); }

ModelConfig model_config_from_json(std::string_view text) {
  try {
    return config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid model config JSON: ") + e.what());
  }
}

std::string serialize_checkpoint(const Model& model) {
  json tensors = json::array();
  for_each_param(model.params, [&](const std::string& name, ParamGroup, const Tensor& t) {
    tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  const std::string header =
      json{{"config", config_to_json(model.config)}, {"tensors", tensors}}.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for_each_param(model.params, [&](const std::string&, ParamGroup, const Tensor& t) {
    for (double v : t.data()) put_f64(out, v);
  });
  return out;
}

Model deserialize_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string_view(kMagic, sizeof kMagic))
    throw FormatError("not a checkpoint file (bad magic)");
  const std::uint32_t version = in.u32("version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t header_len = in.u32("header length");
  const std::string_view header_text = in.take(header_len, "header");

  Model model;
  json header;
  try {
    header = json::parse(header_text);
    model.config = config_from_json(header.at("config"));
    model.config.validate();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint holds an invalid model config: ") + e.what());
  }
  model.params = zero_params(model.config);

  std::vector<std::tuple<std::string, std::size_t, std::size_t>> listed;
  try {
    for (const auto& t : header.at("tensors"))
      listed.emplace_back(t.at("name").get<std::string>(), t.at("rows").get<std::size_t>(),
                          t.at("cols").get<std::size_t>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed tensor list: ") + e.what());
  }

  std::size_t index = 0;
  for_each_param(model.params, [&](const std::string& name, ParamGroup, Tensor& t) {
    if (index >= listed.size() || std::get<0>(listed[index]) != name ||
        std::get<1>(listed[index]) != t.rows() || std::get<2>(listed[index]) != t.cols())
      throw FormatError("checkpoint tensor list does not match its config at '" + name + "'");
    ++index;
  });
  if (index != listed.size()) throw FormatError("checkpoint lists unexpected extra tensors");

  for_each_param(model.params, [&](const std::string& name, ParamGroup, Tensor& t) {
    for (double& v : t.data()) {
      v = in.f64();
      if (!std::isfinite(v)) throw FormatError("non-finite value in tensor '" + name + "'");
    }
  });
  if (in.remaining() != 0)
    throw FormatError("checkpoint has " + std::to_string(in.remaining()) + " trailing bytes");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace advaug
