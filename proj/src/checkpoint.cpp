#include "spanmetric/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <json.hpp>

#include "spanmetric/error.hpp"
#include "spanmetric/io.hpp"
#include "spanmetric/version.hpp"

namespace spanmetric::net {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'M', 'C', 'K', 'P', 'T', '\0'};

nlohmann::json config_json(const EncoderConfig& c) {
  return {{"bucket_count", c.bucket_count}, {"model_dim", c.model_dim}, {"layers", c.layers},
          {"heads", c.heads},               {"ff_dim", c.ff_dim},       {"max_length", c.max_length},
          {"head_hidden", c.head_hidden},   {"layer_mix", c.layer_mix}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.bucket_count = j.at("bucket_count").get<int>();
  c.model_dim = j.at("model_dim").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.max_length = j.at("max_length").get<int>();
  c.head_hidden = j.at("head_hidden").get<int>();
  c.layer_mix = j.at("layer_mix").get<bool>();
  return c;
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ConfigError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

std::string serialize_checkpoint(const Parameters& params) {
  const Layout& lay = params.layout();
  nlohmann::json header;
  header["format"] = "spanmetric-checkpoint";
  header["toolkit_version"] = kVersion;
  header["config"] = config_json(lay.config);
  auto& slots = header["slots"];
  slots = nlohmann::json::array();
  for (const auto& s : lay.slots) slots.push_back({s.name, s.rows, s.cols});
  const std::string h = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, h.size());
  out += h;
  put_le<std::uint64_t>(out, params.size());
  for (double v : params.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Parameters deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("not a spanmetric checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto hlen = get_le<std::uint64_t>(bytes, pos);
  if (pos + hlen > bytes.size()) throw ConfigError("checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint header unreadable: ") + e.what());
  }
  pos += hlen;
  EncoderConfig cfg;
  try {
    cfg = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint config unreadable: ") + e.what());
  }
  Parameters params(cfg);
  const auto& slots = header.at("slots");
  const auto& lay = params.layout();
  if (slots.size() != lay.slots.size()) throw ConfigError("checkpoint slot table does not match its config");
  for (std::size_t i = 0; i < lay.slots.size(); ++i) {
    if (slots[i].at(0).get<std::string>() != lay.slots[i].name ||
        slots[i].at(1).get<std::size_t>() != lay.slots[i].rows ||
        slots[i].at(2).get<std::size_t>() != lay.slots[i].cols) {
      throw ConfigError("checkpoint slot " + lay.slots[i].name + " does not match its config");
    }
  }
  const auto count = get_le<std::uint64_t>(bytes, pos);
  if (count != params.size()) throw ConfigError("checkpoint parameter count mismatch");
  if (pos + count * 8 != bytes.size()) throw ConfigError("checkpoint payload size mismatch");
  auto values = params.values();
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  }
  return params;
}

void save_checkpoint(const Parameters& params, const std::string& path) {
  io::atomic_write(path, serialize_checkpoint(params));
}

Parameters load_checkpoint(const std::string& path, const std::optional<EncoderConfig>& expected) {
  Parameters p = deserialize_checkpoint(io::read_file(path));
  if (expected && !(p.config() == *expected)) {
    throw ConfigError("checkpoint " + path + " was trained with a different encoder config");
  }
  return p;
}

}  // namespace spanmetric::net
